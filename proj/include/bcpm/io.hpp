#pragma once

#include <filesystem>
#include <string>

#include "bcpm/model.hpp"
#include "bcpm/sampler.hpp"

namespace bcpm {

// Dataset CSV: header "t,y1,...,yk", one row per time step.  Metadata
// (model id, theta, seed, T, d) goes to a JSON sidecar next to the CSV.
void save_dataset(const Dataset& data, const std::filesystem::path& csv_path);
Dataset load_dataset(const std::filesystem::path& csv_path);

// Chain CSV columns:
//   iteration,<param names...>,loglik,accepted,stage1_accepted,elapsed_ns
void save_chain_record(const ChainRecord& record,
                       const std::filesystem::path& csv_path);
ChainRecord load_chain_record(const std::filesystem::path& csv_path,
                              long warmup);

// SHA-1 of "blob <len>\0<content>", hex-encoded (what `git hash-object` prints).
std::string git_blob_hash(const std::string& content);
std::string git_blob_hash_file(const std::filesystem::path& path);

}  // namespace bcpm
