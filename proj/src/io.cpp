#include "bcpm/io.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace bcpm {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

void save_dataset(const Dataset& data, const std::filesystem::path& csv_path) {
  std::ostringstream csv;
  csv << "t";
  for (int k = 1; k <= data.obs_dim(); ++k) csv << ",y" << k;
  csv << "\n";
  for (int t = 0; t < data.T(); ++t) {
    csv << (t + 1);
    for (int k = 0; k < data.obs_dim(); ++k)
      csv << "," << format_double(data.observations(t, k));
    csv << "\n";
  }
  write_file(csv_path, csv.str());

  nlohmann::json meta;
  meta["model"] = data.model_id;
  meta["T"] = data.T();
  meta["d"] = data.obs_dim();
  meta["seed"] = data.seed;
  if (data.generating_theta.size() > 0) {
    std::vector<double> theta(data.generating_theta.data(),
                              data.generating_theta.data() + data.generating_theta.size());
    meta["theta"] = theta;
  }
  std::filesystem::path meta_path = csv_path;
  meta_path.replace_extension(".meta.json");
  write_file(meta_path, meta.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open " + csv_path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "dataset CSV is empty");
  const auto header = split_csv_line(line);
  require(!header.empty() && header[0] == "t",
          "dataset CSV must start with a 't' column");
  const int d = static_cast<int>(header.size()) - 1;
  require(d >= 1, "dataset CSV has no observation columns");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    require(static_cast<int>(fields.size()) == d + 1,
            "dataset CSV row has wrong field count");
    std::vector<double> row;
    for (int k = 1; k <= d; ++k) row.push_back(std::stod(fields[static_cast<std::size_t>(k)]));
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), "dataset CSV has no observations");

  Dataset data;
  data.observations.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (int k = 0; k < d; ++k)
      data.observations(static_cast<Eigen::Index>(t), k) = rows[t][static_cast<std::size_t>(k)];

  std::filesystem::path meta_path = csv_path;
  meta_path.replace_extension(".meta.json");
  if (std::filesystem::exists(meta_path)) {
    const nlohmann::json meta = nlohmann::json::parse(read_file(meta_path));
    data.model_id = meta.value("model", "");
    data.seed = meta.value("seed", std::uint64_t{0});
    if (meta.contains("theta")) {
      const auto theta = meta["theta"].get<std::vector<double>>();
      data.generating_theta =
          Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    }
  }
  return data;
}

void save_chain_record(const ChainRecord& record,
                       const std::filesystem::path& csv_path) {
  std::ostringstream csv;
  csv << "iteration";
  for (const auto& name : record.param_names) csv << "," << name;
  csv << ",loglik,accepted,stage1_accepted,elapsed_ns\n";
  for (Eigen::Index i = 0; i < record.draws.rows(); ++i) {
    csv << i;
    for (Eigen::Index p = 0; p < record.draws.cols(); ++p)
      csv << "," << format_double(record.draws(i, p));
    csv << "," << format_double(record.logliks[static_cast<std::size_t>(i)]) << ","
        << int(record.accepted[static_cast<std::size_t>(i)]) << ","
        << int(record.stage1_accepted[static_cast<std::size_t>(i)]) << ","
        << record.elapsed_ns[static_cast<std::size_t>(i)] << "\n";
  }
  write_file(csv_path, csv.str());
}

ChainRecord load_chain_record(const std::filesystem::path& csv_path, long warmup) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open " + csv_path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "chain CSV is empty");
  const auto header = split_csv_line(line);
  require(header.size() >= 6 && header.front() == "iteration",
          "chain CSV must start with an 'iteration' column");
  const std::array<std::string, 4> tail = {"loglik", "accepted",
                                           "stage1_accepted", "elapsed_ns"};
  for (std::size_t k = 0; k < tail.size(); ++k)
    require(header[header.size() - 4 + k] == tail[k],
            "chain CSV is missing column '" + tail[k] + "'");
  const int dim = static_cast<int>(header.size()) - 5;
  require(dim >= 1, "chain CSV has no parameter columns");

  ChainRecord record;
  record.warmup = warmup;
  record.param_names.assign(header.begin() + 1, header.begin() + 1 + dim);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    require(fields.size() == header.size(), "chain CSV row has wrong field count");
    std::vector<double> row;
    for (std::size_t k = 1; k < fields.size(); ++k) row.push_back(std::stod(fields[k]));
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), "chain CSV has no rows");
  record.draws.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int p = 0; p < dim; ++p)
      record.draws(static_cast<Eigen::Index>(i), p) = rows[i][static_cast<std::size_t>(p)];
    record.logliks.push_back(rows[i][static_cast<std::size_t>(dim)]);
    record.accepted.push_back(rows[i][static_cast<std::size_t>(dim) + 1] != 0.0);
    record.stage1_accepted.push_back(rows[i][static_cast<std::size_t>(dim) + 2] != 0.0);
    record.elapsed_ns.push_back(
        static_cast<std::int64_t>(rows[i][static_cast<std::size_t>(dim) + 3]));
  }
  require(warmup < static_cast<long>(rows.size()),
          "load_chain_record: warmup exceeds chain length");
  return record;
}

namespace {

// Compact SHA-1; only used for content-addressing run inputs.
class Sha1 {
 public:
  void update(const unsigned char* data, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
      buffer_[buffer_len_++] = data[i];
      ++total_len_;
      if (buffer_len_ == 64) {
        process_block();
        buffer_len_ = 0;
      }
    }
  }

  std::string hex_digest() {
    const std::uint64_t bit_len = total_len_ * 8;
    unsigned char pad = 0x80;
    update(&pad, 1);
    unsigned char zero = 0x00;
    while (buffer_len_ != 56) update(&zero, 1);
    for (int i = 7; i >= 0; --i) {
      unsigned char b = static_cast<unsigned char>((bit_len >> (8 * i)) & 0xff);
      update(&b, 1);
    }
    std::ostringstream ss;
    for (std::uint32_t word : h_)
      ss << std::hex << std::setw(8) << std::setfill('0') << word;
    return ss.str();
  }

 private:
  static std::uint32_t rotl(std::uint32_t x, int n) {
    return (x << n) | (x >> (32 - n));
  }

  void process_block() {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(buffer_[4 * i]) << 24) |
             (std::uint32_t(buffer_[4 * i + 1]) << 16) |
             (std::uint32_t(buffer_[4 * i + 2]) << 8) |
             std::uint32_t(buffer_[4 * i + 3]);
    for (int i = 16; i < 80; ++i)
      w[i] = rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    std::uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | ((~b) & d);
        k = 0x5a827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ed9eba1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8f1bbcdcu;
      } else {
        f = b ^ c ^ d;
        k = 0xca62c1d6u;
      }
      const std::uint32_t tmp = rotl(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rotl(b, 30);
      b = a;
      a = tmp;
    }
    h_[0] += a;
    h_[1] += b;
    h_[2] += c;
    h_[3] += d;
    h_[4] += e;
  }

  std::array<std::uint32_t, 5> h_ = {0x67452301u, 0xefcdab89u, 0x98badcfeu,
                                     0x10325476u, 0xc3d2e1f0u};
  unsigned char buffer_[64] = {};
  std::size_t buffer_len_ = 0;
  std::uint64_t total_len_ = 0;
};

}  // namespace

std::string git_blob_hash(const std::string& content) {
  Sha1 sha;
  const std::string header = "blob " + std::to_string(content.size());
  sha.update(reinterpret_cast<const unsigned char*>(header.data()), header.size() + 1);
  sha.update(reinterpret_cast<const unsigned char*>(content.data()), content.size());
  return sha.hex_digest();
}

std::string git_blob_hash_file(const std::filesystem::path& path) {
  return git_blob_hash(read_file(path));
}

}  // namespace bcpm
