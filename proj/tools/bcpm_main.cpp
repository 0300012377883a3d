// Experiment CLI: wires datasets, configs, samplers, and diagnostics into
// reproducible runs.  Subcommands: simulate, run, diagnose, experiment.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "bcpm/diagnostics.hpp"
#include "bcpm/io.hpp"
#include "bcpm/kalman.hpp"
#include "bcpm/lgss.hpp"
#include "bcpm/parallel.hpp"
#include "bcpm/sampler.hpp"
#include "bcpm/sort.hpp"
#include "bcpm/svm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bcpm;

namespace {

[[noreturn]] void config_error(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& context) {
  if (!obj.is_object()) config_error(context + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      config_error("unknown key '" + key + "' in " + context);
  }
}

Vector json_to_vector(const json& arr, const std::string& context) {
  if (!arr.is_array() || arr.empty())
    config_error(context + " must be a non-empty array of numbers");
  Vector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

struct RunConfig {
  json raw;
  std::unique_ptr<DisturbanceModel> model;
  // data source: exactly one of the two
  std::optional<fs::path> data_path;
  std::optional<std::tuple<Vector, int, std::uint64_t>> simulate;  // theta, T, seed
  SamplerConfig sampler;
  fs::path output_dir = ".";
  int workers = 0;  // 0: min(cores, S)
};

std::unique_ptr<DisturbanceModel> parse_model(const json& m) {
  check_keys(m, {"kind", "d", "M"}, "model");
  if (!m.contains("kind") || !m.contains("d"))
    config_error("model needs 'kind' and 'd'");
  const std::string kind = m["kind"].get<std::string>();
  const int d = m["d"].get<int>();
  if (kind == "lgss") {
    if (m.contains("M")) config_error("'M' only applies to the svm model");
    return std::make_unique<LgssModel>(d);
  }
  if (kind == "svm") return std::make_unique<SvmModel>(d, m.value("M", 3));
  config_error("model kind must be 'lgss' or 'svm'");
}

SamplerConfig parse_sampler(const json& s) {
  check_keys(s,
             {"kind", "S", "N", "rho_u", "trim", "iterations", "warmup",
              "target_accept", "adpf_pi", "sort_payload", "seed", "theta0",
              "freeze_schedule_after_warmup", "freeze_adaptation_after_warmup"},
             "sampler");
  SamplerConfig cfg;
  cfg.kind = sampler_kind_from_string(s.value("kind", "mpm"));
  cfg.S = s.value("S", cfg.S);
  cfg.N = s.value("N", cfg.N);
  cfg.rho_u = s.value("rho_u", cfg.rho_u);
  cfg.trim = s.value("trim", cfg.trim);
  cfg.iterations = s.value("iterations", cfg.iterations);
  cfg.warmup = s.value("warmup", cfg.warmup);
  cfg.target_accept = s.value("target_accept", cfg.target_accept);
  cfg.adpf_pi = s.value("adpf_pi", cfg.adpf_pi);
  cfg.seed = s.value("seed", cfg.seed);
  cfg.freeze_schedule_after_warmup =
      s.value("freeze_schedule_after_warmup", false);
  cfg.freeze_adaptation_after_warmup =
      s.value("freeze_adaptation_after_warmup", false);
  const std::string payload = s.value("sort_payload", "state");
  if (payload == "state")
    cfg.sort_payload = SortPayload::State;
  else if (payload == "disturbance")
    cfg.sort_payload = SortPayload::Disturbance;
  else
    config_error("sort_payload must be 'state' or 'disturbance'");
  if (s.contains("theta0")) cfg.theta0 = json_to_vector(s["theta0"], "theta0");
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open " + path.string());
  json raw = json::parse(in);
  check_keys(raw, {"model", "data", "sampler", "experiment", "output_dir", "workers"},
             "top level");
  if (!raw.contains("model")) config_error("missing 'model'");

  RunConfig cfg;
  cfg.model = parse_model(raw["model"]);
  if (raw.contains("data")) {
    const json& d = raw["data"];
    check_keys(d, {"simulate", "path"}, "data");
    if (d.contains("path") == d.contains("simulate"))
      config_error("data needs exactly one of 'path' or 'simulate'");
    if (d.contains("path")) {
      cfg.data_path = fs::path(d["path"].get<std::string>());
    } else {
      const json& sim = d["simulate"];
      check_keys(sim, {"theta", "T", "seed"}, "data.simulate");
      if (!sim.contains("theta") || !sim.contains("T"))
        config_error("data.simulate needs 'theta' and 'T'");
      cfg.simulate = {json_to_vector(sim["theta"], "data.simulate.theta"),
                      sim["T"].get<int>(), sim.value("seed", std::uint64_t{1})};
    }
  }
  if (raw.contains("sampler")) cfg.sampler = parse_sampler(raw["sampler"]);
  cfg.output_dir = fs::path(raw.value("output_dir", "."));
  cfg.workers = raw.value("workers", 0);
  cfg.raw = std::move(raw);
  return cfg;
}

int resolve_workers(int requested, int cap) {
  if (const char* env = std::getenv("BCPM_WORKERS")) requested = std::atoi(env);
  if (requested <= 0) requested = default_workers();
  return std::max(1, std::min(requested, cap));
}

Dataset obtain_dataset(const RunConfig& cfg, bool write_copy,
                       fs::path* path_out) {
  if (cfg.data_path) {
    if (path_out) *path_out = *cfg.data_path;
    return load_dataset(*cfg.data_path);
  }
  if (!cfg.simulate) config_error("this command needs a 'data' section");
  const auto& [theta, T, seed] = *cfg.simulate;
  Dataset data = cfg.model->simulate(theta, T, seed);
  if (write_copy) {
    fs::create_directories(cfg.output_dir);
    const fs::path p = cfg.output_dir / "dataset.csv";
    save_dataset(data, p);
    if (path_out) *path_out = p;
  }
  return data;
}

SurrogateOracle make_surrogate(const RunConfig& cfg, const Dataset& data) {
  if (cfg.model->id() != "lgss")
    config_error("exact_mh / da_mpm need the linear Gaussian model's Kalman oracle");
  return make_kalman_oracle(data, cfg.model->obs_dim());
}

int cmd_simulate(const RunConfig& cfg) {
  if (!cfg.simulate) config_error("simulate needs data.simulate");
  fs::path written;
  obtain_dataset(cfg, true, &written);
  std::cout << "wrote " << written.string() << " ("
            << git_blob_hash_file(written) << ")\n";
  return 0;
}

int cmd_run(RunConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  fs::path data_path;
  const Dataset data = obtain_dataset(cfg, true, &data_path);
  cfg.sampler.workers = resolve_workers(cfg.workers, cfg.sampler.S);

  std::optional<SurrogateOracle> oracle;
  if (cfg.sampler.kind == SamplerKind::ExactMh ||
      cfg.sampler.kind == SamplerKind::DaMpm)
    oracle = make_surrogate(cfg, data);

  const auto t0 = std::chrono::steady_clock::now();
  const ChainRecord record =
      run_chain(cfg.sampler, *cfg.model, data, oracle ? &*oracle : nullptr);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path chain_path = cfg.output_dir / "chain.csv";
  save_chain_record(record, chain_path);

  json manifest;
  manifest["config"] = cfg.raw;
  manifest["config"]["workers"] = cfg.sampler.workers;
  manifest["dataset"] = {{"path", data_path.string()},
                         {"blob_hash", git_blob_hash_file(data_path)}};
  manifest["chain"] = {{"path", chain_path.string()},
                       {"blob_hash", git_blob_hash_file(chain_path)}};
  manifest["sampler_kind"] = to_string(cfg.sampler.kind);
  manifest["root_seed"] = cfg.sampler.seed;
  manifest["iterations"] = record.iterations();
  manifest["warmup"] = record.warmup;
  manifest["filter_panel_evaluations"] = record.filter_panel_evaluations;
  manifest["elapsed_seconds"] = elapsed;
  std::ofstream(cfg.output_dir / "manifest.json") << manifest.dump(2) << "\n";
  std::ofstream(cfg.output_dir / "resolved_config.json") << cfg.raw.dump(2) << "\n";

  long acc = 0;
  for (long p = 1; p <= record.iterations(); ++p)
    acc += record.accepted[static_cast<std::size_t>(p)];
  std::cout << "wrote " << chain_path.string() << "\n"
            << "iterations " << record.iterations() << ", acceptance "
            << (record.iterations() > 0
                    ? static_cast<double>(acc) / record.iterations()
                    : 0.0)
            << ", panel evaluations " << record.filter_panel_evaluations << "\n";
  return 0;
}

int cmd_diagnose(const std::vector<std::string>& chain_paths,
                 const std::string& benchmark_path, long warmup,
                 const std::string& output_dir) {
  std::vector<ChainRecord> records;
  for (const auto& p : chain_paths) records.push_back(load_chain_record(p, warmup));
  std::optional<ChainRecord> benchmark;
  if (!benchmark_path.empty())
    benchmark = load_chain_record(benchmark_path, warmup);

  fs::create_directories(output_dir);
  std::ofstream if_csv(fs::path(output_dir) / "if_report.csv");
  if_csv << "chain,param,IF,IF_MAX,IF_MEAN,CT_seconds,TNIF_MAX,TNIF_MEAN,"
            "RTNIF_MAX,RTNIF_MEAN\n";
  for (std::size_t c = 0; c < records.size(); ++c) {
    const IfReport rep = if_report(records[c], benchmark ? &*benchmark : nullptr);
    std::cout << "chain " << chain_paths[c] << "\n";
    for (std::size_t p = 0; p < rep.params.size(); ++p) {
      std::cout << "  IF[" << rep.params[p] << "] = " << rep.iact_values[p] << "\n";
      if_csv << c << "," << rep.params[p] << "," << rep.iact_values[p] << ","
             << rep.if_max << "," << rep.if_mean << "," << rep.ct_seconds << ","
             << rep.tnif_max << "," << rep.tnif_mean << ","
             << (rep.rtnif_max ? std::to_string(*rep.rtnif_max) : "") << ","
             << (rep.rtnif_mean ? std::to_string(*rep.rtnif_mean) : "") << "\n";
    }
    std::cout << "  IF_MAX " << rep.if_max << ", IF_MEAN " << rep.if_mean
              << ", CT " << rep.ct_seconds << " s/iter, TNIF_MAX " << rep.tnif_max;
    if (rep.rtnif_max)
      std::cout << ", RTNIF_MAX " << *rep.rtnif_max << ", RTNIF_MEAN "
                << *rep.rtnif_mean;
    std::cout << "\n";
  }

  std::vector<const ChainRecord*> ptrs;
  for (const auto& r : records) ptrs.push_back(&r);
  const PosteriorSummary summary = posterior_summary(ptrs);
  std::ofstream post_csv(fs::path(output_dir) / "posterior.csv");
  post_csv << "param,mean,q025,q975,se_mean\n";
  std::cout << "posterior (" << summary.chain_count << " chain"
            << (summary.chain_count > 1 ? "s" : "") << ")\n";
  for (std::size_t p = 0; p < summary.params.size(); ++p) {
    std::cout << "  " << summary.params[p] << ": mean " << summary.mean[p]
              << " [" << summary.q025[p] << ", " << summary.q975[p] << "]";
    post_csv << summary.params[p] << "," << summary.mean[p] << ","
             << summary.q025[p] << "," << summary.q975[p] << ",";
    if (!summary.se_mean.empty()) {
      std::cout << " se " << summary.se_mean[p];
      post_csv << summary.se_mean[p];
    }
    std::cout << "\n";
    post_csv << "\n";
  }
  return 0;
}

int cmd_experiment_variance(const RunConfig& cfg, const json& spec) {
  check_keys(spec, {"theta", "N", "S", "trims", "replications", "seed"},
             "experiment.variance");
  const Dataset data = obtain_dataset(cfg, false, nullptr);
  Vector theta;
  if (spec.contains("theta"))
    theta = json_to_vector(spec["theta"], "experiment.variance.theta");
  else if (data.generating_theta.size() > 0)
    theta = data.generating_theta;
  else
    config_error("variance experiment needs 'theta' (dataset has none)");

  const std::vector<int> Ns = spec.value("N", std::vector<int>{100});
  const std::vector<int> Ss = spec.value("S", std::vector<int>{1, 20, 100});
  const std::vector<double> trims =
      spec.value("trims", std::vector<double>{0.0, 0.05, 0.1, 0.25, 0.5});
  const int R = spec.value("replications", 200);
  const std::uint64_t seed = spec.value("seed", std::uint64_t{1});
  const int workers = resolve_workers(cfg.workers, R);

  const VarianceTable table = loglik_variance_experiment(
      *cfg.model, data, theta, Ns, Ss, trims, R, seed, workers,
      cfg.sampler.sort_payload);

  fs::create_directories(cfg.output_dir);
  std::ofstream csv(cfg.output_dir / "variance.csv");
  csv << "N,S,trim,variance,replications\n";
  std::cout << "N\tS\ttrim\tVar[log p-hat]\n";
  for (const VarianceCell& c : table.cells) {
    csv << c.N << "," << c.S << "," << c.trim << "," << c.variance << "," << R << "\n";
    std::cout << c.N << "\t" << c.S << "\t" << c.trim << "\t" << c.variance << "\n";
  }
  json manifest;
  manifest["config"] = cfg.raw;
  manifest["replications"] = R;
  manifest["seed"] = seed;
  std::ofstream(cfg.output_dir / "variance_manifest.json") << manifest.dump(2) << "\n";
  return 0;
}

int cmd_experiment_correlation(const RunConfig& cfg, const json& spec) {
  check_keys(spec,
             {"theta", "theta_prime", "S", "N", "trim", "rho_u", "pairs", "seed"},
             "experiment.correlation");
  const Dataset data = obtain_dataset(cfg, false, nullptr);
  Vector theta;
  if (spec.contains("theta"))
    theta = json_to_vector(spec["theta"], "experiment.correlation.theta");
  else if (data.generating_theta.size() > 0)
    theta = data.generating_theta;
  else
    config_error("correlation experiment needs 'theta'");
  const Vector theta_prime =
      spec.contains("theta_prime")
          ? json_to_vector(spec["theta_prime"], "theta_prime")
          : theta;

  const int S = spec.value("S", 20);
  const int N = spec.value("N", 100);
  const double trim = spec.value("trim", 0.25);
  const double rho_u = spec.value("rho_u", 0.9);
  const int pairs = spec.value("pairs", 200);
  const std::uint64_t seed = spec.value("seed", std::uint64_t{1});
  const int workers = resolve_workers(cfg.workers, pairs);

  const double corr =
      correlation_experiment(*cfg.model, data, theta, theta_prime, S, N, trim,
                             rho_u, pairs, seed, workers, cfg.sampler.sort_payload);
  fs::create_directories(cfg.output_dir);
  std::ofstream csv(cfg.output_dir / "correlation.csv");
  csv << "S,N,trim,rho_u,pairs,correlation\n"
      << S << "," << N << "," << trim << "," << rho_u << "," << pairs << ","
      << corr << "\n";
  std::cout << "correlation " << corr << " (S=" << S << ", N=" << N
            << ", trim=" << trim << ", rho_u=" << rho_u << ")\n";
  return 0;
}

int cmd_experiment_sortbench(const RunConfig& cfg, const json& spec) {
  check_keys(spec, {"dims", "N", "repeats", "seed"}, "experiment.sortbench");
  const std::vector<int> dims = spec.value("dims", std::vector<int>{10, 30});
  const std::vector<int> Ns = spec.value("N", std::vector<int>{500, 1000, 2000});
  const int repeats = spec.value("repeats", 20);
  const std::uint64_t seed = spec.value("seed", std::uint64_t{1});

  fs::create_directories(cfg.output_dir);
  std::ofstream csv(cfg.output_dir / "sortbench.csv");
  csv << "d,N,euclidean_seconds,choppala_seconds,ratio\n";
  std::cout << "d\tN\teuclidean(s)\tchoppala(s)\tratio\n";
  for (int d : dims) {
    for (int N : Ns) {
      Rng rng = make_rng(seed, {static_cast<std::uint64_t>(d),
                                static_cast<std::uint64_t>(N)});
      Matrix particles(d, N);
      fill_standard_normal(rng, particles.data(),
                           static_cast<std::size_t>(particles.size()));
      const Vector weights = Vector::Constant(N, 1.0 / N);

      auto time_of = [&](auto&& sorter) {
        (void)sorter(particles, weights);  // warm-up pass
        const auto t0 = std::chrono::steady_clock::now();
        for (int r = 0; r < repeats; ++r) (void)sorter(particles, weights);
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                   .count() /
               repeats;
      };
      const double te = time_of(euclidean_sort);
      const double tc = time_of(choppala_sort);
      csv << d << "," << N << "," << te << "," << tc << "," << tc / te << "\n";
      std::cout << d << "\t" << N << "\t" << te << "\t" << tc << "\t" << tc / te
                << "\n";
    }
  }
  return 0;
}

int cmd_experiment(const RunConfig& cfg, const std::string& kind_flag) {
  json spec = cfg.raw.value("experiment", json::object());
  check_keys(spec, {"kind", "variance", "correlation", "sortbench"}, "experiment");
  const std::string kind = !kind_flag.empty() ? kind_flag : spec.value("kind", "");
  if (kind == "variance")
    return cmd_experiment_variance(cfg, spec.value("variance", json::object()));
  if (kind == "correlation")
    return cmd_experiment_correlation(cfg, spec.value("correlation", json::object()));
  if (kind == "sortbench")
    return cmd_experiment_sortbench(cfg, spec.value("sortbench", json::object()));
  config_error("experiment kind must be variance, correlation, or sortbench");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"block-correlated multiple PMMH sampler for state-space models"};
  app.require_subcommand(1);

  std::string config_path, experiment_kind, benchmark_path, output_dir = ".";
  std::vector<std::string> chain_paths;
  long warmup = 0;
  // flag overrides applied on top of the config file
  std::optional<long> iterations_override;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> S_override, N_override, workers_override;
  std::optional<double> trim_override, rho_override;
  std::optional<std::string> outdir_override;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--output-dir", outdir_override, "override output_dir");
    sub->add_option("--workers", workers_override, "override worker-pool size");
  };

  CLI::App* sim = app.add_subcommand("simulate", "write a simulated dataset");
  add_common(sim);

  CLI::App* run = app.add_subcommand("run", "run a sampler and persist the chain");
  add_common(run);
  run->add_option("--iterations", iterations_override, "override iteration count");
  run->add_option("--seed", seed_override, "override the root seed");
  run->add_option("-S", S_override, "override the number of particle filters");
  run->add_option("-N", N_override, "override the particle count per filter");
  run->add_option("--trim", trim_override, "override the trim fraction");
  run->add_option("--rho-u", rho_override, "override the CRN correlation");

  CLI::App* diag = app.add_subcommand("diagnose", "IF/TNIF/RTNIF and posterior summary");
  diag->add_option("--chain", chain_paths, "chain CSV path(s)")->required();
  diag->add_option("--benchmark", benchmark_path, "benchmark chain for RTNIF");
  diag->add_option("--warmup", warmup, "warmup iterations to discard")->required();
  diag->add_option("--output-dir", output_dir, "report directory");

  CLI::App* exp = app.add_subcommand("experiment", "variance / correlation / sortbench");
  add_common(exp);
  exp->add_option("--kind", experiment_kind, "experiment kind");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(diag))
      return cmd_diagnose(chain_paths, benchmark_path, warmup, output_dir);

    RunConfig cfg = load_config(config_path);
    if (outdir_override) {
      cfg.output_dir = *outdir_override;
      cfg.raw["output_dir"] = *outdir_override;
    }
    if (workers_override) {
      cfg.workers = *workers_override;
      cfg.raw["workers"] = *workers_override;
    }
    auto apply = [&](auto& field, const auto& override_value, const char* key) {
      if (override_value) {
        field = *override_value;
        cfg.raw["sampler"][key] = *override_value;
      }
    };
    apply(cfg.sampler.iterations, iterations_override, "iterations");
    apply(cfg.sampler.seed, seed_override, "seed");
    apply(cfg.sampler.S, S_override, "S");
    apply(cfg.sampler.N, N_override, "N");
    apply(cfg.sampler.trim, trim_override, "trim");
    apply(cfg.sampler.rho_u, rho_override, "rho_u");

    if (app.got_subcommand(sim)) return cmd_simulate(cfg);
    if (app.got_subcommand(run)) {
      cfg.sampler.validate();
      return cmd_run(cfg);
    }
    if (app.got_subcommand(exp)) return cmd_experiment(cfg, experiment_kind);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
