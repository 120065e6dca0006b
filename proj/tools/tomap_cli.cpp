#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tomap/error.hpp"
#include "tomap/metrics.hpp"
#include "tomap/scenario.hpp"
#include "tomap/simulation.hpp"
#include "tomap/trace.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNonTermination = 3;

// TOMAP_LOG: quiet, info (default) or debug.
int log_level() {
  const char* env = std::getenv("TOMAP_LOG");
  if (!env) return 1;
  const std::string v = env;
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

void write_xyz(const fs::path& path, const std::vector<tomap::WorldPoint>& pts) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  for (const auto& p : pts) std::fprintf(f, "%.6f %.6f %.6f\n", p.x(), p.y(), p.z());
  std::fclose(f);
}

int cmd_run(const std::string& scenario_path, std::optional<std::uint64_t> seed, const fs::path& out_dir,
            bool metrics_only) {
  tomap::Scenario sc = tomap::load_scenario(scenario_path);
  if (seed) {
    sc.seed = *seed;
    sc.detector.seed = *seed;
  }
  const int verbosity = log_level();

  std::ofstream trace_file;
  std::optional<tomap::TraceWriter> writer;
  if (!metrics_only) {
    fs::create_directories(out_dir / "clouds");
    trace_file.open(out_dir / "trace.jsonl");
    if (!trace_file) throw std::runtime_error("cannot write " + (out_dir / "trace.jsonl").string());
    writer.emplace(trace_file);
  }

  tomap::RunOptions opts;
  opts.trace = writer ? &*writer : nullptr;
  opts.keep_clouds = !metrics_only;
  if (verbosity >= 1) {
    opts.on_frame = [verbosity](const tomap::TraceRecord& r) {
      for (const auto& e : r.events) {
        if (verbosity < 2 && e.kind != "converged" && e.kind != "mapped" && e.kind != "mode_changed") continue;
        std::cerr << "[t=" << r.t << "] " << e.kind << " target " << e.target_id;
        if (e.to) std::cerr << " -> " << tomap::to_string(*e.to);
        std::cerr << '\n';
      }
    };
  }

  const tomap::RunResult result = tomap::run_simulation(sc, opts);
  const nlohmann::json summary = result.summary_json();

  if (!metrics_only) {
    for (const auto& m : result.mapped) {
      const std::string stem = "target_" + std::to_string(m.target_id);
      write_xyz(out_dir / "clouds" / (stem + ".xyz"), m.downsampled);
      write_xyz(out_dir / "clouds" / (stem + "_dense.xyz"), m.dense);
    }
    std::ofstream(out_dir / "metrics.json") << summary.dump(2) << '\n';
  }
  std::cout << summary.dump(2) << '\n';

  if (!result.success) {
    if (verbosity >= 1) std::cerr << "not all targets mapped (" << tomap::to_string(result.outcome) << ")\n";
    return kExitNonTermination;
  }
  return kExitOk;
}

int cmd_validate(const std::string& scenario_path) {
  const tomap::Scenario sc = tomap::load_scenario(scenario_path);
  std::cout << "ok: " << sc.world.targets.size() << " targets\n";
  return kExitOk;
}

int cmd_replay(const std::string& trace_path) {
  std::ifstream in(trace_path);
  if (!in) throw tomap::Error(tomap::ErrorCode::ScenarioInvalid, "cannot open " + trace_path);
  const tomap::LoadedTrace trace = tomap::read_trace(in);
  std::vector<int> truth;
  for (const auto& t : trace.header.at("truth")) truth.push_back(t.at("id").get<int>());
  const tomap::StageMetrics m = tomap::compute_metrics(trace.frames, truth);
  std::cout << tomap::metrics_to_json(m).dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target-oriented mapping simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool metrics_only = false;
  auto* run = app.add_subcommand("run", "Simulate a scenario and write trace, clouds and metrics");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--metrics-only", metrics_only, "Print metrics without writing files");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", validate_path, "Scenario JSON file")->required();

  std::string trace_path;
  auto* replay = app.add_subcommand("replay-metrics", "Recompute metrics from a trace");
  replay->add_option("trace", trace_path, "trace.jsonl file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario_path, seed, out_dir, metrics_only);
    if (*validate) return cmd_validate(validate_path);
    if (*replay) return cmd_replay(trace_path);
  } catch (const tomap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == tomap::ErrorCode::ScenarioInvalid ? kExitInvalid : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
