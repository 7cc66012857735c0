#include <CLI11.hpp>

#include <cstdint>
#include <future>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "ofb/harness.hpp"
#include "ofb/ofb.hpp"
#include "verify.hpp"

namespace {

using namespace ofb;
using namespace ofb::harness;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoConvergence = 2;

void print_result(const ExperimentResult& r) {
  std::cout << r.cfg.name << " seed=" << r.cfg.seed << " algorithm=" << to_string(r.cfg.algorithm)
            << " kN=" << r.kN << " iterations=" << r.iterations()
            << " converged=" << (r.converged ? "yes" : "no");
  if (auto e = r.gain_err_inf()) std::cout << " gain_err_inf=" << *e;
  if (r.learner.history.switch_iteration)
    std::cout << " switch_at=" << *r.learner.history.switch_iteration;
  std::cout << '\n';
}

int run_one(ExperimentConfig cfg, const std::optional<std::string>& out, bool timing) {
  const ExperimentResult r = run_experiment(cfg);
  if (out) emit_outputs(r, *out, {timing});
  print_result(r);
  return r.converged ? kExitOk : kExitNoConvergence;
}

std::pair<std::uint64_t, std::uint64_t> parse_repeat(const std::string& s) {
  static const std::regex re(R"((\d+)\.\.(\d+))");
  std::smatch mt;
  if (!std::regex_match(s, mt, re)) throw ConfigError("--repeat", "expected S1..S2");
  const auto a = std::stoull(mt[1]), b = std::stoull(mt[2]);
  if (b < a) throw ConfigError("--repeat", "empty seed range");
  return {a, b};
}

int run_many(const ExperimentConfig& base, std::uint64_t s1, std::uint64_t s2,
             const std::optional<std::string>& out, bool timing) {
  std::vector<std::future<ExperimentResult>> jobs;
  for (std::uint64_t s = s1; s <= s2; ++s) {
    ExperimentConfig cfg = base;
    cfg.seed = s;
    cfg.noise.seed = s;
    jobs.push_back(std::async(std::launch::async, [cfg] { return run_experiment(cfg); }));
  }
  int code = kExitOk;
  for (auto& j : jobs) {
    const ExperimentResult r = j.get();
    if (out) emit_outputs(r, fs::path(*out) / ("seed_" + std::to_string(r.cfg.seed)), {timing});
    print_result(r);
    if (!r.converged) code = kExitNoConvergence;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-free output-feedback LQR learning harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir, repeat, algorithm = "", gain_source = "learned";
  std::optional<std::uint64_t> seed;
  bool timing = false, print_config = false;

  auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Override the noise seed");
  run->add_option("--repeat", repeat, "Seed range S1..S2, run in parallel");
  run->add_flag("--timing", timing, "Record wall times in trace.csv");

  std::vector<CLI::App*> sims;
  for (const char* name : {"sim1", "sim2"}) {
    auto* s = app.add_subcommand(name, std::string("Bundled example ") + name);
    s->add_option("--algorithm", algorithm, "vi|pi|si")
        ->check(CLI::IsMember({"vi", "pi", "si"}));
    s->add_option("--out", out_dir, "Output directory");
    s->add_option("--seed", seed, "Noise seed");
    s->add_flag("--print-config", print_config, "Print the bundled config as JSON and exit");
    s->add_flag("--timing", timing, "Record wall times in trace.csv");
    sims.push_back(s);
  }

  auto* compare = app.add_subcommand("compare", "Internal-model controller vs observer-based controller");
  compare->add_option("--config", config_path, "Experiment config (JSON)")->required();
  compare->add_option("--out", out_dir, "Output directory");
  compare->add_option("--seed", seed, "Override the noise seed");
  compare->add_option("--gain", gain_source, "learned|model")->check(CLI::IsMember({"learned", "model"}));

  auto* verify = app.add_subcommand("verify", "Model-based vs model-free equivalence checks");

  CLI11_PARSE(app, argc, argv);

  const std::optional<std::string> out =
      out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir);
  try {
    if (*run) {
      ExperimentConfig cfg = load_config(config_path);
      if (!repeat.empty()) {
        const auto [a, b] = parse_repeat(repeat);
        return run_many(cfg, a, b, out, timing);
      }
      if (seed) cfg.seed = cfg.noise.seed = *seed;
      return run_one(cfg, out, timing);
    }
    for (auto* s : sims) {
      if (!*s) continue;
      const std::string name = s->get_name();
      const Algorithm alg = algorithm.empty() ? (name == "sim1" ? Algorithm::vi : Algorithm::pi)
                                              : parse_algorithm(algorithm, "--algorithm");
      ExperimentConfig cfg = bundled_config(name, alg);
      if (seed) cfg.seed = cfg.noise.seed = *seed;
      if (print_config) {
        std::cout << to_text(cfg);
        return kExitOk;
      }
      return run_one(cfg, out, timing);
    }
    if (*compare) {
      ExperimentConfig cfg = load_config(config_path);
      if (seed) cfg.seed = cfg.noise.seed = *seed;
      const ComparisonResult c =
          compare_controllers(cfg, gain_source == "model" ? GainSource::model : GainSource::learned);
      if (out) emit_comparison(c, *out);
      std::cout << comparison_json(c).dump(2) << '\n';
      return kExitOk;
    }
    if (*verify) return ofb::tools::run_verify(std::cout) ? kExitOk : kExitError;
  } catch (const LearningNonConvergence& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
