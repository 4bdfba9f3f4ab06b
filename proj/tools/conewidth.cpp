// conewidth command-line front end.
//
//   conewidth width  --config cfg [--out f.csv] [--set key=value ...]
//   conewidth solve  --config cfg [--n N] [--trial K]
//   conewidth rsc    --config cfg [--n N] [--trial K]
//   conewidth sweep  --config cfg [--out f.csv]
//   conewidth slope  --input sweep.csv
//
// Exit status: 0 success, 2 configuration or usage error, 1 runtime failure.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conewidth/config.hpp"
#include "conewidth/experiment.hpp"

namespace cw = conewidth;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::vector<std::string> overrides;
  long long n = -1;
  long long trial = 0;
  std::string input_path;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw cw::Error("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

cw::Index chosen_n(const cw::ExperimentConfig& cfg, const CommonArgs& args) {
  if (args.n < 0) return cfg.n_grid.front();
  if (args.n < 1) throw cw::ConfigError("n", "--n must be >= 1");
  return static_cast<cw::Index>(args.n);
}

int run_width(const CommonArgs& args) {
  const cw::ExperimentConfig cfg = cw::load_config(args.config_path, args.overrides);
  const cw::Vector theta = cw::sweep_truth(cfg);
  const double c = cw::sweep_radius(cfg, theta);
  const std::uint64_t seed = cw::derive_seed(cfg.master_seed, 0, cw::StreamRole::width);
  cw::WidthEstimate w;
  if (cfg.constraint_mode == cw::ConstraintClass::matched)
    w = cw::gaussian_width_cone(cw::descent_cone(theta), cfg.mc_samples, seed);
  else
    w = cw::localized_width(cw::FeasibleSet(theta, c), cfg.width_t, cfg.mc_samples, seed);
  Output out(args.out_path);
  out.stream() << "width_mean,width_stderr,samples\n"
               << cw::format_double(w.mean) << ',' << cw::format_double(w.std_error) << ',' << w.samples
               << '\n';
  return 0;
}

int run_solve(const CommonArgs& args) {
  const cw::ExperimentConfig cfg = cw::load_config(args.config_path, args.overrides);
  const cw::SweepContext ctx = cw::prepare_sweep(cfg);
  const cw::TrialRecord rec = cw::run_trial(ctx, chosen_n(cfg, args), static_cast<std::size_t>(args.trial));
  Output out(args.out_path);
  out.stream() << cw::kTrialCsvHeader << '\n';
  cw::write_trial_row(out.stream(), rec);
  return 0;
}

int run_rsc(const CommonArgs& args) {
  const cw::ExperimentConfig cfg = cw::load_config(args.config_path, args.overrides);
  const cw::SweepContext ctx = cw::prepare_sweep(cfg);
  const cw::TrialRecord rec = cw::run_trial(ctx, chosen_n(cfg, args), static_cast<std::size_t>(args.trial));
  const double width1 = ctx.cone ? ctx.cone_width.mean : rec.width.mean;
  const cw::Index threshold = cw::sample_size_threshold(width1, cfg.rsc_epsilon, cfg.alpha, cfg.c1);
  Output out(args.out_path);
  out.stream() << "n,trial,mu_hat,mu_quantile,mu_theoretical,width1,threshold_n,discarded\n"
               << rec.n << ',' << rec.trial << ',' << cw::format_double(rec.mu_hat) << ','
               << cw::format_double(rec.mu_quantile) << ',' << cw::format_double(rec.mu_theoretical) << ','
               << cw::format_double(width1) << ',' << threshold << ',' << (rec.discarded ? 1 : 0) << '\n';
  return 0;
}

int run_sweep_cmd(const CommonArgs& args) {
  const cw::ExperimentConfig cfg = cw::load_config(args.config_path, args.overrides);
  const cw::SweepResult res = cw::run_sweep(cfg);
  Output out(args.out_path);
  cw::write_sweep_csv(out.stream(), res);
  return 0;
}

// Recomputes slopes from the per-trial rows of a sweep CSV: mean error over
// non-discarded trials and mean of the matched / mismatched bound columns.
int run_slope(const CommonArgs& args) {
  std::ifstream in(args.input_path);
  if (!in) throw cw::Error("cannot open input file '" + args.input_path + "'");
  std::string line;
  if (!std::getline(in, line) || line != cw::kTrialCsvHeader)
    throw cw::Error("'" + args.input_path + "' does not start with the sweep CSV header");
  struct Acc {
    double err = 0.0, matched = 0.0, mismatched = 0.0;
    std::size_t count = 0;
  };
  std::map<double, Acc> by_n;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 16) throw cw::Error("malformed sweep row: " + line);
    if (f[15] != "0") continue;
    Acc& a = by_n[std::stod(f[0])];
    a.err += std::stod(f[3]);
    a.matched += std::stod(f[5]);
    a.mismatched += std::stod(f[6]);
    ++a.count;
  }
  std::vector<std::pair<double, double>> err, matched, mismatched;
  for (const auto& [n, a] : by_n) {
    const double k = static_cast<double>(a.count);
    err.emplace_back(n, a.err / k);
    matched.emplace_back(n, a.matched / k);
    mismatched.emplace_back(n, a.mismatched / k);
  }
  Output out(args.out_path);
  out.stream() << "quantity,slope,intercept,half_width\n";
  auto emit = [&](const char* name, const std::vector<std::pair<double, double>>& pts) {
    const cw::SlopeFit fit = cw::fit_loglog_slope(pts);
    out.stream() << name << ',' << cw::format_double(fit.slope) << ',' << cw::format_double(fit.intercept)
                 << ',' << cw::format_double(fit.half_width) << '\n';
  };
  emit("error_l2", err);
  emit("bound_matched", matched);
  emit("bound_mismatched", mismatched);
  return 0;
}

void add_config_options(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config,-c", args.config_path, "Config file (flat key=value)")->required();
  sub->add_option("--set", args.overrides, "Override, key=value (repeatable)");
  sub->add_option("overrides", args.overrides, "Overrides, key=value");
  sub->add_option("--out,-o", args.out_path, "Output CSV path (default: stdout)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-width error bounds for l1-constrained GLM estimation"};
  app.require_subcommand(1);
  CommonArgs args;

  auto* width = app.add_subcommand("width", "Monte-Carlo Gaussian width of the configured constraint");
  add_config_options(width, args);
  auto* solve = app.add_subcommand("solve", "Solve one seeded trial and print its record");
  add_config_options(solve, args);
  solve->add_option("--n", args.n, "Sample size (default: first n_grid entry)");
  solve->add_option("--trial", args.trial, "Trial index")->check(CLI::NonNegativeNumber);
  auto* rsc = app.add_subcommand("rsc", "Probe restricted strong convexity on one seeded trial");
  add_config_options(rsc, args);
  rsc->add_option("--n", args.n, "Sample size (default: first n_grid entry)");
  rsc->add_option("--trial", args.trial, "Trial index")->check(CLI::NonNegativeNumber);
  auto* sweep = app.add_subcommand("sweep", "Run the full n_grid x trials sweep");
  add_config_options(sweep, args);
  auto* slope = app.add_subcommand("slope", "Fit log-log slopes to a sweep CSV");
  slope->add_option("--input,-i", args.input_path, "Sweep CSV produced by `sweep`")->required();
  slope->add_option("--out,-o", args.out_path, "Output CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*width) return run_width(args);
    if (*solve) return run_solve(args);
    if (*rsc) return run_rsc(args);
    if (*sweep) return run_sweep_cmd(args);
    if (*slope) return run_slope(args);
  } catch (const cw::ConfigError& e) {
    std::cerr << "config error [" << e.key() << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
