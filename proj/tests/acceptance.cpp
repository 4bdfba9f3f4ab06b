// Acceptance run: one PASS/FAIL line per criterion, exit status = number of
// failed criteria. Pass criterion numbers as arguments to run a subset.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "conewidth/bounds.hpp"
#include "conewidth/experiment.hpp"
#include "conewidth/solver.hpp"
#include "oracles.hpp"

using namespace conewidth;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

double first_derivative(FamilyTag tag, double eta) {
  switch (tag) {
    case FamilyTag::gaussian: return eta;
    case FamilyTag::logistic: return 1.0 / (1.0 + std::exp(-eta));
    case FamilyTag::poisson: return std::exp(eta);
  }
  return 0.0;
}

// 1. Gradient and Hessian against finite differences; gradient identity at the truth.
Outcome gradient_oracles() {
  double worst_grad[3] = {0, 0, 0}, worst_hess[3] = {0, 0, 0}, worst_identity = 0.0;
  Rng rng(101);
  for (int k = 0; k < 100; ++k) {
    const auto tag = static_cast<FamilyTag>(k % 3);
    const auto inst = test::random_instance(tag, 1000 + k);
    const Index p = inst.p();
    const Vector th = test::random_point(p, 0.5 / std::sqrt(static_cast<double>(p)), rng);
    const Vector g = gradient(inst, th);
    const Vector fd = test::central_difference_gradient([&](const Vector& v) { return loss(inst, v); }, th);
    auto& wg = worst_grad[k % 3];
    wg = std::max(wg, (g - fd).norm() / std::max(1.0, g.norm()));

    const Vector e = test::random_point(p, 1.0, rng);
    const double h = 1e-5;
    const double dd = (gradient(inst, th + h * e) - gradient(inst, th - h * e)).dot(e) / (2 * h);
    const double q = hessian_quadratic_form(inst, th, e);
    auto& wh = worst_hess[k % 3];
    wh = std::max(wh, std::abs(q - dd) / std::max(1.0, std::abs(q)));

    const Vector& theta = inst.theta_true();
    const Vector eta = inst.design() * theta;
    Vector resid(inst.n());
    for (Index i = 0; i < inst.n(); ++i) resid[i] = inst.responses()[i] - first_derivative(tag, eta[i]);
    const Vector direct = -inst.design().transpose() * resid / static_cast<double>(inst.n());
    const Vector lib = gradient(inst, theta);
    worst_identity = std::max(worst_identity, (lib - direct).norm() / std::max(1.0, direct.norm()));
  }
  const bool ok = worst_grad[0] <= 1e-5 && worst_grad[1] <= 1e-5 && worst_grad[2] <= 1e-4 &&
                  worst_hess[0] <= 1e-5 && worst_hess[1] <= 1e-5 && worst_hess[2] <= 1e-4 &&
                  worst_identity <= 1e-12;
  return {ok, fmt("grad rel err gauss/logit/pois %.2e/%.2e/%.2e", worst_grad[0], worst_grad[1], worst_grad[2]) +
                  fmt(", hessian %.2e/%.2e/%.2e", worst_hess[0], worst_hess[1], worst_hess[2]) +
                  fmt(", identity %.2e", worst_identity)};
}

// 2. Moreau decomposition on random pairs; p = 2 projection against an angular grid.
Outcome cone_geometry() {
  Rng rng(202);
  std::uniform_int_distribution<Index> pick_p(2, 60);
  double worst = 0.0;
  bool members = true;
  for (int k = 0; k < 10000; ++k) {
    const Index p = pick_p(rng);
    std::uniform_int_distribution<Index> pick_s(1, p);
    const Vector theta = test::random_sparse(p, pick_s(rng), rng);
    const ConeModel cone = descent_cone(theta);
    const Vector h = test::random_point(p, 1.0 + k % 7, rng);
    const auto pr = cone.project(h);
    const double scale = std::max(1.0, h.norm());
    worst = std::max({worst, (pr.proj + pr.polar - h).norm() / scale,
                      std::abs(pr.proj.dot(pr.polar)) / (scale * scale)});
    members = members && test::in_descent_cone(theta, pr.proj, 1e-8 * scale) &&
              cone.polar_contains(pr.polar, 1e-8 * scale);
  }

  const Vector e1 = (Vector(2) << 1.0, 0.0).finished();
  const Vector e2 = (Vector(2) << 0.0, 1.0).finished();
  const double example = descent_cone(e1).project(e2).norm;
  double grid_err = std::abs(example - std::sqrt(0.5));
  for (int k = 0; k < 50; ++k) {
    const Vector theta = test::random_sparse(2, 1 + k % 2, rng);
    const Vector h = test::random_point(2, 1.0, rng);
    const Vector oracle = test::angular_grid_cone_projection(theta, h, 200000);
    grid_err = std::max(grid_err, (descent_cone(theta).project(h).proj - oracle).norm());
  }
  return {worst <= 1e-8 && members && grid_err <= 1e-4,
          fmt("max Moreau residual %.2e over 1e4 pairs, p=2 grid error %.2e, (1,0)/(0,1) norm %.12f", worst,
              grid_err, example)};
}

// 3. Width estimators.
Outcome width_estimators() {
  const std::size_t m = 10000;
  bool ok = true;
  std::ostringstream out;
  const auto line = gaussian_width_cone(
      [](const Vector& h) {
        Vector v = Vector::Zero(h.size());
        v[0] = h[0];
        return v;
      },
      3, m, 301);
  const double line_z = (line.mean - std::sqrt(2.0 / std::numbers::pi)) / line.std_error;
  const auto plane = gaussian_width_cone([](const Vector& h) { return h; }, 2, m, 302);
  const double plane_z = (plane.mean - std::sqrt(std::numbers::pi / 2.0)) / plane.std_error;
  ok = ok && std::abs(line_z) <= 3.0 && std::abs(plane_z) <= 3.0;
  out << fmt("line z=%.2f, plane z=%.2f", line_z, plane_z);

  const std::array<std::pair<Index, Index>, 3> cases{{{100, 2}, {100, 5}, {200, 5}}};
  for (const auto& [p, s] : cases) {
    Rng rng(derive_seed(303, static_cast<std::uint64_t>(p * 1000 + s), StreamRole::truth));
    const Vector theta = make_truth(p, s, 1.0, rng);
    const auto w = gaussian_width_cone(descent_cone(theta), m, 304);
    const double allowance = 6.0 * w.mean * w.std_error + 9.0 * w.std_error * w.std_error;
    const double bound = l1_descent_cone_width_bound_sq(p, s);
    ok = ok && w.mean * w.mean <= bound + allowance;
    out << fmt(", (%.0f,%.0f) w^2=%.2f<=%.2f", static_cast<double>(p), static_cast<double>(s), w.mean * w.mean,
               bound + allowance);
  }

  Rng rng(305);
  const Vector theta = make_truth(50, 3, 1.0, rng);
  const FeasibleSet matched(theta, l1_norm(theta));
  double worst_z = 0.0;
  const std::array<double, 3> ts{0.1, 0.4, 0.9};
  std::vector<WidthEstimate> ws;
  for (std::size_t k = 0; k < ts.size(); ++k) ws.push_back(localized_width(matched, ts[k], m, 306 + k));
  for (std::size_t a = 0; a < ws.size(); ++a)
    for (std::size_t b = a + 1; b < ws.size(); ++b)
      worst_z = std::max(worst_z, std::abs(ws[a].mean - ws[b].mean) / std::hypot(ws[a].std_error, ws[b].std_error));
  ok = ok && worst_z <= 3.0;
  out << fmt(", localized t-spread %.2f combined se", worst_z);
  return {ok, out.str()};
}

// 4. Solver agreement, grid oracle at p = 2, feasibility.
Outcome solver_correctness() {
  double worst_ratio = 0.0, worst_grid = 0.0, worst_feas = 0.0;
  bool converged = true;
  for (int k = 0; k < 150; ++k) {
    const auto tag = static_cast<FamilyTag>(k % 3);
    const auto inst = test::random_instance(tag, 4000 + k);
    const double c = 0.6 + 0.1 * (k % 5);
    const double gap_tol = 1e-6 * std::max(1.0, loss(inst, Vector::Zero(inst.p())));
    FrankWolfeOptions fo;
    fo.gap_tol = gap_tol;
    fo.max_iter = 2000000;
    ProjectedGradientOptions po;
    po.gap_tol = gap_tol;
    const auto fw = frank_wolfe(inst, c, fo);
    const auto pg = projected_gradient(inst, c, po);
    converged = converged && fw.converged && pg.converged;
    worst_ratio = std::max(worst_ratio, std::abs(fw.final_objective - pg.final_objective) / gap_tol);
    worst_feas = std::max({worst_feas, l1_norm(fw.theta_hat) - c, l1_norm(pg.theta_hat) - c});
  }
  for (int k = 0; k < 15; ++k) {
    const auto inst = test::random_instance(static_cast<FamilyTag>(k % 3), 4500 + k, 40, 2);
    const double c = 0.8;
    const auto grid = test::grid_minimize_l1_ball_2d([&](const Vector& v) { return loss(inst, v); }, c, 801);
    for (const auto& rep : {frank_wolfe(inst, c), projected_gradient(inst, c)}) {
      worst_grid = std::max(worst_grid, std::abs(rep.final_objective - grid.value));
      worst_feas = std::max(worst_feas, l1_norm(rep.theta_hat) - c);
    }
  }
  return {converged && worst_ratio <= 2.0 && worst_grid <= 1e-2 && worst_feas <= 1e-9,
          fmt("max |FW-PG|/gap_tol %.3f over 150 instances, grid diff %.2e, max infeasibility %.2e", worst_ratio,
              worst_grid, worst_feas)};
}

// 5. Sure inequality on matched gaussian trials.
Outcome sure_inequality() {
  ExperimentConfig cfg;
  cfg.p = 100;
  cfg.s = 3;
  cfg.n_grid = {80};
  cfg.trials = 500;
  cfg.mc_samples = 200;
  cfg.rsc_directions = 200;
  cfg.master_seed = 505;
  const auto ctx = prepare_sweep(cfg);
  std::vector<TrialRecord> recs(cfg.trials);
  parallel_for(cfg.trials, [&](std::size_t k) { recs[k] = run_trial(ctx, 80, k); });
  std::size_t checked = 0, violations = 0, failed = 0;
  double worst = -INFINITY;
  for (const auto& r : recs) {
    if (r.failed) {
      ++failed;
      continue;
    }
    if (r.discarded || r.error_l2 == 0.0) continue;
    ++checked;
    const double lhs = r.realized_curvature * r.error_l2;
    const double rhs = r.projected_grad_norm + r.final_gap / r.error_l2;
    worst = std::max(worst, lhs - rhs);
    if (lhs > rhs + 1e-12 * std::max(1.0, rhs)) ++violations;
  }
  return {failed == 0 && violations == 0 && checked > 0,
          fmt("%.0f checked, %.0f violations, %.0f failed, max lhs-rhs %.3e", static_cast<double>(checked),
              static_cast<double>(violations), static_cast<double>(failed), worst)};
}

double fraction_below(const SweepResult& res, bool conditioned) {
  std::size_t ok = 0;
  for (const auto& r : res.rows) ok += (conditioned ? r.mean_error : r.mean_error_all) <= r.bound;
  return static_cast<double>(ok) / static_cast<double>(res.rows.size());
}

std::string rows_summary(const SweepResult& res, bool conditioned) {
  std::ostringstream out;
  for (const auto& r : res.rows)
    out << fmt(" n=%.0f:%.4f/%.4f", static_cast<double>(r.n), conditioned ? r.mean_error : r.mean_error_all, r.bound);
  return out.str();
}

// 6. Matched bound validity and rate.
Outcome matched_rate() {
  ExperimentConfig cfg;
  cfg.noise_scale = 0.5;
  cfg.p = 200;
  cfg.s = 5;
  cfg.n_grid = {40, 60, 90, 135, 200};
  cfg.trials = 50;
  cfg.mc_samples = 10000;
  cfg.rsc_directions = 2000;
  cfg.master_seed = 606;
  const auto res = run_sweep(cfg);
  const double frac = fraction_below(res, true);
  const double slope = res.error_slope.slope;
  return {frac >= 0.95 && slope >= -0.65 && slope <= -0.35,
          fmt("valid at %.0f%% of n, error slope %.3f +- %.3f (window [-0.65,-0.35]);", 100 * frac, slope,
              res.error_slope.half_width) +
              rows_summary(res, true)};
}

// 7. Logistic matched bound with mu = nu (1 - epsilon).
Outcome glm_validity() {
  ExperimentConfig cfg;
  cfg.family = FamilyTag::logistic;
  cfg.ensemble = Ensemble::rademacher;
  cfg.p = 100;
  cfg.s = 3;
  cfg.n_grid = {60, 120, 240};
  cfg.trials = 50;
  cfg.mc_samples = 10000;
  cfg.rsc_directions = 500;
  cfg.mu_mode = MuMode::theoretical;
  cfg.master_seed = 707;
  const auto ctx = prepare_sweep(cfg);
  const double sig = 1.0 / (1.0 + std::exp(-ctx.radius));
  const double nu_expected = sig * (1.0 - sig);
  const bool nu_ok = std::abs(ctx.nu - nu_expected) <= 1e-15;
  const auto res = run_sweep(ctx);
  const double frac = fraction_below(res, false);
  return {nu_ok && frac == 1.0,
          fmt("nu %.6f (sigma(c)(1-sigma(c)) %.6f), valid at %.0f%% of n;", ctx.nu, nu_expected, 100 * frac) +
              rows_summary(res, false)};
}

// 8. Mismatched rate.
Outcome mismatched_rate() {
  ExperimentConfig cfg;
  cfg.p = 200;
  cfg.s = 5;
  cfg.constraint_mode = ConstraintClass::mismatched;
  cfg.slack = 0.5 * static_cast<double>(cfg.s) * cfg.theta_magnitude;
  cfg.n_grid = {64, 128, 256, 512, 1024, 2048, 4096};
  cfg.trials = 20;
  cfg.mc_samples = 2000;
  cfg.mu_mode = MuMode::theoretical;
  cfg.master_seed = 808;
  const auto ctx = prepare_sweep(cfg);
  const bool slack_ok = std::abs(ctx.radius - 1.5 * l1_norm(ctx.theta_true)) <= 1e-12;
  const auto res = run_sweep(ctx);
  const double slope = res.closed_form_slope ? res.closed_form_slope->slope : NAN;
  const double frac = fraction_below(res, false);
  return {slack_ok && std::abs(slope + 0.25) <= 0.02 && frac >= 0.95,
          fmt("closed-form slope %.4f, error slope %.3f, valid at %.0f%% of n;", slope, res.error_slope.slope,
              100 * frac) +
              rows_summary(res, false)};
}

// 9. RSC at the calibrated sample-size threshold.
Outcome rsc_threshold() {
  const Index p = 50, s = 2;
  const double eps = 0.5;
  Rng truth_rng(derive_seed(909, 0, StreamRole::truth));
  const Vector theta = make_truth(p, s, 1.0, truth_rng);
  const ConeModel cone = descent_cone(theta);
  const double width1 = gaussian_width_cone(cone, 10000, derive_seed(909, 0, StreamRole::width)).mean;
  auto factory = [&](std::uint64_t master) {
    return [&, master](Index n, std::size_t k) {
      Rng d(derive_seed(master, k, StreamRole::design)), r(derive_seed(master, k, StreamRole::noise));
      return make_instance(n, theta, GlmFamily::gaussian(1.0), Ensemble::gaussian, d, r);
    };
  };
  auto sampler = [&](const ProblemInstance&) { return ConeDirectionSampler(cone); };
  // Calibration and verification use disjoint seed families.
  const auto cal = calibrate_c1(width1, eps, 1.0, 1.0 - eps, factory(910), sampler, 911, 200, 2000, 0.98);
  const std::size_t seeds = 100;
  const auto make = factory(920);
  std::vector<char> ok(seeds, 0);
  parallel_for(seeds, [&](std::size_t k) {
    const auto inst = make(cal.n, k);
    ok[k] = rsc_estimate(inst, sampler(inst), 2000, true, derive_seed(921, k, StreamRole::rsc), eps).mu_hat >=
            1.0 - eps;
  });
  const double rate = static_cast<double>(std::count(ok.begin(), ok.end(), 1)) / static_cast<double>(seeds);
  return {rate >= 0.95, fmt("width %.3f, calibrated c1 %.4f, n %.0f, success %.2f over 100 fresh seeds", width1,
                            cal.c1, static_cast<double>(cal.n), rate)};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 10. Byte-identical sweep output across invocations.
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "conewidth_acceptance";
  fs::create_directories(dir);
  const fs::path cfg = dir / "sweep.cfg";
  std::ofstream(cfg) << "family=logistic\np=60\ns=3\nconstraint_mode=mismatched\nslack=1\n"
                        "n_grid=50,100,200\ntrials=6\nmc_samples=500\nrsc_directions=200\nmaster_seed=1010\n";
  std::array<std::string, 2> outputs;
  std::array<int, 2> status{};
  for (std::size_t k = 0; k < 2; ++k) {
    const fs::path out = dir / ("run" + std::to_string(k) + ".csv");
    const std::string cmd = std::string(CONEWIDTH_CLI_PATH) + " sweep --config " + cfg.string() + " --out " +
                            out.string() + " > /dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    status[k] = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    outputs[k] = slurp(out);
  }
  fs::remove_all(dir);
  const bool ok = status[0] == 0 && status[1] == 0 && !outputs[0].empty() && outputs[0] == outputs[1];
  return {ok, fmt("exit codes %.0f/%.0f, %.0f bytes, identical=%.0f", status[0], status[1],
                  static_cast<double>(outputs[0].size()), outputs[0] == outputs[1])};
}

struct Criterion {
  int id;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, 10, gradient_oracles},    {2, 30, cone_geometry},    {3, 120, width_estimators},
      {4, 120, solver_correctness}, {5, 180, sure_inequality}, {6, 600, matched_rate},
      {7, 600, glm_validity},       {8, 900, mismatched_rate}, {9, 300, rsc_threshold},
      {10, 120, determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << o.detail
              << fmt(" [%.1fs of %.0fs budget]", secs, c.budget_seconds) << (in_time ? "" : " (over budget)")
              << std::endl;
  }
  return failures;
}
