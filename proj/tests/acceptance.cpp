// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.
// Usage: acceptance [output_dir] [--only name[,name...]]

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "hyco/baselines.hpp"
#include "hyco/hyco.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace hyco;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_out = "acceptance_runs";

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

json run(const std::string& name, const std::string& preset_name, cli::Method m,
         std::vector<std::pair<std::string, std::string>> overrides = {}) {
  cli::RunSpec spec;
  spec.preset_name = preset_name;
  spec.method = m;
  spec.out = g_out / name;
  spec.overrides = std::move(overrides);
  cli::resolve(spec);
  std::ostringstream log;
  std::cout << "  .. " << name << " (" << preset_name << ", " << cli::to_string(m) << ")" << std::endl;
  if (cli::cmd_run(spec, log) != 0) throw std::runtime_error(name + " failed: " + log.str());
  std::ifstream is(spec.out / "summary.json");
  return json::parse(is);
}

Outcome solver_correctness() {
  using namespace oracles;
  std::vector<double> hel, dar;
  DarcyParams positive = kDarcyTruth;
  positive.C = 3.5;  // keeps the manufactured kappa positive
  for (int n : {17, 33, 65}) {
    hel.push_back(max_abs_error(solve_helmholtz(kHelmholtzTruth, square(n)), sinsin));
    const auto cfg = square(n);
    const auto k = tabulate(cfg.domain, [&](double x, double y) { return darcy_kappa(x, y, positive); });
    const auto f = tabulate(cfg.domain, [&](double x, double y) { return darcy_manufactured_forcing(x, y, positive); });
    dar.push_back(max_abs_error(solve_static(k, GridField2D(cfg.domain, 1), f, cfg), sinsin));
  }
  const double r[4] = {hel[0] / hel[1], hel[1] / hel[2], dar[0] / dar[1], dar[1] / dar[2]};
  bool ok = true;
  for (double v : r) ok = ok && v >= 3.0 && v <= 5.0;

  SolverConfig cfg;
  cfg.domain = Domain2D(0, M_PI, 0, M_PI, 64, 64);
  cfg.nt = 2000;
  cfg.frame_stride = 100;
  const double kappa = 0.7;
  const auto series = simulate_diffusion(tabulate(cfg.domain, [&](double, double) { return kappa; }),
                                         tabulate(cfg.domain, sinsin), cfg);
  double worst = 0;
  for (int n = 1; n < series.nt(); ++n) {
    const double amp = std::exp(-2 * kappa * series.time(n));
    double num = 0, den = 0;
    for (int j = 0; j < cfg.domain.ny; ++j)
      for (int i = 0; i < cfg.domain.nx; ++i) {
        const double exact = amp * sinsin(cfg.domain.x(i), cfg.domain.y(j));
        num += std::pow(series.frame(n).at(i, j) - exact, 2);
        den += exact * exact;
      }
    worst = std::max(worst, std::sqrt(num / den));
  }
  ok = ok && worst < 1e-3;
  return {ok, "Helmholtz ratios " + fmt(r[0]) + ", " + fmt(r[1]) + "; Darcy ratios " + fmt(r[2]) + ", " +
                  fmt(r[3]) + " (in [3,5]); heat decay rel err " + fmt(worst, 3) + " (< 1e-3)"};
}

Outcome gradient_correctness() {
  using namespace oracles;
  nn::MlpArch tanh_plain{3, 2, {16, 16, 16}, nn::Activation::tanh, false};
  nn::MlpArch tanh_res{2, 1, {32, 32}, nn::Activation::tanh, true};
  const double t = std::max(gradient_check(tanh_plain, nn::mlp_init(tanh_plain, 7), random_inputs(9, 3, 4), 100),
                            gradient_check(tanh_res, nn::mlp_init(tanh_res, 8), random_inputs(9, 2, 5), 101));
  double r = 0;
  for (bool residual : {false, true}) {
    nn::MlpArch a{3, residual ? 1 : 2, {16, 16}, nn::Activation::relu, residual};
    const auto p = nn::mlp_init(a, 9);
    r = std::max(r, gradient_check(a, p, kink_filtered_inputs(a, p, 8, 6), 102));
  }
  return {t < 1e-5 && r < 1e-4,
          "max rel err tanh " + fmt(t, 3) + " (< 1e-5), relu " + fmt(r, 3) + " (< 1e-4)"};
}

Outcome helmholtz_full() {
  const json h = run("helmholtz_full_hyco", "helmholtz_paper", cli::Method::hyco);
  const double ep = h["e_p"], es = h["e_s"];
  return {ep < 0.10 && es < 0.05, "HYCO e_p " + fmt(ep) + " (< 0.10), e_s " + fmt(es) + " (< 0.05)"};
}

Outcome helmholtz_q2() {
  const json h = run("helmholtz_q2_hyco", "helmholtz_q2_paper", cli::Method::hyco);
  const json p = run("helmholtz_q2_physics", "helmholtz_q2_paper", cli::Method::physics_only);
  const double eh = h["e_p"], ep = p["e_p"], sh = h["e_s"], sp = p["e_s"];
  return {eh < 0.2 && ep > 0.5 && sh < sp / 2,
          "e_p HYCO " + fmt(eh) + " < 0.2 < 0.5 < physics-only " + fmt(ep) + "; e_s HYCO " + fmt(sh) +
              " < physics-only/2 " + fmt(sp / 2)};
}

Outcome grayscott_desk() {
  const json h = run("grayscott_desk_hyco", "grayscott_desk", cli::Method::hyco);
  const json n = run("grayscott_desk_nn", "grayscott_desk", cli::Method::nn_only);
  const double du = h["lambda"]["Du"], dv = h["lambda"]["Dv"];
  const double ru = std::abs(du - 2e-6) / 2e-6, rv = std::abs(dv - 0.8e-6) / 0.8e-6;
  const double sh = h["e_s"], sn = n["e_s"];
  return {ru < 0.2 && rv < 0.2 && sh < sn,
          "Du " + fmt(du) + " (rel err " + fmt(ru, 3) + "), Dv " + fmt(dv) + " (rel err " + fmt(rv, 3) +
              ") within 0.2; e_s HYCO " + fmt(sh) + " < nn_only " + fmt(sn)};
}

Outcome heat_q2() {
  const json h = run("heat_q2_hyco", "heat_q2_paper", cli::Method::hyco);
  const json p = run("heat_q2_physics", "heat_q2_paper", cli::Method::physics_only);
  const double eh = h["e_p"], ep = p["e_p"], sh = h["e_s"], sp = p["e_s"];
  return {eh < ep && sh < 0.5 * sp, "e_p HYCO " + fmt(eh) + " < physics-only " + fmt(ep) + "; e_s HYCO " +
                                        fmt(sh) + " < 0.5 x physics-only " + fmt(0.5 * sp)};
}

Outcome darcy_noise() {
  const json clean = run("darcy_noise0_hyco", "darcy_paper", cli::Method::hyco);
  const json noisy = run("darcy_noise20_hyco", "darcy_paper", cli::Method::hyco, {{"scenario.noise", "0.2"}});
  const double e0 = clean["e_p"], e2 = noisy["e_p"];
  return {e2 <= 1.25 * e0, "e_p HYCO gamma=0.2 " + fmt(e2) + " <= 1.25 x gamma=0 " + fmt(1.25 * e0) +
                               " (ratio " + fmt(e2 / e0) + ")"};
}

Outcome stopping_rule() {
  const int Z = 200;
  const double eps = 5e-3;
  std::mt19937_64 rng(2024);
  int worst_lag = -1, misses = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int k0 = std::uniform_int_distribution<int>(1, 600)(rng);
    const int dim = std::uniform_int_distribution<int>(1, 10)(rng);
    std::normal_distribution<double> step(0.0, std::uniform_real_distribution<double>(1e-4, 0.1)(rng));
    std::vector<double> z(dim, 0.0);
    for (double& v : z) v = std::normal_distribution<double>(0, 3)(rng);
    std::vector<std::vector<double>> history;
    int fired = -1;
    for (int k = 0; k <= k0 + Z + 5 && fired < 0; ++k) {
      if (k > 0 && k <= k0)
        for (double& v : z) v += step(rng);
      history.push_back(z);
      if (stopping_check(history, Z, eps)) fired = k;
    }
    if (fired < 0) ++misses;
    else worst_lag = std::max(worst_lag, fired - k0);
  }
  return {misses == 0 && worst_lag <= Z, std::to_string(200 - misses) + "/200 constant-after-k0 trajectories "
                                             "stopped; largest delay after k0 " + std::to_string(worst_lag) +
                                             " epochs (<= " + std::to_string(Z) + ")"};
}

Outcome engine_invariants() {
  Preset p = preset("helmholtz_paper");
  p.scenario.reference.cfg.domain = Domain2D(-M_PI, M_PI, -M_PI, M_PI, 35, 35);
  p.config.arch.hidden = {32, 32};
  p.config.H = 50;
  p.config.epochs = 15;
  p.config.metrics_every = 5;
  const Scenario& s = p.scenario;
  const ReferenceSolution ref(s);
  const Dataset d = generate_dataset(s, ref.solution(), derive_seed(0, 0));
  std::vector<std::string> failed;

  // losses: nonnegative, zero at their fixed points
  {
    const nn::MlpParams theta = nn::mlp_init(p.config.arch, 4);
    const GhostSet g = sample_ghosts(s, 50, 8, GhostMode::fixed);
    Dataset own = d;
    own.values = nn::mlp_forward(theta, p.config.arch, network_inputs(d.points, 2));
    Dataset nodes;
    const GridField2D u = s.model.solve(s.init).static_field();
    for (int j = 0; j < u.domain().ny; j += 3)
      for (int i = 0; i < u.domain().nx; i += 2) {
        nodes.points.push_back({u.domain().x(i), u.domain().y(j), 0});
        nodes.values.push_back(u.at(i, j));
      }
    const double ls = loss_syn(theta, p.config.arch, d), lp = loss_phy(s.init, d, s.model),
                 li = loss_int(theta, p.config.arch, s.init, g, s.model);
    if (!(ls >= 0 && lp >= 0 && li >= 0)) failed.push_back("loss sign");
    if (loss_syn(theta, p.config.arch, own) != 0.0) failed.push_back("L_syn zero case");
    if (loss_phy(s.init, nodes, s.model) > 1e-20) failed.push_back("L_phy zero case");
  }
  // bit-identical reruns, serial and parallel
  {
    const TrainResult a = train_hyco(s, d, p.config, ref), b = train_hyco(s, d, p.config, ref);
    TrainConfig par = p.config;
    par.parallel = true;
    const TrainResult c = train_hyco(s, d, par, ref);
    const auto names = parameter_names(s.kind);
    std::ostringstream ca, cb;
    write_history_csv(ca, a, names);
    write_history_csv(cb, b, names);
    if (ca.str() != cb.str() || a.theta->values != b.theta->values) failed.push_back("rerun");
    if (c.lambda != a.lambda || c.theta->values != a.theta->values) failed.push_back("parallel rerun");
  }
  // physics-only equals HYCO with the synthetic player and interaction off
  {
    TrainConfig cfg = p.config;
    cfg.epochs = 40;
    const TrainResult base = fit_physics_only(s, d, cfg, &ref);
    cfg.synthetic_player = false;
    cfg.int_weight = 0;
    const TrainResult hy = train_hyco(s, d, cfg, ref);
    bool same = base.history.size() == hy.history.size();
    for (std::size_t k = 0; same && k < base.history.size(); ++k) same = base.history[k].lambda == hy.history[k].lambda;
    if (!same) failed.push_back("physics-only equivalence");
  }
  // nash_gap flags a displaced physical parameter and not the equilibrium of a convex toy
  {
    TrainConfig cfg = p.config;
    cfg.int_weight = 0;
    const HycoProblem prob{s, d, cfg, nullptr};
    HycoState st = hyco_init(prob);
    st.z = s.truth;
    st.z[0] *= 1.1;
    const auto [d1, d2] = nash_gap(prob, st, 1e-2, 8, 3);
    const PairLoss L1 = [](std::span<const double> th, std::span<const double> z) {
      return (z[0] - 1) * (z[0] - 1) + (z[0] - th[0]) * (z[0] - th[0]);
    };
    const PairLoss L2 = [](std::span<const double> th, std::span<const double> z) {
      return (th[0] - z[0]) * (th[0] - z[0]) + th[0] * th[0] / 10;
    };
    const std::vector<double> th = {1.0 / 1.2}, z = {1.1 / 1.2};
    const auto [g1, g2] = nash_gap(L1, L2, th, z, 1e-3, 20, 1);
    if (!(d1 > 0 && d2 >= 0 && g1 <= 1e-12 && g2 <= 1e-12)) failed.push_back("nash_gap");
  }
  std::string detail = "losses, reproducibility, physics-only equivalence, nash_gap";
  if (!failed.empty()) {
    detail += "; failed:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string n; std::getline(ss, n, ',');) only.insert(n);
    } else {
      g_out = a;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"solver_correctness", solver_correctness}, {"gradient_correctness", gradient_correctness},
      {"helmholtz_full", helmholtz_full},         {"helmholtz_q2", helmholtz_q2},
      {"grayscott_desk", grayscott_desk},         {"heat_q2", heat_q2},
      {"darcy_noise", darcy_noise},               {"stopping_rule", stopping_rule},
      {"engine_invariants", engine_invariants},
  };
  fs::create_directories(g_out);
  json report = json::array();
  int failures = 0;
  std::vector<std::string> lines;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    const std::string line = std::string(o.pass ? "PASS " : "FAIL ") + name + ": " + o.detail + " [" + fmt(secs, 3) + " s]";
    std::cout << line << std::endl;
    lines.push_back(line);
    report.push_back({{"criterion", name}, {"pass", o.pass}, {"detail", o.detail}, {"seconds", secs}});
  }
  std::ofstream(g_out / "acceptance.json") << report.dump(2) << '\n';
  std::cout << "\nsummary\n";
  for (const auto& l : lines) std::cout << l << '\n';
  std::cout << (failures ? std::to_string(failures) + " criterion(s) failed" : std::string("all criteria passed"))
            << std::endl;
  return failures;
}
