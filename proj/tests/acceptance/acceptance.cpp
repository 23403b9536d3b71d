// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "otpw/certify.hpp"
#include "otpw/cli.hpp"
#include "otpw/expr.hpp"
#include "otpw/geodesic.hpp"
#include "otpw/rng.hpp"

using namespace otpw;

namespace {

struct Outcome {
  bool pass = true;
  std::string summary;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  failures += o.pass ? 0 : 1;
  std::ostringstream line;
  line.precision(3);
  line << (o.pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": " << title << " | " << o.summary << " ("
       << secs << " s)";
  std::cout << line.str() << std::endl;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

bool convex_ccw(const std::vector<Vec2>& v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % n];
    const auto& c = v[(i + 2) % n];
    if ((b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) <= 1e-3) return false;
  }
  return true;
}

// Five each of intervals, boxes, triangles and quadrilaterals.
std::vector<ConvexDomain> random_domains(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ConvexDomain> out;
  for (int k = 0; k < 5; ++k) {
    const double a = rng.uniform(-2, 2);
    out.push_back(ConvexDomain::interval(a, a + rng.uniform(0.5, 3.0)));
  }
  for (int k = 0; k < 5; ++k) {
    const double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1);
    out.push_back(ConvexDomain::box({x, y}, {x + rng.uniform(0.3, 2.0), y + rng.uniform(0.3, 2.0)}));
  }
  while (out.size() < 15) {
    std::vector<Vec2> t;
    for (int i = 0; i < 3; ++i) t.push_back({rng.uniform(0, 2), rng.uniform(0, 2)});
    if (!convex_ccw(t)) std::swap(t[1], t[2]);
    if (std::abs(geometry::polygon_signed_area(t)) < 0.3 || !convex_ccw(t)) continue;
    out.push_back(ConvexDomain::polygon(t));
  }
  while (out.size() < 20) {
    const double cx = rng.uniform(-1, 1), cy = rng.uniform(-1, 1), r = rng.uniform(0.5, 1.5);
    const double rot = rng.uniform(0, 2 * std::numbers::pi);
    std::vector<Vec2> q;
    for (int i = 0; i < 4; ++i) {
      const double th = rot + i * std::numbers::pi / 2 + rng.uniform(-0.4, 0.4);
      const double ri = r * rng.uniform(0.8, 1.2);
      q.push_back({cx + ri * std::cos(th), cy + ri * std::sin(th)});
    }
    if (!convex_ccw(q)) continue;
    out.push_back(ConvexDomain::polygon(q));
  }
  return out;
}

struct Instance {
  ConvexDomain domain;
  double p, q;
  std::vector<InequalityReport> reports;  // main, moment, triangle, nash, pw
};

// Built once and shared by criteria 1 and 2.
const std::vector<Instance>& main_suite() {
  static const std::vector<Instance> suite = [] {
    const auto domains = random_domains(2024);
    std::vector<std::pair<double, double>> exps;
    for (double p : {2.2, 3.0, 4.0}) {
      for (double q : {1.5, 2.0, p - 0.5}) exps.emplace_back(p, q);
    }
    std::vector<Instance> out;
    for (std::size_t i = 0; i < 200; ++i) {
      const auto& d = domains[i % domains.size()];
      const auto [p, q] = exps[i % exps.size()];
      const auto poly = random_polynomial(d.dim(), 1 + static_cast<int>(i % 4), 1000 + i, d.lower(), d.upper());
      CertifyRequest req;
      req.domain = d;
      req.field = {[poly](std::span<const double> x) { return poly(x); }, {}, poly.to_string()};
      req.p = p;
      req.q = q;
      // At most 256 cells, so each of the two measures has at most 256 atoms.
      req.resolution = d.dim() == 1 ? 256 : 16;
      req.transport.solver = SolverKind::Exact;
      out.push_back({d, p, q, certify(req)});
    }
    return out;
  }();
  return suite;
}

Outcome criterion_main() {
  const auto start = std::chrono::steady_clock::now();
  const auto& suite = main_suite();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::size_t ok = 0;
  double worst = 1e300;
  for (const auto& inst : suite) {
    const auto& m = inst.reports[0];
    if (m.id == InequalityId::Main && m.solver == "exact" && m.passed()) ++ok;
    worst = std::min(worst, m.slack / std::max(m.rhs, 1e-300));
  }
  return {ok == suite.size() && secs < 300.0, std::to_string(ok) + "/" + std::to_string(suite.size()) +
                                                   " instances pass, smallest relative slack " + num(worst)};
}

Outcome criterion_chain() {
  const auto& suite = main_suite();
  std::size_t ok = 0, order_ok = 0;
  for (const auto& inst : suite) {
    bool all = true;
    for (std::size_t k = 1; k < inst.reports.size(); ++k) all = all && inst.reports[k].passed();
    all = all && inst.reports[2].detail("candidates") == 11.0;
    ok += all ? 1 : 0;
    const auto& main = inst.reports[0];
    const auto& nash = inst.reports[3];
    order_ok += main.rhs <= nash.rhs + main.error_bar + nash.error_bar ? 1 : 0;
  }
  return {ok == suite.size() && order_ok == suite.size(),
          "moment/triangle/nash/pw pass on " + std::to_string(ok) + "/" + std::to_string(suite.size()) +
              ", main rhs <= nash rhs on " + std::to_string(order_ok) + "/" + std::to_string(suite.size())};
}

Outcome criterion_expedient() {
  const std::vector<ConvexDomain> domains{ConvexDomain::interval(0.0, 1.0), ConvexDomain::box({0.0, 0.0}, {1.0, 1.0})};
  std::size_t ok = 0, total = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const auto& d = domains[trial % 2];
    const auto phi = random_polynomial(d.dim(), 1 + static_cast<int>(trial % 4), 5000 + trial, d.lower(), d.upper());
    const auto g0 = random_polynomial(d.dim(), 2, 6000 + trial, d.lower(), d.upper());
    const auto g1 = random_polynomial(d.dim(), 3, 7000 + trial, d.lower(), d.upper());
    ExpedientRequest req;
    req.domain = d;
    req.phi = [phi](std::span<const double> x) { return phi(x); };
    req.f0 = [g0](std::span<const double> x) { return std::exp(0.5 * g0(x)); };
    req.f1 = [g1](std::span<const double> x) { return std::exp(0.5 * g1(x)); };
    req.p = 3.0;
    req.q = 2.0;
    req.resolution = d.dim() == 1 ? 256 : 16;
    const auto rep = certify_expedient(req);
    ok += rep.passed() ? 1 : 0;
    ++total;
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " triples pass"};
}

Outcome criterion_convexity() {
  Rng rng(77);
  std::vector<double> times;
  for (int k = 0; k <= 10; ++k) times.push_back(k / 10.0);
  double worst1024 = -1e300, worst2048 = -1e300;
  bool monotone = true;
  for (int pair = 0; pair < 20; ++pair) {
    const double a0 = rng.uniform(-1, 0.5), b0 = a0 + rng.uniform(0.5, 2.0);
    const double a1 = rng.uniform(-1, 0.5), b1 = a1 + rng.uniform(0.5, 2.0);
    const double lo0[1] = {a0}, hi0[1] = {b0}, lo1[1] = {a1}, hi1[1] = {b1};
    const auto p0 = random_polynomial(1, 3, 8000 + pair, lo0, hi0);
    const auto p1 = random_polynomial(1, 3, 9000 + pair, lo1, hi1);
    const auto f0 = [p0](std::span<const double> x) { return std::exp(p0(x)); };
    const auto f1 = [p1](std::span<const double> x) { return std::exp(p1(x)); };
    for (double q : {1.0, 2.0, 3.0}) {
      double v[2];
      int level = 0;
      for (std::size_t n : {1024, 2048}) {
        const auto d0 = sample(discretize(ConvexDomain::interval(a0, b0), n), f0);
        const auto d1 = sample(discretize(ConvexDomain::interval(a1, b1), n), f1);
        v[level++] = lq_convexity_check(d0, d1, q, times).max_violation;
      }
      worst1024 = std::max(worst1024, v[0]);
      worst2048 = std::max(worst2048, v[1]);
      monotone = monotone && std::max(v[1], 0.0) <= std::max(v[0], 0.0) + 1e-12;
    }
  }
  return {worst1024 <= 1e-4 && monotone, "max violation " + num(worst1024) + " at 1024, " + num(worst2048) +
                                             " at 2048, non-increasing: " + (monotone ? "yes" : "no")};
}

Outcome criterion_speed() {
  Rng rng(31);
  double worst = 0.0;
  for (int pair = 0; pair < 10; ++pair) {
    const std::size_t dim = 1 + pair % 2;
    auto make = [&](std::size_t n) {
      std::vector<double> pos(n * dim), w(n);
      for (auto& x : pos) x = rng.uniform(0, 1);
      for (auto& x : w) x = rng.uniform(0.1, 1);
      return DiscreteMeasure::normalized(dim, pos, w);
    };
    const auto mu = make(20 + rng.index(31)), nu = make(20 + rng.index(31));
    for (double m : {2.0, 3.0}) {
      const auto full = wasserstein_exact(mu, nu, m);
      for (double t : {0.25, 0.5, 0.75}) {
        const auto mid = displacement_interpolate(full.plan, t).measure;
        const double dev = std::abs(wasserstein_exact(mu, mid, m).distance - t * full.distance) / full.distance;
        worst = std::max(worst, dev);
      }
    }
  }
  return {worst <= 1e-6, "largest relative deviation " + num(worst)};
}

Outcome criterion_solvers() {
  Rng rng(13);
  auto make = [&](std::size_t n, std::size_t dim) {
    std::vector<double> pos(n * dim), w(n);
    for (auto& x : pos) x = rng.uniform(0, 1);
    for (auto& x : w) x = rng.uniform(0.1, 1);
    return DiscreteMeasure::normalized(dim, pos, w);
  };
  double worst_1d = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto a = make(5 + rng.index(60), 1), b = make(5 + rng.index(60), 1);
    const double m = 1.0 + 0.5 * (k % 5);
    worst_1d = std::max(worst_1d, std::abs(wasserstein_1d(a, b, m) - wasserstein_exact(a, b, m).distance));
  }
  double worst_entropic = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto a = make(100, 2), b = make(100, 2);
    const double exact = wasserstein_exact(a, b, 2.0).distance;
    const auto ent = wasserstein_entropic(a, b, 2.0);
    worst_entropic = std::max(worst_entropic, std::abs(ent.distance - exact) / exact);
  }
  double worst_brute = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto a = make(3, 2), b = make(3, 2);
    std::vector<double> wa(a.weights().begin(), a.weights().end()), wb(b.weights().begin(), b.weights().end());
    std::vector<double> c(9);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        c[i * 3 + j] = std::pow(a.position(i)[0] - b.position(j)[0], 2) + std::pow(a.position(i)[1] - b.position(j)[1], 2);
      }
    }
    const double brute = oracle::brute_force_3x3(wa, wb, c);
    worst_brute = std::max(worst_brute, std::abs(wasserstein_exact(a, b, 2.0).cost - brute) / std::max(brute, 1e-300));
  }
  const bool pass = worst_1d <= 1e-8 && worst_entropic <= 0.01 && worst_brute <= 1e-12;
  return {pass, "1d vs exact " + num(worst_1d) + ", entropic rel " + num(worst_entropic) + ", n=3 vs vertices " +
                    num(worst_brute)};
}

Outcome criterion_eigen() {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double line2 = estimate_eigenvalue(ConvexDomain::interval(0.0, 1.0), 2.0, 1024).eigenvalue;
  const double square2 = estimate_eigenvalue(ConvexDomain::box({0.0, 0.0}, {1.0, 1.0}), 2.0, 128).eigenvalue;
  const double line3 = estimate_eigenvalue(ConvexDomain::interval(0.0, 1.0), 3.0, 1024).eigenvalue;
  const double shoot3 = oracle::shooting_eigenvalue(3.0);
  const double e1 = std::abs(line2 - pi2) / pi2, e2 = std::abs(square2 - pi2) / pi2;
  const double e3 = std::abs(line3 - shoot3) / shoot3;
  const double anchor = std::abs(shoot3 - std::pow(pi_p(3.0), 3.0)) / shoot3;
  const double pi_err = std::abs(pi_p(2.0) - std::numbers::pi);
  const bool pass = e1 <= 0.005 && e2 <= 0.01 && e3 <= 0.02 && anchor <= 1e-6 &&
                    pi_err <= 2.0 * std::numeric_limits<double>::epsilon() * std::numbers::pi;
  return {pass, "interval p=2 " + num(e1) + ", square p=2 " + num(e2) + ", interval p=3 " + num(e3) +
                    " (oracle vs pi_3^3 " + num(anchor) + "), |pi_2 - pi| " + num(pi_err)};
}

Outcome criterion_payne_weinberger() {
  struct Solve {
    ConvexDomain d;
    double p;
    std::size_t res;
  };
  const std::vector<Solve> solves{{ConvexDomain::interval(0.0, 1.0), 2.0, 1024},
                                  {ConvexDomain::interval(0.0, 1.0), 3.0, 1024},
                                  {ConvexDomain::interval(-1.0, 2.0), 1.5, 512},
                                  {ConvexDomain::box({0.0, 0.0}, {1.0, 1.0}), 2.0, 128},
                                  {ConvexDomain::box({0.0, 0.0}, {1.0, 1.0}), 3.0, 32},
                                  {ConvexDomain::polygon({{0, 0}, {1, 0}, {0, 1}}), 2.0, 64},
                                  {ConvexDomain::polygon({{0, 0}, {1, 0}, {0, 1}}), 3.0, 32},
                                  {ConvexDomain::polygon({{0, 0}, {2, 0}, {1.6, 1.0}, {0.3, 0.8}}), 2.0, 64}};
  std::size_t ok = 0;
  for (const auto& s : solves) {
    const auto reps = check_eigen_bound(s.d, s.p, s.res);
    bool good = reps[0].passed() && reps[1].passed();
    // Away from one dimension the sharp bound is strict.
    if (s.d.dim() > 1) good = good && reps[1].slack > reps[1].error_bar;
    ok += good ? 1 : 0;
  }
  std::vector<double> ratios;
  for (int n : {1, 2, 4, 8}) {
    ratios.push_back(check_eigen_bound(ConvexDomain::box({0.0, 0.0}, {1.0, 1.0 / n}), 2.0, 64)[1].detail("sharp_ratio"));
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) decreasing = decreasing && ratios[i] < ratios[i - 1];
  const bool pass = ok == solves.size() && decreasing && ratios.back() <= 1.15;
  return {pass, std::to_string(ok) + "/" + std::to_string(solves.size()) + " instances satisfy both bounds, thin-box ratios " +
                    num(ratios[0]) + " " + num(ratios[1]) + " " + num(ratios[2]) + " " + num(ratios[3])};
}

Outcome criterion_scaling() {
  const std::vector<std::size_t> ns{1, 2, 4, 8, 16};
  bool pass = true;
  std::string text;
  for (auto [p, q] : {std::pair{3.0, 2.0}, std::pair{4.0, 2.0}, std::pair{2.2, 2.0}}) {
    const auto rep = thin_box_scaling(p, q, ns);
    pass = pass && rep.relative_error() <= 0.05;
    text += "(" + num(p) + "," + num(q) + ") slope " + num(rep.slope) + " target " + num(rep.target) + "; ";
  }
  return {pass, text};
}

Outcome criterion_determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "otpw_acceptance_determinism";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto cfg = dir / "sweep.json";
  std::ofstream(cfg) << R"({"experiment_id": "det", "domain": {"kind": "polygon",
      "vertices": [[0, 0], [1.5, 0.2], [1.2, 1.0], [0.1, 0.9]]}, "field": {"polynomial": {"degree": 4}},
      "p_values": [2.2, 3, 4], "q_values": [1.5, 2, "p-0.5"], "resolution": [8, 12], "instances": 2,
      "solver": "entropic"})";
  auto run_once = [&](const std::string& sub) {
    std::ostringstream out, err;
    const int code = cli::run({"sweep", "--config", cfg.string(), "--out", (dir / sub).string(), "--seed", "5",
                               "--details", "--quiet"},
                              out, err);
    std::ifstream csv(dir / sub / "det.csv", std::ios::binary), jl(dir / sub / "det.jsonl", std::ios::binary);
    std::ostringstream s;
    s << csv.rdbuf() << jl.rdbuf();
    return std::pair{code, s.str()};
  };
  const auto a = run_once("a"), b = run_once("b");
  const bool pass = a.first == 0 && b.first == 0 && !a.second.empty() && a.second == b.second;
  return {pass, "exit codes " + std::to_string(a.first) + "/" + std::to_string(b.first) + ", " +
                    std::to_string(a.second.size()) + " bytes, identical: " + (a.second == b.second ? "yes" : "no")};
}

}  // namespace

int main() {
  report(1, "main inequality on 200 random admissible fields over 20 convex domains", criterion_main);
  report(2, "moment, triangle, nash and pw bounds on the same suite, main <= nash", criterion_chain);
  report(3, "transport duality bound on 100 random triples", criterion_expedient);
  report(4, "L^q convexity along 1D displacement interpolants", criterion_convexity);
  report(5, "constant-speed displacement interpolation", criterion_speed);
  report(6, "solver cross-validation (1d, entropic, vertex enumeration)", criterion_solvers);
  report(7, "Neumann eigenvalue anchors", criterion_eigen);
  report(8, "diameter lower bounds for the Neumann eigenvalue", criterion_payne_weinberger);
  report(9, "thin-box scaling slope", criterion_scaling);
  report(10, "byte-identical sweep output", criterion_determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
