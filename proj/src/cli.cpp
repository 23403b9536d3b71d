#include "otpw/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <thread>

#include "otpw/error.hpp"
#include "otpw/expr.hpp"
#include "otpw/format.hpp"
#include "otpw/geodesic.hpp"
#include "otpw/kernels.hpp"

namespace otpw::cli {

namespace {

using json = nlohmann::json;

constexpr std::string_view kVersion = "1.0.0";

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); }

double as_number(const json& j, std::string_view key) {
  if (!j.is_number()) invalid("'" + std::string(key) + "' must be a number");
  return j.get<double>();
}

std::size_t as_count(const json& j, std::string_view key) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) invalid("'" + std::string(key) + "' must be an integer");
  const auto v = j.get<std::int64_t>();
  if (v < 0) invalid("'" + std::string(key) + "' must be nonnegative");
  return static_cast<std::size_t>(v);
}

std::vector<double> as_numbers(const json& j, std::string_view key) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) invalid("'" + std::string(key) + "' must be a number or an array of numbers");
  std::vector<double> out;
  for (const auto& e : j) out.push_back(as_number(e, key));
  return out;
}

std::vector<std::size_t> as_counts(const json& j, std::string_view key) {
  if (!j.is_array()) return {as_count(j, key)};
  std::vector<std::size_t> out;
  for (const auto& e : j) out.push_back(as_count(e, key));
  return out;
}

std::vector<double> as_vector(const json& j, std::string_view key) {
  if (!j.is_array()) invalid("'" + std::string(key) + "' must be an array");
  return as_numbers(j, key);
}

ExponentSpec parse_exponent(const json& j) {
  if (j.is_number()) return {j.get<double>(), false};
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
    double c = 0.0;
    if (s.size() > 2 && s.compare(0, 2, "p-") == 0 && parse_double(std::string_view(s).substr(2), c)) {
      return {c, true};
    }
  }
  invalid("q entries must be numbers or \"p-<number>\"");
}

DomainDescription parse_domain(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    invalid("'domain' must be an object with a string 'kind'");
  }
  const auto kind = j["kind"].get<std::string>();
  auto only = [&](std::initializer_list<std::string_view> keys) {
    for (const auto& [k, v] : j.items()) {
      if (k != "kind" && std::find(keys.begin(), keys.end(), k) == keys.end()) {
        invalid("unknown key '" + k + "' in " + kind + " domain");
      }
    }
  };
  if (kind == "interval") {
    only({"a", "b"});
    IntervalDescription d;
    if (j.contains("a")) d.a = as_number(j["a"], "a");
    if (j.contains("b")) d.b = as_number(j["b"], "b");
    return d;
  }
  if (kind == "box") {
    only({"lo", "hi"});
    if (!j.contains("lo") || !j.contains("hi")) invalid("box domain needs 'lo' and 'hi'");
    return BoxDescription{as_vector(j["lo"], "lo"), as_vector(j["hi"], "hi")};
  }
  if (kind == "polygon") {
    only({"vertices"});
    if (!j.contains("vertices") || !j["vertices"].is_array()) invalid("polygon domain needs 'vertices'");
    PolygonDescription d;
    for (const auto& v : j["vertices"]) {
      const auto xy = as_vector(v, "vertices");
      if (xy.size() != 2) invalid("polygon vertices must be [x, y] pairs");
      d.vertices.push_back({xy[0], xy[1]});
    }
    return d;
  }
  invalid("unknown domain kind '" + kind + "' (expected interval, box or polygon)");
}

FieldSpec parse_field(const json& j) {
  FieldSpec f;
  if (j.is_string()) {
    f.expression = j.get<std::string>();
    Expression::parse(f.expression);
    return f;
  }
  if (j.is_object() && j.size() == 1 && j.contains("polynomial")) {
    const auto& poly = j["polynomial"];
    f.kind = FieldSpec::Kind::Polynomial;
    for (const auto& [k, v] : poly.items()) {
      if (k == "degree") {
        f.degree = static_cast<int>(as_count(v, "degree"));
      } else if (k == "seed") {
        f.seed = as_count(v, "seed");
      } else {
        invalid("unknown key '" + k + "' in polynomial field");
      }
    }
    if (f.degree < 1 || f.degree > 4) invalid("polynomial degree must lie in 1..4");
    return f;
  }
  if (j.is_object() && j.size() == 1 && j.contains("csv") && j["csv"].is_string()) {
    f.kind = FieldSpec::Kind::Csv;
    f.csv_path = j["csv"].get<std::string>();
    return f;
  }
  invalid("'field' must be an expression string, {\"polynomial\": {...}} or {\"csv\": path}");
}

void validate_exponents(const ExperimentConfig& c, std::string_view subcommand) {
  if (c.p_values.empty()) invalid("no p values");
  if (subcommand == "eigen") {
    for (double p : c.p_values) {
      if (!(p > 1.0) || !std::isfinite(p)) invalid("eigen checks need p > 1 (got p=" + format_double(p) + ")");
    }
    return;
  }
  if (subcommand == "geodesic") {
    for (const auto& q : c.q_values) {
      if (q.relative_to_p || !(q.value >= 1.0)) invalid("geodesic q values must be numbers >= 1");
    }
    return;
  }
  if (c.q_values.empty()) invalid("no q values");
  for (double p : c.p_values) {
    for (const auto& qs : c.q_values) {
      const double q = qs.resolve(p);
      if (!(q > 1.0 && q < p && std::isfinite(p))) {
        invalid("exponents must satisfy 1 < q < p (got p=" + format_double(p) + ", q=" + format_double(q) + ")");
      }
    }
  }
}

ConvexDomain build_domain(const ExperimentConfig& c) { return make_domain(c.domain); }

std::vector<double> read_csv_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot read field file '" + path + "'");
  std::vector<double> values;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
    double v = 0.0;
    if (!parse_double(cell, v)) {
      if (first) {
        first = false;
        continue;
      }
      invalid("bad value '" + cell + "' in field file '" + path + "'");
    }
    first = false;
    values.push_back(v);
  }
  return values;
}

PointFunction expression_function(const std::string& text, std::size_t dim) {
  auto e = Expression::parse(text);
  if (e.max_variable() > dim) {
    invalid("expression '" + text + "' uses x" + std::to_string(e.max_variable()) + " on a " +
            std::to_string(dim) + "D domain");
  }
  return [e](std::span<const double> x) { return e(x); };
}

FieldSource field_source(const ExperimentConfig& c, const ConvexDomain& domain, std::size_t instance) {
  FieldSource src;
  switch (c.field.kind) {
    case FieldSpec::Kind::Expression:
      src.function = expression_function(c.field.expression, domain.dim());
      src.name = c.field.expression;
      break;
    case FieldSpec::Kind::Polynomial: {
      const std::uint64_t seed = c.field.seed.value_or(c.seed) + instance;
      auto poly = random_polynomial(domain.dim(), c.field.degree, seed, domain.lower(), domain.upper());
      src.name = poly.to_string();
      src.function = [poly](std::span<const double> x) { return poly(x); };
      break;
    }
    case FieldSpec::Kind::Csv:
      src.values = read_csv_values(c.field.csv_path);
      src.name = c.field.csv_path;
      break;
  }
  return src;
}

TransportOptions transport_options(const ExperimentConfig& c) {
  TransportOptions t;
  t.solver = c.solver;
  return t;
}

std::size_t default_resolution(std::string_view subcommand, const ConvexDomain& domain) {
  if (subcommand == "geodesic") return 1024;
  if (subcommand == "eigen") return domain.dim() == 1 ? 256 : 32;
  return 64;
}

std::vector<std::size_t> resolutions(const ExperimentConfig& c, std::string_view subcommand,
                                     const ConvexDomain& domain) {
  if (!c.resolutions.empty()) return c.resolutions;
  return {default_resolution(subcommand, domain)};
}

std::vector<double> geodesic_times(const ExperimentConfig& c) {
  if (!c.times.empty()) return c.times;
  std::vector<double> t;
  for (int k = 0; k <= 10; ++k) t.push_back(k / 10.0);
  return t;
}

bool is_solver_error(ErrorCode code) {
  return code == ErrorCode::NoConvergence || code == ErrorCode::TooLarge || code == ErrorCode::Infeasible;
}

// Work item outcome; failures are kept with their key so output stays ordered.
struct ItemOutcome {
  std::vector<ReportRow> rows;
  std::optional<std::string> error;
  bool solver_error = false;
};

template <class Fn>
std::vector<ItemOutcome> run_pool(std::size_t count, const std::vector<std::string>& keys, Fn&& fn) {
  std::vector<ItemOutcome> out(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i].rows = fn(i);
      } catch (const Error& e) {
        out[i].error = keys[i] + ": " + e.what();
        out[i].solver_error = is_solver_error(e.code());
      } catch (const std::exception& e) {
        out[i].error = keys[i] + ": " + e.what();
        out[i].solver_error = true;
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(count, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

std::vector<ReportRow> tag(const std::string& key, std::vector<InequalityReport> reports) {
  std::vector<ReportRow> rows;
  for (auto& r : reports) rows.push_back({key, std::move(r)});
  return rows;
}

std::vector<InequalityId> field_checks(const ExperimentConfig& c) {
  std::vector<InequalityId> checks = c.checks;
  if (checks.empty()) {
    checks = {InequalityId::Main, InequalityId::Moment, InequalityId::Triangle, InequalityId::Nash, InequalityId::Pw};
    if (c.density0 && c.density1) checks.push_back(InequalityId::Expedient);
  }
  return checks;
}

std::vector<InequalityReport> certify_instance(const ExperimentConfig& c, const ConvexDomain& domain, double p,
                                               double q, std::size_t resolution, std::size_t instance) {
  auto checks = field_checks(c);
  const bool expedient = std::erase(checks, InequalityId::Expedient) > 0;
  CertifyRequest req;
  req.domain = domain;
  req.field = field_source(c, domain, instance);
  req.p = p;
  req.q = q;
  req.resolution = resolution;
  req.transport = transport_options(c);
  req.checks = checks;
  std::vector<InequalityReport> out;
  if (!checks.empty()) out = certify(req);
  if (expedient) {
    if (!c.density0 || !c.density1) invalid("the expedient check needs 'density0' and 'density1'");
    if (!req.field.function) invalid("the expedient check needs a field given as a function");
    ExpedientRequest e;
    e.domain = domain;
    e.phi = req.field.function;
    e.f0 = expression_function(*c.density0, domain.dim());
    e.f1 = expression_function(*c.density1, domain.dim());
    e.p = p;
    e.q = q;
    e.resolution = resolution;
    e.transport = req.transport;
    out.push_back(certify_expedient(e));
  }
  return out;
}

std::string base_id(const ExperimentConfig& c, std::string_view subcommand) {
  return c.experiment_id.empty() ? std::string(subcommand) : c.experiment_id;
}

std::vector<ItemOutcome> run_certify(const ExperimentConfig& c) {
  const auto domain = build_domain(c);
  const double p = c.p_values.front();
  const double q = c.q_values.front().resolve(p);
  const std::size_t res = resolutions(c, "certify", domain).front();
  const std::vector<std::string> keys{base_id(c, "certify")};
  return run_pool(1, keys, [&](std::size_t) { return tag(keys[0], certify_instance(c, domain, p, q, res, 0)); });
}

std::vector<ItemOutcome> run_sweep(const ExperimentConfig& c) {
  const auto domain = build_domain(c);
  struct Item {
    double p, q;
    std::size_t res, instance;
  };
  std::vector<Item> items;
  std::vector<std::string> keys;
  const std::string id = base_id(c, "sweep");
  const std::size_t instances = std::max<std::size_t>(c.instances, 1);
  for (double p : c.p_values) {
    for (const auto& qs : c.q_values) {
      for (std::size_t res : resolutions(c, "sweep", domain)) {
        for (std::size_t i = 0; i < instances; ++i) {
          const double q = qs.resolve(p);
          items.push_back({p, q, res, i});
          keys.push_back(id + "/p" + format_double(p) + "/q" + format_double(q) + "/n" + std::to_string(res) + "/i" +
                         std::to_string(i));
        }
      }
    }
  }
  return run_pool(items.size(), keys, [&](std::size_t k) {
    const auto& it = items[k];
    return tag(keys[k], certify_instance(c, domain, it.p, it.q, it.res, it.instance));
  });
}

std::vector<ItemOutcome> run_eigen(const ExperimentConfig& c) {
  const auto domain = build_domain(c);
  std::vector<std::pair<double, std::size_t>> items;
  std::vector<std::string> keys;
  const std::string id = base_id(c, "eigen");
  for (double p : c.p_values) {
    for (std::size_t res : resolutions(c, "eigen", domain)) {
      items.emplace_back(p, res);
      keys.push_back(id + "/p" + format_double(p) + "/n" + std::to_string(res));
    }
  }
  return run_pool(items.size(), keys, [&](std::size_t k) {
    const auto reps = check_eigen_bound(domain, items[k].first, items[k].second);
    return tag(keys[k], {reps[0], reps[1]});
  });
}

InequalityReport blank_report(InequalityId id, const std::string& domain, std::size_t resolution) {
  InequalityReport r;
  r.id = id;
  r.p = std::numeric_limits<double>::quiet_NaN();
  r.domain = domain;
  r.resolution = resolution;
  r.solver = "none";
  return r;
}

std::vector<ItemOutcome> run_geodesic(const ExperimentConfig& c) {
  const auto domain = build_domain(c);
  if (domain.dim() != 1) invalid("geodesic runs on interval domains");
  if (!c.density0 || !c.density1) invalid("geodesic needs 'density0' and 'density1'");
  const auto f0fn = expression_function(*c.density0, 1);
  const auto f1fn = expression_function(*c.density1, 1);
  const auto times = geodesic_times(c);
  for (double t : times) {
    if (!(t >= 0.0 && t <= 1.0)) invalid("geodesic times must lie in [0, 1]");
  }
  const std::string id = base_id(c, "geodesic");
  std::vector<std::pair<double, std::size_t>> items;
  std::vector<std::string> keys;
  for (const auto& q : c.q_values) {
    for (std::size_t res : resolutions(c, "geodesic", domain)) {
      items.emplace_back(q.value, res);
      keys.push_back(id + "/q" + format_double(q.value) + "/n" + std::to_string(res));
    }
  }
  if (c.exponent) {
    for (std::size_t res : resolutions(c, "geodesic", domain)) {
      items.emplace_back(std::numeric_limits<double>::quiet_NaN(), res);
      keys.push_back(id + "/m" + format_double(*c.exponent) + "/n" + std::to_string(res));
    }
  }
  return run_pool(items.size(), keys, [&](std::size_t k) {
    const auto [q, res] = items[k];
    std::vector<ReportRow> rows;
    const GridPtr fine = discretize(domain, res);
    const auto f0 = sample(fine, f0fn, "f0"), f1 = sample(fine, f1fn, "f1");
    if (std::isnan(q)) {
      const double m = *c.exponent;
      const auto mu0 = from_density(f0), mu1 = from_density(f1);
      const auto full = monotone_transport_1d(mu0, mu1, m);
      for (double t : times) {
        const auto mid = displacement_interpolate(full.plan, t);
        const double w = wasserstein_1d(mu0, mid.measure, m);
        auto r = blank_report(InequalityId::GeodesicSpeed, domain.label(), res);
        r.r = m;
        r.solver = "1d";
        r.lhs = std::abs(w - t * full.distance);
        r.rhs = 1e-6 * full.distance;
        r.slack = r.rhs - r.lhs;
        r.error_bar = 1e-12 * full.distance;
        r.details.emplace_back("t", t);
        r.details.emplace_back("distance", w);
        rows.push_back({keys[k] + "/t" + format_double(t), std::move(r)});
      }
      return rows;
    }
    const GridPtr coarse = discretize(domain, std::max<std::size_t>(res / 2, 2));
    const auto report = lq_convexity_check(f0, f1, q, times, fine);
    const auto coarse_report =
        lq_convexity_check(sample(coarse, f0fn, "f0"), sample(coarse, f1fn, "f1"), q, times, coarse);
    const double mass0 = lr_norm(f0, 1.0), mass1 = lr_norm(f1, 1.0);
    const double n0 = lr_norm(f0.scaled(1.0 / mass0), q), n1 = lr_norm(f1.scaled(1.0 / mass1), q);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double t = times[i];
      auto r = blank_report(InequalityId::Convexity, domain.label(), res);
      r.q = q;
      r.rhs = std::pow((1.0 - t) * n0 + t * n1, 1.0 / q);
      r.lhs = r.rhs + report.violations[i];
      r.slack = -report.violations[i];
      r.error_bar = std::abs(report.violations[i] - coarse_report.violations[i]) + 1e-12 * (r.lhs + r.rhs);
      r.details.emplace_back("t", t);
      r.details.emplace_back("mass_drift", report.max_mass_drift);
      rows.push_back({keys[k] + "/t" + format_double(t), std::move(r)});
    }
    return rows;
  });
}

std::vector<ItemOutcome> run_scaling(const ExperimentConfig& c) {
  std::vector<std::pair<double, double>> items;
  std::vector<std::string> keys;
  const std::string id = base_id(c, "scaling");
  const auto res = c.resolutions.empty() ? std::size_t{64} : c.resolutions.front();
  for (double p : c.p_values) {
    for (const auto& qs : c.q_values) {
      const double q = qs.resolve(p);
      items.emplace_back(p, q);
      keys.push_back(id + "/p" + format_double(p) + "/q" + format_double(q));
    }
  }
  return run_pool(items.size(), keys, [&](std::size_t k) {
    const auto [p, q] = items[k];
    const auto s = thin_box_scaling(p, q, c.n_values, res);
    InequalityReport r;
    r.id = InequalityId::Scaling;
    r.p = p;
    r.q = q;
    r.r = transport_exponent(p, q);
    r.domain = "thin_box";
    r.resolution = res;
    r.solver = "none";
    r.lhs = std::abs(s.slope - s.target);
    r.rhs = 0.05 * std::abs(s.target);
    r.slack = r.rhs - r.lhs;
    r.error_bar = 1e-12 * (r.lhs + r.rhs);
    r.details.emplace_back("slope", s.slope);
    r.details.emplace_back("target", s.target);
    for (std::size_t i = 0; i < s.n.size(); ++i) r.details.emplace_back("ratio_n" + std::to_string(s.n[i]), s.ratio[i]);
    return std::vector<ReportRow>{{keys[k], std::move(r)}};
  });
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text, std::string_view subcommand) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    invalid(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) invalid("config must be a JSON object");
  ExperimentConfig c;
  bool q_given = false;
  for (const auto& [key, v] : j.items()) {
    if (key == "experiment_id") {
      if (!v.is_string()) invalid("'experiment_id' must be a string");
      c.experiment_id = v.get<std::string>();
      if (c.experiment_id.find_first_of(",\n\r/\\") != std::string::npos) {
        invalid("'experiment_id' must not contain commas, slashes or line breaks");
      }
    } else if (key == "domain") {
      c.domain = parse_domain(v);
    } else if (key == "field") {
      c.field = parse_field(v);
    } else if (key == "p" || key == "p_values") {
      c.p_values = as_numbers(v, key);
    } else if (key == "q" || key == "q_values") {
      c.q_values.clear();
      if (v.is_array()) {
        for (const auto& e : v) c.q_values.push_back(parse_exponent(e));
      } else {
        c.q_values.push_back(parse_exponent(v));
      }
      q_given = true;
    } else if (key == "solver") {
      if (!v.is_string()) invalid("'solver' must be a string");
      c.solver = parse_solver(v.get<std::string>());
    } else if (key == "resolution" || key == "resolutions") {
      c.resolutions = as_counts(v, key);
    } else if (key == "seed") {
      c.seed = as_count(v, key);
    } else if (key == "instances") {
      c.instances = as_count(v, key);
    } else if (key == "n_values") {
      c.n_values = as_counts(v, key);
    } else if (key == "density0" || key == "density1") {
      if (!v.is_string()) invalid("'" + key + "' must be an expression string");
      (key == "density0" ? c.density0 : c.density1) = v.get<std::string>();
    } else if (key == "times") {
      c.times = as_numbers(v, key);
    } else if (key == "exponent") {
      c.exponent = as_number(v, key);
      if (!(*c.exponent >= 1.0)) invalid("'exponent' must be >= 1");
    } else if (key == "checks") {
      if (!v.is_array()) invalid("'checks' must be an array of names");
      for (const auto& e : v) {
        if (!e.is_string()) invalid("'checks' must be an array of names");
        c.checks.push_back(parse_inequality(e.get<std::string>()));
      }
    } else {
      invalid("unknown config key '" + key + "'");
    }
  }
  if (subcommand == "geodesic" && !q_given) c.q_values = {{1.0, false}, {2.0, false}, {3.0, false}};
  for (std::size_t r : c.resolutions) {
    if (r < 2) invalid("resolutions must be at least 2");
  }
  validate_exponents(c, subcommand);
  return c;
}

std::string version_info() {
  std::ostringstream s;
  s << "otpw " << kVersion << " (kernels: " << kernels::active().name << ")\n";
  s << "solver caps: exact pairs <= 250000; simplex pivots <= 50*arcs+10000; entropic rounds <= 200000; "
       "eigen iterations <= 20000\n";
  s << "default tolerances: see --tolerances\n";
  return s.str();
}

std::string tolerances_text() {
  return "constraint admission      |int |phi|^{q-2} phi| <= 1e-8 * int |phi|^{q-1}\n"
         "pass rule                 slack >= -error_bar\n"
         "roundoff floor            1e-12 * (|lhs| + |rhs|)\n"
         "exact pair cap            250000 atom pairs\n"
         "simplex epsilon           1e-12 * (max cost + 1)\n"
         "simplex infeasibility     artificial flow > 1e-10 * max(1, total mass)\n"
         "simplex pivot cap         50 * arcs + 10000\n"
         "entropic epsilon          1e-3 * median cost\n"
         "entropic marginal tol     1e-6 at every annealing step\n"
         "entropic rounds           200000 per annealing step, 10 steps\n"
         "entropic newton switch    64-round window gaining less than 10x\n"
         "eigen iterations          20000\n"
         "eigen stall window        50 iterations below 1e-10 relative decrease\n"
         "geodesic renormalization  mass drift > 1e-6\n"
         "geodesic speed            |W(mu0,mu_t) - t W(mu0,mu1)| <= 1e-6 * W(mu0,mu1)\n"
         "scaling slope             within 5% of (p - q) / q\n";
}

std::string schema_text() {
  return R"schema({
  "experiment_id": "string without , / or line breaks (default: subcommand name)",
  "domain": {"kind": "interval", "a": 0, "b": 1}
          | {"kind": "box", "lo": [0, 0], "hi": [1, 1]}
          | {"kind": "polygon", "vertices": [[0, 0], [1, 0], [0, 1]]},
  "field": "expression in x1..x3 (x, y, z); + - * / ^ sin cos exp log sqrt abs"
         | {"polynomial": {"degree": 1..4, "seed": integer}}
         | {"csv": "path with one value per grid cell"},
  "p" | "p_values": number | [numbers],
  "q" | "q_values": number | "p-<c>" | [entries],
  "solver": "auto" | "exact" | "entropic" | "1d",
  "resolution" | "resolutions": integer | [integers],
  "seed": integer,
  "instances": integer (sweep: random fields per (p, q, resolution)),
  "checks": ["main", "moment", "triangle", "nash", "pw", "expedient"],
  "density0", "density1": expression strings (expedient, geodesic),
  "times": [numbers in [0, 1]] (geodesic),
  "exponent": number >= 1 (geodesic speed check),
  "n_values": [integers] (scaling)
}
)schema";
}

RunResult execute(std::string_view subcommand, const ExperimentConfig& config, bool timing) {
  std::vector<ItemOutcome> outcomes;
  if (subcommand == "certify") {
    outcomes = run_certify(config);
  } else if (subcommand == "sweep") {
    outcomes = run_sweep(config);
  } else if (subcommand == "eigen") {
    outcomes = run_eigen(config);
  } else if (subcommand == "geodesic") {
    outcomes = run_geodesic(config);
  } else if (subcommand == "scaling") {
    outcomes = run_scaling(config);
  } else {
    invalid("unknown subcommand '" + std::string(subcommand) + "'");
  }
  RunResult result;
  bool usage = false, solver = false, violated = false;
  for (auto& o : outcomes) {
    for (auto& row : o.rows) {
      if (!timing) row.report.runtime_ms = 0.0;
      violated = violated || !row.report.passed();
      result.rows.push_back(std::move(row));
    }
    if (o.error) {
      result.errors.push_back(*o.error);
      (o.solver_error ? solver : usage) = true;
    }
  }
  result.exit_code = usage ? kUsage : solver ? kSolverFailure : violated ? kViolation : kOk;
  return result;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    out << version_info();
    return kOk;
  }

  CLI::App app{"Numerical certification of transport-based Poincare inequalities", "otpw"};
  bool show_version = false, show_tolerances = false, show_schema = false;
  app.add_flag("--version", show_version, "Print version and solver caps");
  app.add_flag("--tolerances", show_tolerances, "List default tolerances");
  app.add_flag("--schema", show_schema, "Print the config schema");

  struct Options {
    std::string config, out_dir, solver;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> resolution;
    bool quiet = false, timing = false, details = false;
  } opts;

  std::vector<CLI::App*> subs;
  for (auto [name, help] : {std::pair{"certify", "Check all inequalities for one field"},
                            std::pair{"sweep", "Certify over a (p, q, resolution) grid"},
                            std::pair{"eigen", "Neumann eigenvalue and diameter bounds"},
                            std::pair{"geodesic", "Displacement interpolation and L^q convexity"},
                            std::pair{"scaling", "Thin-box scaling of the Poincare ratio"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir, "Directory for <experiment_id>.csv");
    sub->add_option("--seed", opts.seed, "Seed for random fields");
    sub->add_option("--solver", opts.solver, "auto, exact, entropic or 1d");
    sub->add_option("--resolution", opts.resolution, "Cells per axis")->check(CLI::Range(2, 1 << 20));
    sub->add_flag("--quiet", opts.quiet, "Suppress CSV and summary on stdout");
    sub->add_flag("--timing", opts.timing, "Record wall-clock runtime_ms");
    sub->add_flag("--details", opts.details, "Also emit one JSON record per report");
    subs.push_back(sub);
  }
  app.add_subcommand("version", "Print version and solver caps");
  app.require_subcommand(0, 1);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  if (show_tolerances) {
    out << tolerances_text();
    return kOk;
  }
  if (show_schema) {
    out << schema_text();
    return kOk;
  }
  const auto chosen = app.get_subcommands();
  if (show_version || chosen.empty() || chosen.front()->get_name() == "version") {
    out << version_info();
    return kOk;
  }
  const std::string subcommand = chosen.front()->get_name();

  RunResult result;
  ExperimentConfig config;
  try {
    std::string text = "{}";
    if (!opts.config.empty()) {
      std::ifstream in(opts.config);
      std::ostringstream buf;
      buf << in.rdbuf();
      text = buf.str();
    }
    config = parse_config(text, subcommand);
    if (opts.seed) config.seed = *opts.seed;
    if (!opts.solver.empty()) config.solver = parse_solver(opts.solver);
    if (opts.resolution) config.resolutions = {*opts.resolution};
    result = execute(subcommand, config, opts.timing);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_solver_error(e.code()) ? kSolverFailure : kUsage;
  }

  for (const auto& e : result.errors) err << "error: " << e << '\n';

  const std::string id = base_id(config, subcommand);
  if (!opts.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(opts.out_dir, ec);
    const auto dir = std::filesystem::path(opts.out_dir);
    std::ofstream csv(dir / (id + ".csv"), std::ios::binary | std::ios::trunc);
    if (!csv) {
      err << "error: cannot write " << (dir / (id + ".csv")).string() << '\n';
      return kUsage;
    }
    write_report_csv(csv, result.rows);
    if (opts.details) {
      std::ofstream jl(dir / (id + ".jsonl"), std::ios::binary | std::ios::trunc);
      for (const auto& row : result.rows) jl << detail_record(row) << '\n';
    }
  } else if (!opts.quiet) {
    write_report_csv(out, result.rows);
    if (opts.details) {
      for (const auto& row : result.rows) out << detail_record(row) << '\n';
    }
  }

  if (!opts.quiet) {
    std::size_t failed = 0;
    for (const auto& row : result.rows) failed += row.report.passed() ? 0 : 1;
    err << result.rows.size() << " reports, " << failed << " violations, " << result.errors.size() << " errors\n";
  }
  return result.exit_code;
}

}  // namespace otpw::cli
