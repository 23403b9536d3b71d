#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "otpw/cli.hpp"
#include "otpw/error.hpp"
#include "otpw/report.hpp"

using namespace otpw;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("otpw_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_config(const std::filesystem::path& dir, const std::string& text) {
  const auto path = dir / "config.json";
  std::ofstream(path) << text;
  return path.string();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("version, tolerances and schema") {
  const auto none = run({});
  CHECK(none.code == 0);
  CHECK(none.out.rfind("otpw ", 0) == 0);
  CHECK(run({"version"}).out == none.out);

  const auto tol = run({"--tolerances"});
  CHECK(tol.code == 0);
  for (const char* key : {"1e-8", "1e-3 * median cost", "250000", "1e-6", "20000", "1e-12"}) {
    CHECK(tol.out.find(key) != std::string::npos);
  }
  const auto schema = run({"--schema"});
  CHECK(schema.code == 0);
  for (const char* key : {"\"domain\"", "\"field\"", "\"q_values\"", "\"solver\"", "\"seed\""}) {
    CHECK(schema.out.find(key) != std::string::npos);
  }
}

TEST_CASE("certify on the default instance") {
  const auto r = run({"certify"});
  CHECK(r.code == 0);
  CHECK(count_lines(r.out) == 6);
  CHECK(r.out.rfind(std::string(csv_header()), 0) == 0);
  for (const char* id : {",main,", ",moment,", ",triangle,", ",nash,", ",pw,"}) CHECK(r.out.find(id) != std::string::npos);
}

TEST_CASE("invalid exponents are a usage error") {
  const auto dir = scratch("bad");
  const auto r = run({"certify", "--config", write_config(dir, R"({"p": 2, "q": 2.5})")});
  CHECK(r.code == 1);
  CHECK(r.err.find("1 < q < p") != std::string::npos);
  CHECK(run({"certify", "--config", write_config(dir, R"({"p": 3, "q": 2, "colour": 1})")}).code == 1);
  CHECK(run({"certify", "--config", write_config(dir, R"({"domain": {"kind": "disk"}})")}).code == 1);
  CHECK(run({"certify", "--solver", "magic"}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"eigen", "--config", write_config(dir, R"({"p": 1})")}).code == 1);
}

TEST_CASE("solver failures map to exit 3") {
  const auto dir = scratch("solver");
  const auto cfg = write_config(dir, R"({"domain": {"kind": "box", "lo": [0, 0], "hi": [1, 1]},
                                         "field": "x1 - 0.5", "solver": "exact", "resolution": 64})");
  CHECK(run({"certify", "--config", cfg, "--quiet"}).code == 3);
}

TEST_CASE("sweep output is deterministic") {
  const auto dir = scratch("sweep");
  const auto cfg = write_config(dir, R"({"experiment_id": "det", "domain": {"kind": "polygon",
      "vertices": [[0, 0], [1, 0], [0.2, 0.9]]}, "field": {"polynomial": {"degree": 3}},
      "p_values": [3, 4], "q_values": [2, "p-0.5"], "resolution": 8, "instances": 2})");
  const auto a = dir / "a", b = dir / "b";
  CHECK(run({"sweep", "--config", cfg, "--out", a.string(), "--seed", "7", "--details"}).code == 0);
  CHECK(run({"sweep", "--config", cfg, "--out", b.string(), "--seed", "7", "--details"}).code == 0);
  const auto csv = slurp(a / "det.csv");
  CHECK(csv == slurp(b / "det.csv"));
  CHECK(slurp(a / "det.jsonl") == slurp(b / "det.jsonl"));
  CHECK(count_lines(csv) == 1 + 2 * 2 * 2 * 5);

  CHECK(run({"sweep", "--config", cfg, "--out", b.string(), "--seed", "8"}).code == 0);
  CHECK(slurp(b / "det.csv") != csv);
}

TEST_CASE("rows round-trip through the CSV schema") {
  const auto dir = scratch("roundtrip");
  std::string all;
  for (auto [sub, cfg] : {std::pair{"certify", R"({"field": "x^3 - 0.2", "density0": "1", "density1": "1 + x"})"},
                          std::pair{"eigen", R"({"p_values": [2, 3], "resolution": 64})"},
                          std::pair{"geodesic", R"({"density0": "1", "density1": "2*x", "resolution": 64, "exponent": 2})"},
                          std::pair{"scaling", R"({"p": 3, "q": 2, "resolution": 16})"}}) {
    const auto r = run({sub, "--config", write_config(dir, cfg)});
    CHECK_MESSAGE(r.code == 0, sub, r.err);
    all += r.out;
  }
  std::istringstream lines(all);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    if (line == csv_header()) continue;
    CHECK(format_row(parse_row(line)) == line);
    ++rows;
  }
  CHECK(rows > 20);
  CHECK_THROWS_AS(parse_row("a,b,c"), Error);
}

TEST_CASE("config parsing") {
  const auto c = cli::parse_config(R"({"domain": {"kind": "interval", "a": -1, "b": 1}, "q_values": ["p-0.5", 1.5],
                                      "p_values": [3], "resolution": [16, 32], "checks": ["main", "pw"]})",
                                   "sweep");
  CHECK(c.q_values.size() == 2);
  CHECK(c.q_values[0].resolve(3.0) == 2.5);
  CHECK(c.resolutions == std::vector<std::size_t>{16, 32});
  CHECK(c.checks.size() == 2);
  CHECK(cli::parse_config("{}", "geodesic").q_values.size() == 3);
  CHECK_THROWS_AS(cli::parse_config("[1, 2]", "certify"), Error);
  CHECK_THROWS_AS(cli::parse_config("{\"p\": 3, \"q\": \"p+1\"}", "certify"), Error);
  CHECK_THROWS_AS(cli::parse_config("{\"experiment_id\": \"a,b\"}", "certify"), Error);
}

TEST_CASE("installed binary") {
  const std::string bin = OTPW_CLI_PATH;
  const auto dir = scratch("binary");
  const auto status = std::system((bin + " certify --quiet").c_str());
  CHECK(WEXITSTATUS(status) == 0);
  std::ofstream(dir / "bad.json") << R"({"p": 2, "q": 3})";
  const auto bad = std::system((bin + " certify --quiet --config " + (dir / "bad.json").string() + " 2>/dev/null").c_str());
  CHECK(WEXITSTATUS(bad) == 1);
}
