#include "generators.hpp"

#include "cli/artifacts.hpp"
#include "cli/compare.hpp"
#include "cli/config.hpp"
#include "cli/scenarios.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qfilt;
using namespace qfilt::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qfilt_unit_" + name);
  fs::remove_all(p);
  return p;
}

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("config round trip") {
  const std::string text =
      "scenario: qubit-diffusive\n"
      "model:\n"
      "  h: [0, 0, 0.5]\n"
      "  l: [0, 0, 1]\n"
      "  nu: 250\n"
      "  L: {matrix: [[0, 1], [[0, 1], 0]]}\n"
      "initial:\n"
      "  psi: [0.6, [0, 0.8]]\n"
      "grid:\n"
      "  T: 0.5\n"
      "  dt: 0.0001\n"
      "ensemble:\n"
      "  N: 123\n"
      "  seed: 99\n"
      "scheme:\n"
      "  method: exponential\n"
      "params:\n"
      "  separations: [0.01, 1e-06]\n"
      "  f: [1, -1]\n";
  const ScenarioConfig c = parse_config(text);
  CHECK(c.nu == 250.0);
  CHECK(c.N == 123u);
  REQUIRE(c.psi.has_value());
  CHECK((*c.psi)[1] == cplx(0, 0.8));
  REQUIRE(c.L.has_value());
  CHECK(c.L->build().matrix()(1, 0) == cplx(0, 1));
  CHECK(c.line_of("model.nu") == 5);
  const std::string once = serialize_config(c);
  CHECK(parse_config(once) == c);
  CHECK(serialize_config(parse_config(once)) == once);

  for (std::uint64_t k = 0; k < 30; ++k) {
    auto rng = gen::stream(7000 + k);
    ScenarioConfig r;
    r.scenario = "diffusive";
    r.l = gen::in_ball(rng);
    r.nu = 1.0 + rng.uniform() * 1e4;
    r.T = rng.uniform();
    r.psi = std::vector<cplx>{cplx(rng.normal(), rng.normal()), cplx(rng.normal(), 0.0)};
    r.seed = rng();
    CHECK(parse_config(serialize_config(r)) == r);
  }
}

TEST_CASE("config errors carry line numbers") {
  CHECK(error_line("scenario: bell\nmodel:\n  nu: 3\n  bogus: 1\n") == 4);
  CHECK(error_line("scenario: bell\ngrid:\n  T: 1\n  T: 2\n") == 4);
  CHECK(error_line("scenario: bell\nwhatever:\n  a: 1\n") == 2);
  CHECK(error_line("scenario: bell\ngrid:\n  T: abc\n") == 3);
  ScenarioConfig bad = parse_config("scenario: jump\nmodel:\n  nu: -1\n");
  try {
    validate_config(bad);
    FAIL("negative nu accepted");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(validate_config(parse_config("scenario: nope\n")), ConfigError);
  CHECK_THROWS_AS(validate_config(parse_config("scenario: diffusive\ngrid:\n  dt: 0\n")), ConfigError);
}

TEST_CASE("tolerance specs") {
  const ToleranceSpec a = ToleranceSpec::parse("0.05");
  CHECK(a.for_column("anything") == 0.05);
  const ToleranceSpec b = ToleranceSpec::parse("x=0.1,y=1e-3,*=2");
  CHECK(b.for_column("x") == 0.1);
  CHECK(b.for_column("y") == 1e-3);
  CHECK(b.for_column("z") == 2.0);
  CHECK(!ToleranceSpec::parse("x=1").for_column("z").has_value());
  CHECK_THROWS(ToleranceSpec::parse("x=abc"));
}

TEST_CASE("table comparison") {
  Table t({"t", "a"});
  t.add_row({0.0, 1.0});
  t.add_row({0.5, -2.0});
  const Table back = parse_csv(t.to_csv());
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);
  const CompareReport self = compare_tables(t, back, ToleranceSpec::parse("0"));
  CHECK(self.pass);
  for (const auto& c : self.columns) CHECK(c.max_abs == 0.0);

  Table u = t;
  u.rows[1][1] = -1.9;
  const CompareReport diff = compare_tables(t, u, ToleranceSpec::parse("a=0.05"));
  CHECK(!diff.pass);
  CHECK(diff.columns[1].max_abs == doctest::Approx(0.1));
  CHECK(diff.columns[1].mean_abs == doctest::Approx(0.05));
  CHECK(compare_tables(t, u, ToleranceSpec::parse("0.2")).pass);

  Table other({"t", "b"});
  other.add_row({0.0, 1.0});
  other.add_row({0.5, 1.0});
  CHECK_THROWS_AS(compare_tables(t, other, ToleranceSpec::parse("1")), SchemaError);
  Table shorter({"t", "a"});
  shorter.add_row({0.0, 1.0});
  CHECK_THROWS_AS(compare_tables(t, shorter, ToleranceSpec::parse("1")), SchemaError);
  CHECK_THROWS_AS(compare_tables(t, t, ToleranceSpec::parse("q=1")), SchemaError);
  CHECK_THROWS(parse_csv("a,b\n1,x\n"));
}

TEST_CASE("manifest hashes match the written files") {
  const fs::path dir = scratch("manifest");
  ScenarioConfig c = parse_config("scenario: spectra\nparams:\n  points: 20\n");
  run_scenario(c, dir.string());
  const auto manifest = Json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["schema_version"] == kSchemaVersion);
  CHECK(manifest["scenario"] == "spectra");
  REQUIRE(manifest["artifacts"].size() >= 2);
  for (const auto& a : manifest["artifacts"]) {
    const std::string body = slurp(dir / a["file"].get<std::string>());
    CHECK(sha256_hex(body) == a["sha256"].get<std::string>());
    CHECK(body.size() == a["bytes"].get<std::size_t>());
  }
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::remove_all(dir);
}

TEST_CASE("output does not depend on the worker count") {
  for (const char* sc : {"diffusive", "jump"}) {
    std::string text = std::string("scenario: ") + sc +
                       "\ngrid:\n  T: 0.2\n  dt: 0.01\nensemble:\n  N: 600\n  seed: 11\n";
    ScenarioConfig c1 = parse_config(text + "  workers: 1\n");
    ScenarioConfig c3 = parse_config(text + "  workers: 3\n");
    const fs::path d1 = scratch(std::string(sc) + "_w1"), d3 = scratch(std::string(sc) + "_w3");
    run_scenario(c1, d1.string());
    run_scenario(c3, d3.string());
    int files = 0;
    for (const auto& e : fs::directory_iterator(d1)) {
      CHECK_MESSAGE(slurp(e.path()) == slurp(d3 / e.path().filename()), e.path().string());
      ++files;
    }
    CHECK(files >= 3);
    fs::remove_all(d1);
    fs::remove_all(d3);
  }
}

TEST_CASE("output directory precedence") {
  ScenarioConfig c;
  c.scenario = "bell";
  ::unsetenv(kOutDirEnv);
  CHECK(resolve_out_dir(c, std::nullopt) == "qfilt_out");
  ::setenv(kOutDirEnv, "from_env", 1);
  CHECK(resolve_out_dir(c, std::nullopt) == "from_env");
  c.out_dir = "from_config";
  CHECK(resolve_out_dir(c, std::nullopt) == "from_config");
  CHECK(resolve_out_dir(c, std::string("from_flag")) == "from_flag");
  ::unsetenv(kOutDirEnv);
}
