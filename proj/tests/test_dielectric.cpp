#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "bcplink/dielectric.hpp"
#include "bcplink/errors.hpp"

using namespace bcplink;
using dielectric::cole_cole_model;

// ---- oracle: hand evaluation with explicit real/imaginary arithmetic ----
// eps(w) = eps_inf + sum delta / (1 + (j w tau)^(1-a)) + sigma / (j w e0),
// written without std::complex so it shares no code with the library
namespace {

constexpr double oracle_pi = 3.14159265358979323846;
constexpr double oracle_eps0 = 8.8541878128e-12;

void oracle_eps(const cole_cole_model& m, double f_hz, double& re, double& im) {
  const double w = 2.0 * oracle_pi * f_hz;
  re = m.eps_inf;
  im = 0.0;
  for (const auto& p : m.poles) {
    // (j w tau)^(1-a) in polar form: magnitude (w tau)^(1-a), angle (1-a) pi/2
    const double mag = std::pow(w * p.tau, 1.0 - p.alpha);
    const double ang = 0.5 * oracle_pi * (1.0 - p.alpha);
    const double xr = 1.0 + mag * std::cos(ang);
    const double xi = mag * std::sin(ang);
    const double den = xr * xr + xi * xi;
    re += p.delta_eps * xr / den;
    im -= p.delta_eps * xi / den;
  }
  im -= m.sigma_static / (w * oracle_eps0);
}

double oracle_sigma(const cole_cole_model& m, double f_hz) {
  double re, im;
  oracle_eps(m, f_hz, re, im);
  return -2.0 * oracle_pi * f_hz * oracle_eps0 * im;
}

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({1e-300, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("shipped materials match the hand evaluation") {
  const auto db = dielectric::load_material_db_file(std::string(BCPLINK_SOURCE_DIR) +
                                                    "/data/tissues.mat");
  REQUIRE(db.size() == 4);
  for (const auto& name : db.names()) {
    const auto& m = db.at(name);
    for (double f : {0.1e9, 1.25e9, 3.0e9}) {
      CAPTURE(name);
      CAPTURE(f);
      double re, im;
      oracle_eps(m, f, re, im);
      const auto got = dielectric::complex_permittivity(m, f);
      CHECK(rel_diff(got.real(), re) < 1e-9);
      CHECK(rel_diff(got.imag(), im) < 1e-9);
      CHECK(rel_diff(dielectric::conductivity(m, f), oracle_sigma(m, f)) < 1e-9);
    }
  }
}

TEST_CASE("single-pole model approaches the static limit at low frequency") {
  // a Debye pole (alpha = 0): eps -> eps_inf + delta as f -> 0
  cole_cole_model m;
  m.name = "debye";
  m.eps_inf = 4.0;
  m.poles.push_back({50.0, 7.23e-12, 0.0});
  const auto eps = dielectric::complex_permittivity(m, 1e3);
  CHECK(std::abs(eps.real() - 54.0) / 54.0 < 1e-3);
  CHECK(std::abs(eps.imag()) / 54.0 < 1e-3);
}

TEST_CASE("imaginary part stays non-positive across the fitted band") {
  const auto db = dielectric::load_material_db_file(std::string(BCPLINK_SOURCE_DIR) +
                                                    "/data/tissues.mat");
  for (const auto& name : db.names()) {
    const auto& m = db.at(name);
    for (double f = dielectric::valid_f_min_hz; f <= dielectric::valid_f_max_hz; f *= 1.7) {
      CHECK(dielectric::complex_permittivity(m, f).imag() <= 0.0);
      CHECK(dielectric::conductivity(m, f) > 0.0);
    }
  }
}

TEST_CASE("conductivity grows with frequency for lossy tissue") {
  const auto db = dielectric::load_material_db_file(std::string(BCPLINK_SOURCE_DIR) +
                                                    "/data/tissues.mat");
  const auto& muscle = db.at("muscle");
  double prev = dielectric::conductivity(muscle, 1e6);
  for (double f = 1e7; f <= 1e10; f *= 10.0) {
    const double sigma = dielectric::conductivity(muscle, f);
    CHECK(sigma > prev);
    prev = sigma;
  }
}

TEST_CASE("validity band bounds") {
  CHECK(dielectric::in_validity_band(1e6));
  CHECK(dielectric::in_validity_band(10e9));
  CHECK_FALSE(dielectric::in_validity_band(0.9e6));
  CHECK_FALSE(dielectric::in_validity_band(10.1e9));
}

TEST_CASE("database rejects duplicates and lists names on a miss") {
  dielectric::material_db db;
  cole_cole_model m;
  m.name = "muscle";
  db.add(m);
  CHECK(db.contains("muscle"));
  CHECK_THROWS_AS(db.add(m), std::invalid_argument);
  CHECK_THROWS_WITH_AS(db.at("bone"), doctest::Contains("muscle"), std::invalid_argument);
}

TEST_CASE("parser reads the bracketed section format") {
  std::istringstream in(
      "# demo file\n"
      "[material water]\n"
      "eps_inf = 5.2\n"
      "sigma_static = 0.01\n"
      "pole = 73.0, 8.3e-12, 0.02\n");
  const auto db = dielectric::load_material_db(in, "demo");
  const auto& m = db.at("water");
  CHECK(m.eps_inf == 5.2);
  CHECK(m.sigma_static == 0.01);
  REQUIRE(m.poles.size() == 1);
  CHECK(m.poles[0].delta_eps == 73.0);
  CHECK(m.poles[0].tau == 8.3e-12);
  CHECK(m.poles[0].alpha == 0.02);
}

TEST_CASE("parser reports the offending line") {
  SUBCASE("bad number") {
    std::istringstream in("[material x]\neps_inf = abc\n");
    try {
      dielectric::load_material_db(in, "demo");
      FAIL("expected parse_error");
    } catch (const parse_error& e) {
      CHECK(e.line() == 2);
      CHECK(e.origin() == "demo");
    }
  }
  SUBCASE("key outside a section") {
    std::istringstream in("eps_inf = 4\n");
    CHECK_THROWS_AS(dielectric::load_material_db(in, "demo"), parse_error);
  }
  SUBCASE("alpha out of range") {
    std::istringstream in("[material x]\npole = 50, 1e-12, 1.5\n");
    CHECK_THROWS_AS(dielectric::load_material_db(in, "demo"), parse_error);
  }
  SUBCASE("too many poles") {
    std::ostringstream text;
    text << "[material x]\n";
    for (int i = 0; i <= dielectric::max_poles_per_material; ++i) {
      text << "pole = 1, 1e-12, 0\n";
    }
    std::istringstream in(text.str());
    CHECK_THROWS_AS(dielectric::load_material_db(in, "demo"), parse_error);
  }
}

TEST_CASE("missing file raises io_error") {
  CHECK_THROWS_AS(dielectric::load_material_db_file("/nonexistent/x.mat"), io_error);
}

TEST_CASE("evaluation rejects nonpositive frequency") {
  cole_cole_model m;
  m.eps_inf = 2.0;
  CHECK_THROWS_AS(dielectric::complex_permittivity(m, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(dielectric::complex_permittivity(m, -1e9), std::invalid_argument);
}
