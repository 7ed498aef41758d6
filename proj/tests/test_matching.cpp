#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "bcplink/channel.hpp"
#include "bcplink/dielectric.hpp"
#include "bcplink/errors.hpp"
#include "bcplink/matching.hpp"
#include "bcplink/network.hpp"

using namespace bcplink;
using network::complex;
using matching::element_kind;
using matching::l_section;
using matching::section_side;
using matching::section_topology;

namespace {

const char* kMaterials = BCPLINK_SOURCE_DIR "/data/tissues.mat";
const char* kStack = BCPLINK_SOURCE_DIR "/data/forearm.stack";

constexpr double kPi = 3.14159265358979323846;

// ---- oracle: evaluate a synthesized section by direct circuit arithmetic ----
// The defining property of a matching section is that the to-port
// termination appears as the conjugate of z_from at the from port.  This
// evaluator walks the two elements by hand instead of going through
// imn_abcd, so synthesis and verification share no code.

complex element_reactance(const matching::imn_element& e, double w) {
  if (e.kind == element_kind::inductor) return complex(0.0, w * e.value);
  return complex(0.0, -1.0 / (w * e.value));
}

complex element_susceptance(const matching::imn_element& e, double w) {
  if (e.kind == element_kind::capacitor) return complex(0.0, w * e.value);
  return complex(0.0, -1.0 / (w * e.value));
}

complex seen_from_port(const l_section& sec, complex z_to) {
  const double w = 2.0 * kPi * sec.f0;
  const complex zx = element_reactance(sec.series_elem, w);
  const complex yb = element_susceptance(sec.shunt_elem, w);
  if (sec.topology == section_topology::series_then_shunt) {
    // series at the from port, shunt across the to port
    return zx + 1.0 / (yb + 1.0 / z_to);
  }
  // shunt at the from port, series into the to port
  return 1.0 / (yb + 1.0 / (zx + z_to));
}

// fixture with k < 1 at 50 ohm references (checked numerically: k = -0.41)
network::two_port_abcd unstable_two_port() {
  network::s_matrix s;
  s.f_hz = 1.0e9;
  s.s11 = complex(0.9, 0.0);
  s.s21 = complex(1.5, 0.0);
  s.s12 = complex(0.5, 0.0);
  s.s22 = complex(0.9, 0.0);
  return network::s_to_abcd(s);
}

network::two_port_abcd tissue_channel(double f_hz) {
  static const auto db = dielectric::load_material_db_file(kMaterials);
  static const auto stack = channel::load_stack_file(kStack);
  channel::link_geometry g;
  return channel::channel_two_port(g, stack, db, f_hz);
}

}  // namespace

TEST_CASE("synthesized sections hit the conjugate target by direct evaluation") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> logr(std::log(1.0), std::log(2000.0));
  std::uniform_real_distribution<double> reac(-500.0, 500.0);
  int verified = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const complex z_from(std::exp(logr(rng)), reac(rng));
    const complex z_to(std::exp(logr(rng)), reac(rng));
    if (std::abs(z_to - std::conj(z_from)) < 1e-3 * std::abs(z_from)) continue;
    const auto cands = matching::synthesize_l_section_all(z_from, z_to, 1.0e9);
    REQUIRE(!cands.empty());
    for (const auto& sec : cands) {
      CHECK(sec.f0 == 1.0e9);
      CHECK(sec.series_elem.value > 0.0);
      CHECK(sec.shunt_elem.value > 0.0);
      const complex seen = seen_from_port(sec, z_to);
      CHECK(std::abs(seen - std::conj(z_from)) < 1e-6 * std::abs(z_from));
      ++verified;
    }
  }
  CHECK(verified > 400);  // most pairs admit two candidates
}

TEST_CASE("canonical resistive design values") {
  // 50 to 100 ohm at 1 GHz: series L = 50/w, shunt C = 0.01/w and the
  // mirrored series C / shunt L section, both with the series element first
  const auto cands = matching::synthesize_l_section_all({50.0, 0.0}, {100.0, 0.0}, 1.0e9);
  REQUIRE(cands.size() == 2);
  CHECK(cands[0].topology == section_topology::series_then_shunt);
  CHECK(cands[0].series_elem.kind == element_kind::inductor);
  CHECK(cands[0].series_elem.value == doctest::Approx(7.957747155e-9).epsilon(1e-9));
  CHECK(cands[0].shunt_elem.kind == element_kind::capacitor);
  CHECK(cands[0].shunt_elem.value == doctest::Approx(1.591549431e-12).epsilon(1e-9));
  CHECK(cands[1].series_elem.kind == element_kind::capacitor);
  CHECK(cands[1].series_elem.value == doctest::Approx(3.183098862e-12).epsilon(1e-9));
  CHECK(cands[1].shunt_elem.kind == element_kind::inductor);
  CHECK(cands[1].shunt_elem.value == doctest::Approx(1.591549431e-8).epsilon(1e-9));
  CHECK(matching::synthesize_l_section({50.0, 0.0}, {100.0, 0.0}, 1.0e9).series_elem.value ==
        cands[0].series_elem.value);
}

TEST_CASE("section synthesis input validation") {
  CHECK_THROWS_AS(matching::synthesize_l_section_all({50.0, 0.0}, {50.0, 0.0}, 1.0e9),
                  no_match_error);
  CHECK_THROWS_AS(matching::synthesize_l_section_all({50.0, 30.0}, {50.0, -30.0}, 1.0e9),
                  no_match_error);  // already conjugate
  CHECK_THROWS_AS(matching::synthesize_l_section_all({-5.0, 0.0}, {100.0, 0.0}, 1.0e9),
                  std::invalid_argument);
  CHECK_THROWS_AS(matching::synthesize_l_section_all({50.0, 0.0}, {0.0, 10.0}, 1.0e9),
                  std::invalid_argument);
  CHECK_THROWS_AS(matching::synthesize_l_section_all({50.0, 0.0}, {100.0, 0.0}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("section chain matrix against hand products") {
  const double w = 2.0 * kPi * 1.0e9;
  l_section sec;
  sec.f0 = 1.0e9;
  sec.series_elem = {element_kind::inductor, 50.0 / w};
  sec.shunt_elem = {element_kind::capacitor, 0.01 / w};

  sec.topology = section_topology::series_then_shunt;
  auto t = matching::imn_abcd(sec, 1.0e9);
  // [[1, jX],[0,1]] [[1,0],[jB,1]] = [[1 - XB, jX],[jB, 1]]
  CHECK(std::abs(t.a - complex(0.5, 0.0)) < 1e-12);
  CHECK(std::abs(t.b - complex(0.0, 50.0)) < 1e-9);
  CHECK(std::abs(t.c - complex(0.0, 0.01)) < 1e-14);
  CHECK(std::abs(t.d - complex(1.0, 0.0)) < 1e-12);

  sec.topology = section_topology::shunt_then_series;
  t = matching::imn_abcd(sec, 1.0e9);
  // [[1,0],[jB,1]] [[1, jX],[0,1]] = [[1, jX],[jB, 1 - XB]]
  CHECK(std::abs(t.a - complex(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(t.b - complex(0.0, 50.0)) < 1e-9);
  CHECK(std::abs(t.c - complex(0.0, 0.01)) < 1e-14);
  CHECK(std::abs(t.d - complex(0.5, 0.0)) < 1e-12);

  CHECK(std::abs(network::determinant(t) - complex(1.0, 0.0)) < 1e-12);

  sec.series_elem.value = 0.0;
  CHECK_THROWS_AS(matching::imn_abcd(sec, 1.0e9), std::invalid_argument);
  sec.series_elem.value = 1e-9;
  CHECK_THROWS_AS(matching::imn_abcd(sec, 0.0), std::invalid_argument);
}

TEST_CASE("series rc load impedance") {
  const auto z = matching::load_impedance({1000.0, 5e-12}, 1.25e9);
  CHECK(z.real() == 1000.0);
  CHECK(z.imag() == doctest::Approx(-25.4647908947).epsilon(1e-9));
  CHECK(matching::load_impedance({50.0, 0.0}, 1.25e9) == complex(50.0, 0.0));
  CHECK_THROWS_AS(matching::load_impedance({0.0, 1e-12}, 1.0e9), std::invalid_argument);
  CHECK_THROWS_AS(matching::load_impedance({50.0, -1e-12}, 1.0e9), std::invalid_argument);
  CHECK_THROWS_AS(matching::load_impedance({50.0, 0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("conjugate match solves the fixed point equations") {
  // zs and zl are simultaneous terminations: loading port 2 with zl must
  // present conj(zs) at port 1 and driving with zs must present conj(zl)
  // at port 2; input/output impedance provide the independent route
  const auto ch = tissue_channel(1.25e9);
  const auto cm = matching::simultaneous_conjugate_match(network::abcd_to_s(ch, {}));
  CHECK_FALSE(cm.marginal);
  const complex zin = network::input_impedance(ch, cm.zl);
  const complex zout = network::output_impedance(ch, cm.zs);
  CHECK(std::abs(zin - std::conj(cm.zs)) < 1e-6 * std::abs(cm.zs));
  CHECK(std::abs(zout - std::conj(cm.zl)) < 1e-6 * std::abs(cm.zl));
  // regression anchors
  CHECK(cm.zs.real() == doctest::Approx(586.934003088).epsilon(1e-9));
  CHECK(cm.zs.imag() == doctest::Approx(609.001299106).epsilon(1e-9));
  CHECK(cm.zl.real() == doctest::Approx(1141.766728338).epsilon(1e-9));
  CHECK(cm.zl.imag() == doctest::Approx(374.191394790).epsilon(1e-9));
}

TEST_CASE("conjugate match of a resistive pad recovers the design references") {
  const auto pad = network::cascade({network::series_element({16.614, 0.0}, 1.0e9),
                                     network::shunt_element({1.0 / 66.93, 0.0}, 1.0e9),
                                     network::series_element({16.614, 0.0}, 1.0e9)});
  const auto cm = matching::simultaneous_conjugate_match(network::abcd_to_s(pad, {}));
  CHECK(cm.zs.real() == doctest::Approx(50.0).epsilon(2e-5));
  CHECK(std::abs(cm.zs.imag()) < 1e-9);
  CHECK(std::abs(cm.zl - cm.zs) < 1e-9);  // symmetric pad
}

TEST_CASE("conjugate match edge cases") {
  // lossless reciprocal two-ports sit exactly on the k = 1 boundary; the
  // match degenerates and the reference impedance is returned as the
  // distinguished marginal answer
  const auto line = network::series_element({0.0, 80.0}, 1.0e9);
  const auto cm = matching::simultaneous_conjugate_match(network::abcd_to_s(line, {}));
  CHECK(cm.marginal);
  CHECK(std::abs(cm.zs - complex(50.0, 0.0)) < 1e-6);
  CHECK(std::abs(cm.zl - complex(50.0, 0.0)) < 1e-6);

  // k < 1: no simultaneous match exists
  try {
    matching::simultaneous_conjugate_match(network::abcd_to_s(unstable_two_port(), {}));
    FAIL("expected no_match_error");
  } catch (const no_match_error& e) {
    CHECK(std::string(e.what()).find("k = ") != std::string::npos);
  }

  // s12 = 0: the bilateral formulas are undefined
  network::s_matrix s;
  s.f_hz = 1.0e9;
  s.s11 = complex(0.2, 0.0);
  s.s21 = complex(0.8, 0.0);
  s.s12 = complex(0.0, 0.0);
  s.s22 = complex(0.1, 0.0);
  CHECK_THROWS_AS(matching::simultaneous_conjugate_match(s), unilateral_error);

  // complex references carry convention baggage; refuse them
  s.s12 = complex(0.1, 0.0);
  s.refs.zp1 = complex(50.0, 10.0);
  CHECK_THROWS_AS(matching::simultaneous_conjugate_match(s), std::invalid_argument);
}

TEST_CASE("co determined link hits the matched gain of the channel") {
  const auto ch = tissue_channel(1.25e9);
  // independent route to the same number: the matched gain from the
  // stability factor of the bare channel, 100 (k - sqrt(k^2 - 1))
  const double k = network::stability_metrics(network::abcd_to_s(ch, {})).k;
  const double gmax = 100.0 * (k - std::sqrt(k * k - 1.0));

  const auto sol = matching::co_determine(ch, {50.0, 0.0}, 1.25e9);
  CHECK_FALSE(sol.marginal);
  CHECK(sol.matched_pte == doctest::Approx(gmax).epsilon(1e-9));
  CHECK(sol.matched_pte == doctest::Approx(33.149519617).epsilon(1e-9));
  CHECK(sol.residual_s11_db < -250.0);
  CHECK(sol.residual_s22_db < -250.0);
  CHECK(sol.deviation_note.empty());

  // preferred element pattern: tx series inductor + shunt capacitor,
  // rx series capacitor + shunt inductor
  CHECK(sol.tx_imn.side == section_side::tx);
  CHECK(sol.tx_imn.series_elem.kind == element_kind::inductor);
  CHECK(sol.tx_imn.shunt_elem.kind == element_kind::capacitor);
  CHECK(sol.rx_imn.side == section_side::rx);
  CHECK(sol.rx_imn.series_elem.kind == element_kind::capacitor);
  CHECK(sol.rx_imn.shunt_elem.kind == element_kind::inductor);
  CHECK(sol.zs_opt.real() == doctest::Approx(586.934003088).epsilon(1e-6));
  CHECK(sol.zl_opt.imag() == doctest::Approx(374.191394790).epsilon(1e-6));
}

TEST_CASE("co determined link handles capacitive loads") {
  const auto ch = tissue_channel(1.25e9);
  const auto s500 = matching::co_determine(ch, {500.0, 5e-12}, 1.25e9);
  CHECK(s500.matched_pte == doctest::Approx(33.053204924).epsilon(1e-9));
  CHECK(s500.residual_s11_db < -250.0);
  CHECK(s500.residual_s22_db < -250.0);
  const auto s1k = matching::co_determine(ch, {1000.0, 5e-12}, 1.25e9);
  CHECK(s1k.matched_pte == doctest::Approx(33.125387647).epsilon(1e-9));
  CHECK(s1k.residual_s11_db < -250.0);
  CHECK(s1k.tx_imn.series_elem.value == doctest::Approx(3.106154287e-8).epsilon(1e-6));
  CHECK(s1k.rx_imn.shunt_elem.value == doctest::Approx(1.911636523e-7).epsilon(1e-6));
}

TEST_CASE("polish never worsens the seed residuals") {
  // the polish drives both reflections to zero against the real source and
  // load; for a lossy channel that equality match gives up a little
  // efficiency relative to the conjugate seed, so pte may move either way,
  // but the worst residual must only improve
  const auto ch = tissue_channel(1.25e9);
  const auto rough = matching::co_determine(ch, {500.0, 5e-12}, 1.25e9, 50.0, false);
  const auto fine = matching::co_determine(ch, {500.0, 5e-12}, 1.25e9, 50.0, true);
  const double rough_worst = std::max(rough.residual_s11_db, rough.residual_s22_db);
  const double fine_worst = std::max(fine.residual_s11_db, fine.residual_s22_db);
  CHECK(fine_worst <= rough_worst + 1e-9);
  CHECK(fine_worst < -250.0);
  CHECK(rough_worst > -60.0);  // the seed alone leaves visible reflections
}

TEST_CASE("polished solution is a reflection zero") {
  // nudging any element off the polished value must degrade the worst
  // reflection residual; efficiency is not the polished objective (the
  // reflection zero sits slightly off the maximum-gain point), so only the
  // residual is locally optimal
  const auto ch = tissue_channel(1.25e9);
  const auto sol = matching::co_determine(ch, {500.0, 5e-12}, 1.25e9);
  const network::port_impedances refs{{50.0, 0.0},
                                      matching::load_impedance({500.0, 5e-12}, 1.25e9)};
  const double best_worst = std::max(sol.residual_s11_db, sol.residual_s22_db);
  for (int which = 0; which < 4; ++which) {
    for (double bump : {0.99, 1.01}) {
      auto tx = sol.tx_imn;
      auto rx = sol.rx_imn;
      auto& e = which == 0   ? tx.series_elem
                : which == 1 ? tx.shunt_elem
                : which == 2 ? rx.series_elem
                             : rx.shunt_elem;
      e.value *= bump;
      const auto probe = matching::verify_match(tx, ch, rx, refs);
      CHECK(std::max(probe.residual_s11_db, probe.residual_s22_db) > best_worst + 100.0);
    }
  }
}

TEST_CASE("co determine validates its inputs") {
  const auto ch = tissue_channel(1.25e9);
  CHECK_THROWS_AS(matching::co_determine(ch, {500.0, 5e-12}, 1.0e9), std::invalid_argument);
  CHECK_THROWS_AS(matching::co_determine(ch, {500.0, 5e-12}, 1.25e9, -50.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(matching::co_determine(unstable_two_port(), {50.0, 0.0}, 1.0e9),
                  no_match_error);
}

TEST_CASE("marginal channels pass straight through") {
  const auto line = network::series_element({0.0, 80.0}, 1.0e9);
  const auto sol = matching::co_determine(line, {50.0, 0.0}, 1.0e9);
  CHECK(sol.marginal);
  CHECK(sol.matched_pte == 100.0);
  CHECK(sol.residual_s11_db == 0.0);
  CHECK(sol.tx_imn.f0 == 0.0);  // no sections synthesized
}

TEST_CASE("verify match rejects mismatched design frequencies") {
  const auto ch = tissue_channel(1.25e9);
  const auto sol = matching::co_determine(ch, {50.0, 0.0}, 1.25e9);
  auto tx = sol.tx_imn;
  tx.f0 = 1.0e9;
  CHECK_THROWS_AS(matching::verify_match(tx, ch, sol.rx_imn, {}), std::invalid_argument);
}

TEST_CASE("matched pte across a frequency grid") {
  std::vector<network::two_port_abcd> chans;
  std::vector<double> fs;
  for (double f = 0.4e9; f <= 1.31e9; f += 0.1e9) fs.push_back(f);
  for (double f : fs) chans.push_back(tissue_channel(f));
  const auto pts = matching::matched_pte_sweep(chans, {500.0, 5e-12});
  REQUIRE(pts.size() == fs.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pts[i].f_hz == fs[i]);
    CHECK(pts[i].pte_pct > 0.0);
    CHECK(pts[i].pte_pct < 100.0);
    if (pts[i].pte_pct > pts[best].pte_pct) best = i;
  }
  CHECK(pts[best].f_hz == 0.7e9);
  CHECK(pts[best].pte_pct == doctest::Approx(33.930564904).epsilon(1e-9));
}

TEST_CASE("sweep input validation") {
  CHECK_THROWS_AS(matching::matched_pte_sweep({}, {50.0, 0.0}), std::invalid_argument);
  std::vector<network::two_port_abcd> wrong{tissue_channel(1.25e9), tissue_channel(1.0e9)};
  CHECK_THROWS_AS(matching::matched_pte_sweep(wrong, {50.0, 0.0}), std::invalid_argument);
}
