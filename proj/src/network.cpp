#include "bcplink/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bcplink/errors.hpp"

namespace bcplink::network {

namespace {

void check_refs(const port_impedances& refs) {
  if (!(refs.zp1.real() > 0.0) || !(refs.zp2.real() > 0.0)) {
    throw std::invalid_argument("reference impedances must have positive real part");
  }
}

[[noreturn]] void throw_degenerate(double f_hz) {
  throw std::domain_error("degenerate two-port denominator at f = " + std::to_string(f_hz) +
                          " Hz");
}

}  // namespace

two_port_abcd series_element(complex z, double f_hz) {
  return {f_hz, {1.0, 0.0}, z, {0.0, 0.0}, {1.0, 0.0}};
}

two_port_abcd shunt_element(complex y, double f_hz) {
  return {f_hz, {1.0, 0.0}, {0.0, 0.0}, y, {1.0, 0.0}};
}

two_port_abcd cascade(const std::vector<two_port_abcd>& chain) {
  if (chain.empty()) throw std::invalid_argument("cascade of zero two-ports");
  two_port_abcd acc = chain.front();
  for (std::size_t i = 1; i < chain.size(); ++i) {
    const auto& m = chain[i];
    const double scale = std::max(std::abs(acc.f_hz), std::abs(m.f_hz));
    if (std::abs(m.f_hz - acc.f_hz) > 1e-9 * std::max(scale, 1.0)) {
      throw std::invalid_argument("cascade of two-ports at different frequencies");
    }
    two_port_abcd r;
    r.f_hz = acc.f_hz;
    r.a = acc.a * m.a + acc.b * m.c;
    r.b = acc.a * m.b + acc.b * m.d;
    r.c = acc.c * m.a + acc.d * m.c;
    r.d = acc.c * m.b + acc.d * m.d;
    acc = r;
  }
  return acc;
}

complex determinant(const two_port_abcd& t) { return t.a * t.d - t.b * t.c; }

bool is_reciprocal(const two_port_abcd& t, double tol) {
  return std::abs(determinant(t) - complex(1.0, 0.0)) < tol;
}

complex input_impedance(const two_port_abcd& t, complex z_term) {
  const complex den = t.c * z_term + t.d;
  if (std::abs(den) < degenerate_denominator) throw_degenerate(t.f_hz);
  return (t.a * z_term + t.b) / den;
}

complex output_impedance(const two_port_abcd& t, complex z_src) {
  const complex den = t.c * z_src + t.a;
  if (std::abs(den) < degenerate_denominator) throw_degenerate(t.f_hz);
  return (t.d * z_src + t.b) / den;
}

namespace {

complex s_denominator(const two_port_abcd& t, const port_impedances& refs) {
  return t.a * refs.zp2 + t.b + t.c * refs.zp1 * refs.zp2 + t.d * refs.zp1;
}

}  // namespace

complex s11_from_abcd(const two_port_abcd& t, const port_impedances& refs) {
  check_refs(refs);
  const complex den = s_denominator(t, refs);
  if (std::abs(den) < degenerate_denominator) throw_degenerate(t.f_hz);
  return (t.a * refs.zp2 + t.b - t.c * refs.zp1 * refs.zp2 - t.d * refs.zp1) / den;
}

complex s22_from_abcd(const two_port_abcd& t, const port_impedances& refs) {
  check_refs(refs);
  const complex den = s_denominator(t, refs);
  if (std::abs(den) < degenerate_denominator) throw_degenerate(t.f_hz);
  return (-t.a * refs.zp2 + t.b - t.c * refs.zp1 * refs.zp2 + t.d * refs.zp1) / den;
}

s_matrix abcd_to_s(const two_port_abcd& t, const port_impedances& refs) {
  check_refs(refs);
  const complex den = s_denominator(t, refs);
  if (std::abs(den) < degenerate_denominator) throw_degenerate(t.f_hz);
  const double k = 2.0 * std::sqrt(refs.zp1.real() * refs.zp2.real());
  s_matrix s;
  s.f_hz = t.f_hz;
  s.refs = refs;
  s.s11 = (t.a * refs.zp2 + t.b - t.c * refs.zp1 * refs.zp2 - t.d * refs.zp1) / den;
  s.s22 = (-t.a * refs.zp2 + t.b - t.c * refs.zp1 * refs.zp2 + t.d * refs.zp1) / den;
  s.s21 = k / den;
  s.s12 = k * determinant(t) / den;
  return s;
}

two_port_abcd s_to_abcd(const s_matrix& s) {
  check_refs(s.refs);
  if (std::abs(s.s21) < degenerate_denominator) {
    throw std::domain_error("s_to_abcd requires s21 != 0 at f = " + std::to_string(s.f_hz) +
                            " Hz");
  }
  const complex z1 = s.refs.zp1;
  const complex z2 = s.refs.zp2;
  const double k = 2.0 * std::sqrt(z1.real() * z2.real());
  const complex m = k / (4.0 * s.s21);
  const complex n = s.s12 * z1 * z2 / k;

  two_port_abcd t;
  t.f_hz = s.f_hz;
  t.a = ((1.0 + s.s11) * (1.0 - s.s22) * m + n) / z2;
  t.b = (1.0 + s.s11) * (1.0 + s.s22) * m - n;
  t.c = ((1.0 - s.s11) * (1.0 - s.s22) * m - n) / (z1 * z2);
  t.d = ((1.0 - s.s11) * (1.0 + s.s22) * m + n) / z1;
  return t;
}

double pte_percent(const s_matrix& s) { return 100.0 * std::norm(s.s21); }

stability_report stability_metrics(const s_matrix& s) {
  const complex delta = s.s11 * s.s22 - s.s12 * s.s21;
  const double cross = std::abs(s.s12 * s.s21);
  if (cross == 0.0) {
    throw unilateral_error("stability factor undefined for unilateral network (|s12*s21| = 0)");
  }
  stability_report r;
  r.delta_mag = std::abs(delta);
  r.k = (1.0 - std::norm(s.s11) - std::norm(s.s22) + std::norm(delta)) / (2.0 * cross);
  return r;
}

}  // namespace bcplink::network
