#pragma once

#include <complex>
#include <vector>

namespace bcplink::network {

using complex = std::complex<double>;

// transmission (chain) parameters, ports numbered left to right
struct two_port_abcd {
  double f_hz = 0.0;
  complex a{1.0, 0.0};
  complex b{0.0, 0.0};
  complex c{0.0, 0.0};
  complex d{1.0, 0.0};
};

// per-port reference impedances; real parts must be positive
struct port_impedances {
  complex zp1{50.0, 0.0};
  complex zp2{50.0, 0.0};
};

struct s_matrix {
  double f_hz = 0.0;
  complex s11, s12, s21, s22;
  port_impedances refs;
};

two_port_abcd series_element(complex z, double f_hz);
two_port_abcd shunt_element(complex y, double f_hz);

// matrix product left to right; throws std::invalid_argument on an empty
// chain or mismatched frequencies
two_port_abcd cascade(const std::vector<two_port_abcd>& chain);

complex determinant(const two_port_abcd& t);  // a*d - b*c, 1 for reciprocal
bool is_reciprocal(const two_port_abcd& t, double tol = 1e-9);

// impedance looking into port 1 with port 2 terminated in z_term
complex input_impedance(const two_port_abcd& t, complex z_term);
// impedance looking into port 2 with port 1 terminated in z_src
complex output_impedance(const two_port_abcd& t, complex z_src);

// traveling-wave S-parameters with per-port reference impedances.  The wave
// normalisation uses sqrt(Re zp1 * Re zp2), so |s21|^2 is the transducer
// power gain when the references equal the actual source and load
// impedances.  This is not the Kurokawa power-wave convention; the two agree
// for real references.
complex s11_from_abcd(const two_port_abcd& t, const port_impedances& refs);
complex s22_from_abcd(const two_port_abcd& t, const port_impedances& refs);
s_matrix abcd_to_s(const two_port_abcd& t, const port_impedances& refs);

// exact inverse of abcd_to_s for the same convention; requires s21 != 0
two_port_abcd s_to_abcd(const s_matrix& s);

// 100 * |s21|^2
double pte_percent(const s_matrix& s);

struct stability_report {
  double k = 0.0;          // Rollett stability factor
  double delta_mag = 0.0;  // |s11*s22 - s12*s21|
};

// throws unilateral_error when |s12*s21| == 0
stability_report stability_metrics(const s_matrix& s);

// denominators smaller than this are treated as degenerate
inline constexpr double degenerate_denominator = 1e-30;

}  // namespace bcplink::network
