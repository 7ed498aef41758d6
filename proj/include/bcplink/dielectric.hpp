#pragma once

#include <complex>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace bcplink::dielectric {

using complex = std::complex<double>;

struct cole_cole_pole {
  double delta_eps = 0.0;  // relaxation amplitude, dimensionless
  double tau = 1.0;        // relaxation time, seconds
  double alpha = 0.0;      // distribution exponent, in [0, 1)
};

// multi-pole Cole-Cole dispersion plus a static ionic conductivity term
struct cole_cole_model {
  std::string name;
  double eps_inf = 1.0;
  double sigma_static = 0.0;  // S/m
  std::vector<cole_cole_pole> poles;
};

// fitted tissue parameters are trusted in this band only; evaluation outside
// it still works but callers can flag the result
inline constexpr double valid_f_min_hz = 1.0e6;
inline constexpr double valid_f_max_hz = 10.0e9;

inline bool in_validity_band(double f_hz) {
  return f_hz >= valid_f_min_hz && f_hz <= valid_f_max_hz;
}

// relative complex permittivity; Im is <= 0 for any physical model
complex complex_permittivity(const cole_cole_model& m, double f_hz);

// total effective conductivity in S/m, -omega*eps0*Im(eps_r)
double conductivity(const cole_cole_model& m, double f_hz);

class material_db {
 public:
  void add(cole_cole_model m);  // throws std::invalid_argument on duplicates
  bool contains(const std::string& name) const;
  // throws std::invalid_argument listing available names when absent
  const cole_cole_model& at(const std::string& name) const;
  std::vector<std::string> names() const;
  std::size_t size() const { return m_materials.size(); }

 private:
  std::map<std::string, cole_cole_model> m_materials;
};

// parses the bracketed-section material format:
//   [material muscle]
//   eps_inf = 4.0
//   sigma_static = 0.20
//   pole = 50, 7.23e-12, 0.10
// origin is used for error messages only
material_db load_material_db(std::istream& in, const std::string& origin);
material_db load_material_db_file(const std::string& path);

inline constexpr int max_poles_per_material = 8;

}  // namespace bcplink::dielectric
