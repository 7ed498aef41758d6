#include "bcplink/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bcplink/constants.hpp"
#include "bcplink/errors.hpp"

namespace bcplink::channel {

double layer_stack::total_thickness() const {
  double t = 0.0;
  for (const auto& l : layers) t += l.thickness;
  return t;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& tok, const std::string& origin, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw parse_error(origin, line, "expected a number, got '" + tok + "'");
  }
  if (used != tok.size()) {
    throw parse_error(origin, line, "trailing characters after number in '" + tok + "'");
  }
  return v;
}

}  // namespace

layer_stack load_stack(std::istream& in, const std::string& origin) {
  layer_stack stack;
  bool in_section = false;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s != "[stack]") throw parse_error(origin, line, "expected [stack], got " + s);
      if (in_section) throw parse_error(origin, line, "repeated [stack] section");
      in_section = true;
      continue;
    }
    if (!in_section) throw parse_error(origin, line, "content before [stack] section");

    const auto eq = s.find('=');
    if (eq == std::string::npos) throw parse_error(origin, line, "expected layer = name, thickness");
    const std::string key = trim(s.substr(0, eq));
    if (key != "layer") throw parse_error(origin, line, "unknown key '" + key + "'");
    const std::string val = trim(s.substr(eq + 1));
    const auto comma = val.find(',');
    if (comma == std::string::npos) {
      throw parse_error(origin, line, "layer needs: material, thickness");
    }
    tissue_layer l;
    l.material = trim(val.substr(0, comma));
    l.thickness = parse_number(trim(val.substr(comma + 1)), origin, line);
    if (l.material.empty()) throw parse_error(origin, line, "empty material name");
    if (!(l.thickness > 0.0)) {
      throw parse_error(origin, line, "layer '" + l.material + "': thickness must be > 0");
    }
    stack.layers.push_back(std::move(l));
  }
  if (stack.layers.empty()) throw parse_error(origin, 1, "no layers defined");
  return stack;
}

layer_stack load_stack_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open stack file '" + path + "'");
  return load_stack(in, path);
}

bool set_geometry_field(link_geometry& geom, const std::string& key, double value) {
  if (key == "d_h") geom.d_h = value;
  else if (key == "d_v") geom.d_v = value;
  else if (key == "d_tx") geom.d_tx = value;
  else if (key == "t_tx") geom.t_tx = value;
  else if (key == "h_tx") geom.h_tx = value;
  else if (key == "r_rx") geom.r_rx = value;
  else if (key == "h_rx") geom.h_rx = value;
  else if (key == "h_implant") geom.h_implant = value;
  else if (key == "r_tissue") geom.r_tissue = value;
  else if (key == "theta" || key == "theta_deg") geom.theta_deg = value;
  else return false;
  return true;
}

link_geometry load_geometry(std::istream& in, const std::string& origin) {
  link_geometry geom;
  bool in_section = false;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s != "[geometry]") throw parse_error(origin, line, "expected [geometry], got " + s);
      if (in_section) throw parse_error(origin, line, "repeated [geometry] section");
      in_section = true;
      continue;
    }
    if (!in_section) throw parse_error(origin, line, "content before [geometry] section");

    const auto eq = s.find('=');
    if (eq == std::string::npos) throw parse_error(origin, line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const double value = parse_number(trim(s.substr(eq + 1)), origin, line);
    if (!set_geometry_field(geom, key, value)) {
      throw parse_error(origin, line, "unknown geometry field '" + key + "'");
    }
  }
  if (!in_section) throw parse_error(origin, 1, "missing [geometry] section");
  try {
    validate_geometry(geom);
  } catch (const std::invalid_argument& e) {
    throw parse_error(origin, line, e.what());
  }
  return geom;
}

link_geometry load_geometry_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open geometry file '" + path + "'");
  return load_geometry(in, path);
}

double misalignment_scale(double theta_deg, double floor) {
  if (theta_deg < 0.0 || theta_deg > 90.0) {
    throw std::invalid_argument("misalignment angle must be in [0, 90] degrees, got " +
                                std::to_string(theta_deg));
  }
  if (!(floor > 0.0) || floor >= 1.0) {
    throw std::invalid_argument("misalignment floor must be in (0, 1)");
  }
  const double c = std::cos(theta_deg * pi / 180.0);
  return floor + (1.0 - floor) * c * c;
}

void validate_geometry(const link_geometry& g) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) {
      throw std::invalid_argument(std::string(name) + " must be > 0, got " + std::to_string(v));
    }
  };
  positive(g.d_h, "d_h");
  positive(g.d_tx, "d_tx");
  positive(g.t_tx, "t_tx");
  positive(g.h_tx, "h_tx");
  positive(g.r_rx, "r_rx");
  positive(g.h_rx, "h_rx");
  positive(g.h_implant, "h_implant");
  positive(g.r_tissue, "r_tissue");
  if (g.d_v < 0.0) throw std::invalid_argument("d_v must be >= 0");
  if (g.theta_deg < 0.0 || g.theta_deg > 90.0) {
    throw std::invalid_argument("theta_deg must be in [0, 90]");
  }
  if (g.d_h + 2.0 * g.r_rx > 2.0 * g.r_tissue) {
    throw std::invalid_argument("implant does not fit: d_h + 2*r_rx exceeds the cylinder diameter");
  }
}

void validate_against_stack(const link_geometry& g, const layer_stack& stack) {
  const double total = stack.total_thickness();
  if (std::abs(total - g.r_tissue) > 1e-9 * g.r_tissue) {
    throw std::invalid_argument("stack thickness " + std::to_string(total) +
                                " m does not equal the tissue radius " +
                                std::to_string(g.r_tissue) + " m");
  }
}

namespace {

using dielectric::cole_cole_model;
using dielectric::material_db;
using network::complex;

// depth measured from the surface, mirrored through the axis for the far side
double folded_depth(double depth, double r_tissue) {
  double d = depth;
  if (d > r_tissue) d = 2.0 * r_tissue - d;
  return std::clamp(d, 0.0, r_tissue);
}

const cole_cole_model& material_at_depth(const layer_stack& stack, const material_db& db,
                                         double depth, double r_tissue) {
  const double d = folded_depth(depth, r_tissue);
  double cum = 0.0;
  for (const auto& l : stack.layers) {
    cum += l.thickness;
    if (d < cum) return db.at(l.material);
  }
  return db.at(stack.layers.back().material);
}

struct slab {
  double lo = 0.0;
  double hi = 0.0;
  const cole_cole_model* mat = nullptr;
};

// splits the depth interval [a, b] at every layer boundary (and its mirror
// image) so each slab is a single material
std::vector<slab> slabs_over(double a, double b, const layer_stack& stack,
                             const material_db& db, double r_tissue) {
  std::vector<double> pts{a, b};
  double cum = 0.0;
  for (const auto& l : stack.layers) {
    cum += l.thickness;
    for (double p : {cum, 2.0 * r_tissue - cum}) {
      if (p > a && p < b) pts.push_back(p);
    }
  }
  std::sort(pts.begin(), pts.end());
  std::vector<slab> out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] - pts[i] <= 0.0) continue;
    slab s;
    s.lo = pts[i];
    s.hi = pts[i + 1];
    s.mat = &material_at_depth(stack, db, 0.5 * (s.lo + s.hi), r_tissue);
    out.push_back(s);
  }
  return out;
}

// admittivity sigma + j w eps0 eps', i.e. j w eps0 eps_r, in S/m
complex admittivity(const cole_cole_model& m, double f_hz) {
  const double w = 2.0 * pi * f_hz;
  return complex(0.0, 1.0) * w * eps0 * dielectric::complex_permittivity(m, f_hz);
}

}  // namespace

network::two_port_abcd channel_two_port(const link_geometry& geom, const layer_stack& stack,
                                        const dielectric::material_db& db, double f_hz,
                                        const model_constants& k) {
  validate_geometry(geom);
  validate_against_stack(geom, stack);
  if (!(f_hz > 0.0)) throw std::invalid_argument("frequency must be positive");
  for (const auto& l : stack.layers) db.at(l.material);  // fail early with a clear message

  // ring contact resistance through the outermost layer
  const auto& outer = db.at(stack.layers.front().material);
  const double sigma_outer = dielectric::conductivity(outer, f_hz);
  const double ring_area = geom.t_tx * 2.0 * pi * (geom.r_tissue + 0.5 * geom.h_tx);
  const double a_ring = std::sqrt(ring_area / pi);
  const complex z_contact_tx(2.0 / (4.0 * sigma_outer * a_ring), 0.0);

  // shell/core split depth; the core keeps at least the disc radius
  const double d_shell = std::min(geom.d_h, geom.r_tissue - geom.r_rx);

  // ring-to-ring leakage through the shell above the implant
  complex y_leak(0.0, 0.0);
  for (const auto& s : slabs_over(0.0, d_shell, stack, db, geom.r_tissue)) {
    const double r_out = geom.r_tissue - s.lo;
    const double r_in = geom.r_tissue - s.hi;
    const double area = pi * (r_out * r_out - r_in * r_in);
    y_leak += area * admittivity(*s.mat, f_hz) / (k.leak_length_scale * geom.d_tx);
  }

  // radial descent below each ring, down to the implant depth
  complex z_radial(0.0, 0.0);
  for (const auto& s : slabs_over(0.0, geom.d_h, stack, db, geom.r_tissue)) {
    const double t_mid = 0.5 * (s.lo + s.hi);
    const double r_eff = std::max(geom.r_tissue - t_mid, geom.r_rx);
    const double sheet = geom.t_tx + k.radial_fan * t_mid;
    const double area = 2.0 * pi * r_eff * sheet;
    z_radial += (s.hi - s.lo) / (area * admittivity(*s.mat, f_hz));
  }
  z_radial *= 2.0;  // both rings

  // pickup column at the implant: axial feed in series, span as the mutual
  const auto& local = material_at_depth(stack, db, geom.d_h, geom.r_tissue);
  const double r_pick = k.pickup_radius_scale * geom.r_rx;
  const complex y_col_per_len = pi * r_pick * r_pick * admittivity(local, f_hz);  // S*m
  const double h_span = std::min(geom.h_implant, geom.d_tx);
  const double l_axial = geom.d_tx - h_span;
  const complex z_axial = l_axial / y_col_per_len;
  const complex y_span = y_col_per_len / h_span;

  // RX disc spreading resistance in the layer the implant sits in
  const double sigma_local = dielectric::conductivity(local, f_hz);
  const complex z_contact_rx(2.0 / (4.0 * sigma_local * geom.r_rx), 0.0);

  return network::cascade({
      network::series_element(z_contact_tx, f_hz),
      network::shunt_element(y_leak, f_hz),
      network::series_element(z_radial + z_axial, f_hz),
      network::shunt_element(y_span, f_hz),
      network::series_element(z_contact_rx, f_hz),
  });
}

double coupling_power_factor(const link_geometry& geom, const model_constants& k) {
  validate_geometry(geom);
  const double wv = k.dv_field_width * geom.r_tissue;
  const double g = misalignment_scale(geom.theta_deg, k.misalignment_floor) /
                   (1.0 + (geom.d_v / wv) * (geom.d_v / wv));
  return g * g;
}

sar_estimate icnirp_check(double peak_avg_sar) {
  if (peak_avg_sar < 0.0) throw std::invalid_argument("SAR must be >= 0");
  sar_estimate e;
  e.peak_avg_sar = peak_avg_sar;
  e.compliant = peak_avg_sar <= e.limb_limit;
  return e;
}

sar_estimate sar_coarse(double i_rms, const link_geometry& geom, const layer_stack& stack,
                        const dielectric::material_db& db, double f_hz, double mass_density) {
  validate_geometry(geom);
  validate_against_stack(geom, stack);
  if (i_rms < 0.0) throw std::invalid_argument("drive current must be >= 0");
  if (!(mass_density > 0.0)) throw std::invalid_argument("mass density must be > 0");

  const double d_shell = std::min(geom.d_h, geom.r_tissue - geom.r_rx);
  const double r_core = geom.r_tissue - d_shell;
  const double area = pi * r_core * r_core;
  const double j = i_rms / area;

  const auto& local = material_at_depth(stack, db, geom.d_h, geom.r_tissue);
  const double sigma = dielectric::conductivity(local, f_hz);
  return icnirp_check(j * j / (sigma * mass_density));
}

}  // namespace bcplink::channel
