#include "bcplink/matching.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bcplink/constants.hpp"
#include "bcplink/errors.hpp"

namespace bcplink::matching {

namespace {

constexpr double rel_tol = 1e-9;

bool close(double a, double b, double tol = rel_tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

imn_element series_from_reactance(double x, double w) {
  if (x > 0.0) return {element_kind::inductor, x / w};
  return {element_kind::capacitor, -1.0 / (w * x)};
}

imn_element shunt_from_susceptance(double b, double w) {
  if (b > 0.0) return {element_kind::capacitor, b / w};
  return {element_kind::inductor, -1.0 / (w * b)};
}

double reactance_of(const imn_element& e, double w) {
  if (e.kind == element_kind::inductor) return w * e.value;
  return -1.0 / (w * e.value);
}

double susceptance_of(const imn_element& e, double w) {
  if (e.kind == element_kind::capacitor) return w * e.value;
  return -1.0 / (w * e.value);
}

// reflection of z against a source impedance zs, zero when z = conj(zs)
complex generalized_gamma(complex z, complex zs) {
  return (z - std::conj(zs)) / (z + zs);
}

struct candidate {
  l_section sec;
  double gamma_mag = 0.0;
  double node_q = 0.0;
};

void solve4(std::array<std::array<double, 4>, 4>& a, std::array<double, 4>& b) {
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) < 1e-300) throw std::runtime_error("singular polish jacobian");
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (int r = col + 1; r < 4; ++r) {
      const double m = a[r][col] / a[col][col];
      for (int c2 = col; c2 < 4; ++c2) a[r][c2] -= m * a[col][c2];
      b[r] -= m * b[col];
    }
  }
  for (int r = 3; r >= 0; --r) {
    for (int c2 = r + 1; c2 < 4; ++c2) b[r] -= a[r][c2] * b[c2];
    b[r] /= a[r][r];
  }
}

}  // namespace

complex load_impedance(const load_model& load, double f_hz) {
  if (!(f_hz > 0.0)) throw std::invalid_argument("frequency must be positive");
  if (!(load.r > 0.0)) throw std::invalid_argument("load resistance must be positive");
  if (load.c < 0.0) throw std::invalid_argument("load capacitance must be >= 0");
  if (load.c == 0.0) return complex(load.r, 0.0);
  return complex(load.r, -1.0 / (2.0 * pi * f_hz * load.c));
}

conjugate_match simultaneous_conjugate_match(const network::s_matrix& s) {
  if (std::abs(s.refs.zp1.imag()) > rel_tol * std::abs(s.refs.zp1) ||
      std::abs(s.refs.zp2.imag()) > rel_tol * std::abs(s.refs.zp2)) {
    throw std::invalid_argument("simultaneous match requires real port references");
  }
  const complex delta = s.s11 * s.s22 - s.s12 * s.s21;
  const double prod = std::abs(s.s12 * s.s21);
  if (prod == 0.0) throw unilateral_error("zero s12*s21: no bilateral match exists");
  const double k =
      (1.0 - std::norm(s.s11) - std::norm(s.s22) + std::norm(delta)) / (2.0 * prod);
  if (k < 1.0 - rel_tol) {
    throw no_match_error("stability factor k = " + std::to_string(k) +
                         " < 1: no simultaneous conjugate match");
  }

  const double b1 = 1.0 + std::norm(s.s11) - std::norm(s.s22) - std::norm(delta);
  const double b2 = 1.0 + std::norm(s.s22) - std::norm(s.s11) - std::norm(delta);
  const complex c1 = s.s11 - delta * std::conj(s.s22);
  const complex c2 = s.s22 - delta * std::conj(s.s11);

  conjugate_match out;
  out.marginal = k <= 1.0 + rel_tol;

  auto gamma_of = [&](double b, complex c) {
    // near-degenerate center (through-like network): any conjugate pair works
    if (std::abs(c) < 1e-7 && std::abs(b) < 1e-6) return complex(0.0, 0.0);
    const double disc = std::max(b * b - 4.0 * std::norm(c), 0.0);
    const double sgn = b >= 0.0 ? 1.0 : -1.0;
    return complex((b - sgn * std::sqrt(disc)) / 2.0, 0.0) / c;
  };
  const complex gs = gamma_of(b1, c1);
  const complex gl = gamma_of(b2, c2);
  out.zs = s.refs.zp1 * (1.0 + gs) / (1.0 - gs);
  out.zl = s.refs.zp2 * (1.0 + gl) / (1.0 - gl);
  return out;
}

std::vector<l_section> synthesize_l_section_all(complex z_from, complex z_to, double f0_hz) {
  if (!(f0_hz > 0.0)) throw std::invalid_argument("frequency must be positive");
  if (!(z_from.real() > 0.0) || !(z_to.real() > 0.0)) {
    throw std::invalid_argument("port impedances need positive real parts");
  }
  const complex target = std::conj(z_from);
  if (std::abs(z_to - target) <= rel_tol * std::max({1.0, std::abs(z_to), std::abs(target)})) {
    throw no_match_error("ports already conjugate: a zero-length section suffices");
  }
  const double w = 2.0 * pi * f0_hz;
  const double tr = target.real();
  const double tx = target.imag();
  std::vector<candidate> cands;

  auto push = [&](section_topology topo, double series_x, double shunt_b, double node_q) {
    const double xs = std::max({1.0, std::abs(z_to), std::abs(target)});
    const double bs = std::max(1.0, 1.0 / std::min(std::abs(z_to), std::abs(target)));
    if (std::abs(series_x) < 1e-9 * xs || std::abs(shunt_b) < 1e-9 * bs) return;
    candidate c;
    c.sec.topology = topo;
    c.sec.series_elem = series_from_reactance(series_x, w);
    c.sec.shunt_elem = shunt_from_susceptance(shunt_b, w);
    c.sec.f0 = f0_hz;
    c.node_q = node_q;
    const auto t = imn_abcd(c.sec, f0_hz);
    c.gamma_mag = std::abs(generalized_gamma(network::input_impedance(t, z_to), z_from));
    cands.push_back(c);
  };

  // shunt across the to port, series toward the from port
  {
    const complex y = 1.0 / z_to;
    const double g = y.real();
    const double b = y.imag();
    const double disc = g / tr - g * g;
    if (disc >= 0.0) {
      for (double sgn : {1.0, -1.0}) {
        const double bv = -b + sgn * std::sqrt(disc);
        const complex z1 = 1.0 / complex(g, b + bv);
        push(section_topology::series_then_shunt, tx - z1.imag(), bv, std::abs(b + bv) / g);
      }
    }
  }
  // series at the to port, shunt across the from port
  {
    const complex wadm = 1.0 / target;
    const double gw = wadm.real();
    const double rt = z_to.real();
    const double xt = z_to.imag();
    const double disc = rt / gw - rt * rt;
    if (disc >= 0.0) {
      for (double sgn : {1.0, -1.0}) {
        const double xv = -xt + sgn * std::sqrt(disc);
        const complex z1 = z_to + complex(0.0, xv);
        push(section_topology::shunt_then_series, xv, wadm.imag() - (1.0 / z1).imag(),
             std::abs(xt + xv) / rt);
      }
    }
  }
  if (cands.empty()) {
    throw no_match_error("no two-element section transforms the given impedances");
  }
  std::sort(cands.begin(), cands.end(), [](const candidate& a, const candidate& b) {
    const double ga = std::round(a.gamma_mag * 1e9);
    const double gb = std::round(b.gamma_mag * 1e9);
    if (ga != gb) return ga < gb;
    if (a.node_q != b.node_q) return a.node_q < b.node_q;
    return static_cast<int>(a.sec.topology) < static_cast<int>(b.sec.topology);
  });
  std::vector<l_section> out;
  out.reserve(cands.size());
  for (const auto& c : cands) out.push_back(c.sec);
  return out;
}

l_section synthesize_l_section(complex z_from, complex z_to, double f0_hz) {
  return synthesize_l_section_all(z_from, z_to, f0_hz).front();
}

network::two_port_abcd imn_abcd(const l_section& sec, double f_hz) {
  if (!(f_hz > 0.0)) throw std::invalid_argument("frequency must be positive");
  if (!(sec.series_elem.value > 0.0) || !(sec.shunt_elem.value > 0.0)) {
    throw std::invalid_argument("section element values must be positive");
  }
  const double w = 2.0 * pi * f_hz;
  const auto series = network::series_element(complex(0.0, reactance_of(sec.series_elem, w)), f_hz);
  const auto shunt = network::shunt_element(complex(0.0, susceptance_of(sec.shunt_elem, w)), f_hz);
  if (sec.topology == section_topology::series_then_shunt) {
    return network::cascade({series, shunt});
  }
  return network::cascade({shunt, series});
}

match_solution verify_match(const l_section& tx_imn, const network::two_port_abcd& channel,
                            const l_section& rx_imn, const network::port_impedances& refs) {
  if (!close(tx_imn.f0, channel.f_hz) || !close(rx_imn.f0, channel.f_hz)) {
    throw std::invalid_argument("section design frequencies disagree with the channel");
  }
  const auto link = network::cascade(
      {imn_abcd(tx_imn, channel.f_hz), channel, imn_abcd(rx_imn, channel.f_hz)});
  const auto s = network::abcd_to_s(link, refs);
  match_solution out;
  out.tx_imn = tx_imn;
  out.rx_imn = rx_imn;
  out.zs_opt = refs.zp1;
  out.zl_opt = refs.zp2;
  out.matched_pte = network::pte_percent(s);
  const auto to_db = [](double mag) {
    return mag == 0.0 ? -std::numeric_limits<double>::infinity() : 20.0 * std::log10(mag);
  };
  out.residual_s11_db = to_db(std::abs(s.s11));
  out.residual_s22_db = to_db(std::abs(s.s22));
  return out;
}

namespace {

// first candidate realizing the preferred element kinds, else the best one
l_section pick_section(const std::vector<l_section>& cands, section_side side,
                       element_kind want_series, element_kind want_shunt,
                       std::string& note) {
  for (const auto& c : cands) {
    if (c.series_elem.kind == want_series && c.shunt_elem.kind == want_shunt) {
      auto s = c;
      s.side = side;
      return s;
    }
  }
  auto s = cands.front();
  s.side = side;
  const char* tag = side == section_side::tx ? "tx" : "rx";
  const auto kind_name = [](element_kind k) {
    return k == element_kind::inductor ? "inductor" : "capacitor";
  };
  if (!note.empty()) note += "; ";
  note += std::string(tag) + " side realized as series " + kind_name(s.series_elem.kind) +
          " + shunt " + kind_name(s.shunt_elem.kind) + " instead of the preferred kinds";
  return s;
}

double max_residual(const network::two_port_abcd& channel, const l_section& tx,
                    const l_section& rx, const network::port_impedances& refs) {
  const auto link =
      network::cascade({imn_abcd(tx, channel.f_hz), channel, imn_abcd(rx, channel.f_hz)});
  const auto s = network::abcd_to_s(link, refs);
  return std::max(std::abs(s.s11), std::abs(s.s22));
}

// Newton in log element values driving [Re s11, Im s11, Re s22, Im s22] to
// zero; returns the best iterate seen
void polish_sections(const network::two_port_abcd& channel, l_section& tx, l_section& rx,
                     const network::port_impedances& refs) {
  std::array<double*, 4> vals = {&tx.series_elem.value, &tx.shunt_elem.value,
                                 &rx.series_elem.value, &rx.shunt_elem.value};
  std::array<double, 4> u{};
  for (int i = 0; i < 4; ++i) u[i] = std::log(*vals[i]);

  auto eval = [&](const std::array<double, 4>& uu) {
    for (int i = 0; i < 4; ++i) *vals[i] = std::exp(uu[i]);
    const auto link =
        network::cascade({imn_abcd(tx, channel.f_hz), channel, imn_abcd(rx, channel.f_hz)});
    const auto s = network::abcd_to_s(link, refs);
    return std::array<double, 4>{s.s11.real(), s.s11.imag(), s.s22.real(), s.s22.imag()};
  };
  auto score = [](const std::array<double, 4>& f) {
    return std::max(std::hypot(f[0], f[1]), std::hypot(f[2], f[3]));
  };

  std::array<double, 4> best_u = u;
  auto f = eval(u);
  double best = score(f);
  const double h = 1e-6;
  int stale = 0;
  for (int iter = 0; iter < 40 && best > 1e-12 && stale < 8; ++iter) {
    std::array<std::array<double, 4>, 4> jac{};
    for (int j = 0; j < 4; ++j) {
      auto up = u, dn = u;
      up[j] += h;
      dn[j] -= h;
      const auto fp = eval(up);
      const auto fm = eval(dn);
      for (int i = 0; i < 4; ++i) jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
    }
    std::array<double, 4> rhs = {-f[0], -f[1], -f[2], -f[3]};
    try {
      solve4(jac, rhs);
    } catch (const std::runtime_error&) {
      break;
    }
    // damped step with simple backtracking
    double lambda = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 6; ++bt, lambda *= 0.5) {
      auto trial = u;
      for (int i = 0; i < 4; ++i) trial[i] = u[i] + lambda * rhs[i];
      const auto ft = eval(trial);
      const double sc = score(ft);
      if (std::isfinite(sc) && sc < score(f)) {
        u = trial;
        f = ft;
        improved = true;
        break;
      }
    }
    if (!improved) break;
    if (score(f) < best) {
      best = score(f);
      best_u = u;
      stale = 0;
    } else {
      ++stale;
    }
  }
  for (int i = 0; i < 4; ++i) *vals[i] = std::exp(best_u[i]);
}

}  // namespace

match_solution co_determine(const network::two_port_abcd& channel, const load_model& load,
                            double f0_hz, double src_ref_ohm, bool polish) {
  if (!(src_ref_ohm > 0.0)) throw std::invalid_argument("source reference must be positive");
  if (!close(f0_hz, channel.f_hz)) {
    throw std::invalid_argument("channel was built at a different frequency");
  }
  const complex z_load = load_impedance(load, f0_hz);
  const network::port_impedances real_refs{complex(src_ref_ohm, 0.0), complex(src_ref_ohm, 0.0)};
  const auto s_ch = network::abcd_to_s(channel, real_refs);
  const auto cm = simultaneous_conjugate_match(s_ch);

  if (cm.marginal) {
    match_solution out;
    out.zs_opt = cm.zs;
    out.zl_opt = cm.zl;
    out.marginal = true;
    out.matched_pte = 100.0;  // matched-gain limit at the k = 1 boundary
    out.residual_s11_db = 0.0;
    out.residual_s22_db = 0.0;
    return out;
  }

  const complex z_in = network::input_impedance(channel, cm.zl);
  const complex z_out = network::output_impedance(channel, cm.zs);

  std::string note;
  auto tx = pick_section(synthesize_l_section_all(complex(src_ref_ohm, 0.0), z_in, f0_hz),
                         section_side::tx, element_kind::inductor, element_kind::capacitor, note);
  auto rx = pick_section(synthesize_l_section_all(z_out, z_load, f0_hz), section_side::rx,
                         element_kind::capacitor, element_kind::inductor, note);

  const network::port_impedances link_refs{complex(src_ref_ohm, 0.0), z_load};
  if (polish) {
    auto tx_try = tx;
    auto rx_try = rx;
    polish_sections(channel, tx_try, rx_try, link_refs);
    if (max_residual(channel, tx_try, rx_try, link_refs) <=
        max_residual(channel, tx, rx, link_refs)) {
      tx = tx_try;
      rx = rx_try;
    }
  }
  auto out = verify_match(tx, channel, rx, link_refs);
  out.zs_opt = cm.zs;
  out.zl_opt = cm.zl;
  out.deviation_note = note;
  return out;
}

std::vector<pte_point> matched_pte_sweep(const std::vector<network::two_port_abcd>& channels,
                                         const load_model& load, double src_ref_ohm) {
  if (channels.empty()) throw std::invalid_argument("empty frequency grid");
  std::vector<pte_point> out;
  out.reserve(channels.size());
  double prev = 0.0;
  for (const auto& ch : channels) {
    if (ch.f_hz <= prev) throw std::invalid_argument("channel family must ascend in frequency");
    prev = ch.f_hz;
    const auto sol = co_determine(ch, load, ch.f_hz, src_ref_ohm);
    out.push_back({ch.f_hz, sol.matched_pte});
  }
  return out;
}

}  // namespace bcplink::matching
