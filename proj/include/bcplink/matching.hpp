#pragma once

#include <string>
#include <vector>

#include "bcplink/network.hpp"

// Single-frequency L-section matching for the tissue link.  The flow:
// a channel two-port is reduced to its simultaneous-conjugate terminations,
// one two-element section per side realizes those terminations, and a Newton
// polish then co-tunes all four element values until both reflection
// coefficients of the assembled link vanish against the actual source and
// load references.  Reflections use the traveling-wave convention of
// network.hpp throughout.

namespace bcplink::matching {

using network::complex;

// series RC load; c == 0 means purely resistive
struct load_model {
  double r = 50.0;  // ohm
  double c = 0.0;   // farad
};

// r - j/(2 pi f c)
complex load_impedance(const load_model& load, double f_hz);

enum class element_kind { inductor, capacitor };
enum class section_side { tx, rx };

struct imn_element {
  element_kind kind = element_kind::inductor;
  double value = 0.0;  // henry or farad
};

// Two-element section between a "from" port and a "to" port.  The topology
// names the element order seen from the from port: series_then_shunt puts
// the series element at the from port and the shunt element across the to
// port.  imn_abcd orients port 1 at the from port.
enum class section_topology { series_then_shunt, shunt_then_series };

struct l_section {
  section_side side = section_side::tx;
  section_topology topology = section_topology::series_then_shunt;
  imn_element series_elem;
  imn_element shunt_elem;
  double f0 = 0.0;  // Hz design frequency
};

struct match_solution {
  l_section tx_imn;
  l_section rx_imn;
  complex zs_opt;    // source-side simultaneous-match termination
  complex zl_opt;    // load-side simultaneous-match termination
  double matched_pte = 0.0;       // percent, full cascade
  double residual_s11_db = 0.0;
  double residual_s22_db = 0.0;
  bool marginal = false;          // boundary K = 1 solution, no sections
  std::string deviation_note;     // set when element kinds deviate from the
                                  // preferred per-side pattern
};

struct conjugate_match {
  complex zs;
  complex zl;
  bool marginal = false;  // K at the unit boundary: |reflection| = 1 edge
};

// classical bilateral simultaneous-match terminations from the channel
// S-matrix; throws no_match_error for K < 1 and unilateral_error when
// |s12 s21| = 0
conjugate_match simultaneous_conjugate_match(const network::s_matrix& s);

// All L-sections that transform a termination z_to, attached at the to
// port, into z_from* seen at the from port.  Ordered by achieved
// |reflection| then by node Q (lower stored energy first).  Throws
// no_match_error when the ports are already conjugate (zero-length section)
// and invalid_argument for non-positive real parts.
std::vector<l_section> synthesize_l_section_all(complex z_from, complex z_to, double f0_hz);

// first entry of synthesize_l_section_all
l_section synthesize_l_section(complex z_from, complex z_to, double f0_hz);

// ABCD of the section at frequency f, port 1 at the from port; lossless by
// construction (a, d real; b, c imaginary)
network::two_port_abcd imn_abcd(const l_section& sec, double f_hz);

// assembles tx_imn . channel . rx_imn against the given references and
// reports residual reflections and PTE; throws invalid_argument if the
// design frequencies disagree with the channel frequency
match_solution verify_match(const l_section& tx_imn, const network::two_port_abcd& channel,
                            const l_section& rx_imn, const network::port_impedances& refs);

// Full per-frequency pipeline: conjugate seed, per-side section selection
// (TX prefers series inductor + shunt capacitor, RX prefers shunt inductor +
// series capacitor, deviations noted), then a Newton polish of all four
// element values driving s11 and s22 to zero against (src_ref, Z_load).
// K < 1 propagates no_match_error; the K = 1 boundary returns a marginal
// solution carrying the conjugate terminations and the matched-gain limit.
match_solution co_determine(const network::two_port_abcd& channel, const load_model& load,
                            double f0_hz, double src_ref_ohm = 50.0, bool polish = true);

struct pte_point {
  double f_hz = 0.0;
  double pte_pct = 0.0;
};

// matched PTE across a channel family sampled on a frequency grid; channels
// must be sorted by frequency
std::vector<pte_point> matched_pte_sweep(const std::vector<network::two_port_abcd>& channels,
                                         const load_model& load, double src_ref_ohm = 50.0);

}  // namespace bcplink::matching
