#pragma once

#include <string>
#include <vector>

#include "bcplink/channel.hpp"
#include "bcplink/matching.hpp"

// one-variable-at-a-time design-space exploration: sweep a geometry knob,
// compute matched link efficiency over a frequency grid per value, find the
// resonance, and emit CSV/SVG
namespace bcplink::explore {

enum class sweep_variable { d_h, d_v, d_tx, t_tx, h_tx, r_rx, h_implant, theta };
enum class grid_spacing { linear, log };
enum class match_mode { matched_per_point, fixed_refs };

struct frequency_grid {
  double f_min = 0.1e9;
  double f_max = 3.0e9;
  int n_points = 291;  // 10 MHz steps over the default span
  grid_spacing spacing = grid_spacing::linear;
};

// the grid realized as a frequency list; n_points >= 2 required
std::vector<double> grid_frequencies(const frequency_grid& grid);

struct sweep_spec {
  sweep_variable variable = sweep_variable::d_h;
  std::vector<double> values;  // SI units; theta in degrees; sorted ascending
  channel::link_geometry base;
  std::string material_file;
  std::string stack_file;
  frequency_grid grid;
  matching::load_model load;
  match_mode mode = match_mode::matched_per_point;
};

struct sweep_series {
  double swept_value = 0.0;
  std::vector<matching::pte_point> curve;  // one point per grid frequency
  double f_peak = 0.0;                     // lies on the grid
  double pte_peak = 0.0;                   // max over the curve
};

struct sweep_result {
  sweep_spec spec;            // echo of what produced the data
  std::string material_hash;  // fnv-1a 64 of the material file bytes, hex
  std::vector<sweep_series> series;  // one per spec value, in spec order
};

// evaluates every (value, frequency) point. matched_per_point co-designs
// matching networks at each frequency; fixed_refs reports the bare channel
// against (source_ref, load) references. either way the reported efficiency
// includes the geometric coupling factor for the swept alignment. swept values
// run concurrently when parallel is set; results merge in spec order and are
// identical to a serial run. failures carry the (value, frequency) point.
sweep_result run_sweep(const sweep_spec& spec, bool parallel = true);

// global maximum of a curve; ties break toward the lowest frequency
matching::pte_point find_resonance(const std::vector<matching::pte_point>& curve);

// columns swept_value,f_hz,pte_pct after '#'-prefixed provenance lines;
// byte-identical for identical spec + material files
std::string emit_csv(const sweep_result& result);

// self-contained multi-series line chart (f in GHz vs pte in %), deterministic
std::string emit_svg(const sweep_result& result);

// line-oriented '[sweep]' config: variable, values, materials, stack, load,
// mode, grid, plus geometry field overrides. relative paths resolve against
// the spec file's directory.
sweep_spec parse_sweep_spec(const std::string& text, const std::string& origin = "<memory>");
sweep_spec load_sweep_spec_file(const std::string& path);

}  // namespace bcplink::explore
