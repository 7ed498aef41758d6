#include "bcplink/explore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include "bcplink/dielectric.hpp"
#include "bcplink/errors.hpp"
#include "bcplink/network.hpp"

namespace bcplink::explore {

namespace {

const char* variable_name(sweep_variable v) {
  switch (v) {
    case sweep_variable::d_h: return "d_h";
    case sweep_variable::d_v: return "d_v";
    case sweep_variable::d_tx: return "d_tx";
    case sweep_variable::t_tx: return "t_tx";
    case sweep_variable::h_tx: return "h_tx";
    case sweep_variable::r_rx: return "r_rx";
    case sweep_variable::h_implant: return "h_implant";
    default: return "theta";
  }
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void validate_spec(const sweep_spec& spec) {
  if (spec.values.empty()) throw std::invalid_argument("sweep needs at least one value");
  if (!std::is_sorted(spec.values.begin(), spec.values.end())) {
    throw std::invalid_argument("sweep values must be sorted ascending");
  }
  if (std::adjacent_find(spec.values.begin(), spec.values.end()) != spec.values.end()) {
    throw std::invalid_argument("sweep values must be distinct");
  }
  if (spec.grid.n_points < 2) throw std::invalid_argument("frequency grid needs >= 2 points");
  if (!(spec.grid.f_min > 0.0) || !(spec.grid.f_max > spec.grid.f_min)) {
    throw std::invalid_argument("frequency grid needs 0 < f_min < f_max");
  }
  if (spec.material_file.empty() || spec.stack_file.empty()) {
    throw std::invalid_argument("sweep needs material and stack files");
  }
}

sweep_series evaluate_value(const sweep_spec& spec, double value,
                            const std::vector<double>& freqs,
                            const dielectric::material_db& db,
                            const channel::layer_stack& stack) {
  channel::link_geometry g = spec.base;
  channel::set_geometry_field(g, variable_name(spec.variable), value);
  channel::validate_geometry(g);
  channel::validate_against_stack(g, stack);
  const double factor = channel::coupling_power_factor(g);

  sweep_series out;
  out.swept_value = value;
  out.curve.reserve(freqs.size());
  for (double f : freqs) {
    try {
      const auto ch = channel::channel_two_port(g, stack, db, f);
      double pte = 0.0;
      if (spec.mode == match_mode::matched_per_point) {
        pte = matching::co_determine(ch, spec.load, f).matched_pte;
      } else {
        const network::port_impedances refs{network::complex(50.0, 0.0),
                                            matching::load_impedance(spec.load, f)};
        pte = network::pte_percent(network::abcd_to_s(ch, refs));
      }
      out.curve.push_back({f, pte * factor});
    } catch (const std::exception& e) {
      throw std::runtime_error("sweep point (" + std::string(variable_name(spec.variable)) + "=" +
                               fmt17(value) + ", f=" + fmt17(f) + "): " + e.what());
    }
  }
  const auto peak = find_resonance(out.curve);
  out.f_peak = peak.f_hz;
  out.pte_peak = peak.pte_pct;
  return out;
}

}  // namespace

std::vector<double> grid_frequencies(const frequency_grid& grid) {
  if (grid.n_points < 2) throw std::invalid_argument("frequency grid needs >= 2 points");
  if (!(grid.f_min > 0.0) || !(grid.f_max > grid.f_min)) {
    throw std::invalid_argument("frequency grid needs 0 < f_min < f_max");
  }
  std::vector<double> out;
  out.reserve(grid.n_points);
  const int n = grid.n_points;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    if (grid.spacing == grid_spacing::linear) {
      out.push_back(grid.f_min + t * (grid.f_max - grid.f_min));
    } else {
      out.push_back(grid.f_min * std::pow(grid.f_max / grid.f_min, t));
    }
  }
  out.back() = grid.f_max;  // guard against rounding at the top end
  return out;
}

sweep_result run_sweep(const sweep_spec& spec, bool parallel) {
  validate_spec(spec);
  const std::string material_bytes = read_file(spec.material_file);
  std::istringstream material_in(material_bytes);
  const auto db = dielectric::load_material_db(material_in, spec.material_file);
  const auto stack = channel::load_stack_file(spec.stack_file);
  const auto freqs = grid_frequencies(spec.grid);

  sweep_result out;
  out.spec = spec;
  out.material_hash = fnv1a_hex(material_bytes);
  out.series.resize(spec.values.size());
  if (parallel && spec.values.size() > 1) {
    std::vector<std::future<sweep_series>> jobs;
    jobs.reserve(spec.values.size());
    for (double v : spec.values) {
      jobs.push_back(std::async(std::launch::async, [&, v] {
        return evaluate_value(spec, v, freqs, db, stack);
      }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) out.series[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
      out.series[i] = evaluate_value(spec, spec.values[i], freqs, db, stack);
    }
  }
  return out;
}

matching::pte_point find_resonance(const std::vector<matching::pte_point>& curve) {
  if (curve.size() < 2) throw std::invalid_argument("resonance search needs >= 2 points");
  matching::pte_point best = curve.front();
  for (const auto& p : curve) {
    if (p.pte_pct > best.pte_pct) best = p;  // strict: ties keep the lowest f
  }
  return best;
}

namespace {

std::string provenance_lines(const sweep_result& r) {
  const auto& spec = r.spec;
  std::string out = "# provenance: variable=" + std::string(variable_name(spec.variable));
  out += " values=";
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    out += (i ? "," : "") + fmt17(spec.values[i]);
  }
  const auto& g = spec.base;
  out += " base=d_h:" + fmt17(g.d_h) + ",d_v:" + fmt17(g.d_v) + ",d_tx:" + fmt17(g.d_tx) +
         ",t_tx:" + fmt17(g.t_tx) + ",h_tx:" + fmt17(g.h_tx) + ",r_rx:" + fmt17(g.r_rx) +
         ",h_rx:" + fmt17(g.h_rx) + ",h_implant:" + fmt17(g.h_implant) +
         ",r_tissue:" + fmt17(g.r_tissue) + ",theta:" + fmt17(g.theta_deg);
  out += " grid=" + fmt17(spec.grid.f_min) + "," + fmt17(spec.grid.f_max) + "," +
         std::to_string(spec.grid.n_points) + "," +
         (spec.grid.spacing == grid_spacing::linear ? "linear" : "log");
  out += " load=" + fmt17(spec.load.r) + "," + fmt17(spec.load.c);
  out += std::string(" mode=") +
         (spec.mode == match_mode::matched_per_point ? "matched" : "fixed");
  out += " stack=" + spec.stack_file + " materials=" + spec.material_file;
  out += " materials_fnv1a=" + r.material_hash + "\n";
  for (const auto& s : r.series) {
    out += "# peak: swept_value=" + fmt17(s.swept_value) + " f_peak=" + fmt17(s.f_peak) +
           " pte_peak=" + fmt17(s.pte_peak) + "\n";
  }
  return out;
}

}  // namespace

std::string emit_csv(const sweep_result& result) {
  if (result.series.empty()) throw std::invalid_argument("no series to emit");
  for (const auto& s : result.series) {
    if (s.curve.empty()) throw std::invalid_argument("empty series in result");
  }
  std::string out = provenance_lines(result);
  out += "swept_value,f_hz,pte_pct\n";
  for (const auto& s : result.series) {
    for (const auto& p : s.curve) {
      out += fmt17(s.swept_value) + "," + fmt17(p.f_hz) + "," + fmt17(p.pte_pct) + "\n";
    }
  }
  return out;
}

std::string emit_svg(const sweep_result& result) {
  if (result.series.empty()) throw std::invalid_argument("no series to plot");
  for (const auto& s : result.series) {
    if (s.curve.size() < 2) throw std::invalid_argument("series needs >= 2 points to plot");
  }
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  const double width = 800, height = 500;
  const double ml = 70, mr = 160, mt = 30, mb = 60;  // margins: room for a legend
  const double pw = width - ml - mr, ph = height - mt - mb;

  double f_lo = result.series[0].curve.front().f_hz;
  double f_hi = result.series[0].curve.back().f_hz;
  double pte_hi = 0.0;
  for (const auto& s : result.series) {
    for (const auto& p : s.curve) {
      f_lo = std::min(f_lo, p.f_hz);
      f_hi = std::max(f_hi, p.f_hz);
      pte_hi = std::max(pte_hi, p.pte_pct);
    }
  }
  if (pte_hi <= 0.0) pte_hi = 1.0;
  pte_hi *= 1.05;  // headroom above the tallest curve

  auto xpix = [&](double f) { return ml + (f - f_lo) / (f_hi - f_lo) * pw; };
  auto ypix = [&](double pte) { return mt + ph - pte / pte_hi * ph; };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" "
                    "font-family=\"sans-serif\" font-size=\"13\">\n";
  svg += "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(ml + pw) +
         "\" y2=\"" + num(mt + ph) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(ml) + "\" y2=\"" +
         num(mt + ph) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = f_lo + (f_hi - f_lo) * i / 5.0;
    const double px = xpix(fx);
    svg += "<line x1=\"" + num(px) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(px) +
           "\" y2=\"" + num(mt + ph + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(px) + "\" y=\"" + num(mt + ph + 20) +
           "\" text-anchor=\"middle\">" + num(fx / 1e9) + "</text>\n";
    const double py = ypix(pte_hi * i / 5.0);
    svg += "<line x1=\"" + num(ml - 5) + "\" y1=\"" + num(py) + "\" x2=\"" + num(ml) +
           "\" y2=\"" + num(py) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(ml - 10) + "\" y=\"" + num(py + 4) +
           "\" text-anchor=\"end\">" + num(pte_hi * i / 5.0) + "</text>\n";
  }
  svg += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(height - 15) +
         "\" text-anchor=\"middle\">f (GHz)</text>\n";
  svg += "<text x=\"18\" y=\"" + num(mt + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         num(mt + ph / 2) + ")\">PTE (%)</text>\n";

  const char* vname = variable_name(result.spec.variable);
  for (std::size_t i = 0; i < result.series.size(); ++i) {
    const auto& s = result.series[i];
    const char* color = palette[i % (sizeof(palette) / sizeof(palette[0]))];
    std::string pts;
    for (const auto& p : s.curve) {
      pts += num(xpix(p.f_hz)) + "," + num(ypix(p.pte_pct)) + " ";
    }
    pts.pop_back();
    svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\"/>\n";
    const double ly = mt + 15 + 18.0 * i;
    svg += "<line x1=\"" + num(ml + pw + 10) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
           num(ml + pw + 30) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + num(ml + pw + 35) + "\" y=\"" + num(ly) + "\">" + vname + "=" +
           fmt17(s.swept_value) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& tok, const std::string& origin, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw parse_error(origin, line, "expected a number, got '" + tok + "'");
  }
}

std::vector<double> parse_number_list(const std::string& text, const std::string& origin,
                                      int line) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string tok = trim(text.substr(start, comma - start));
    if (tok.empty()) throw parse_error(origin, line, "empty entry in number list");
    out.push_back(parse_number(tok, origin, line));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string resolve_near(const std::string& path, const std::string& origin) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.is_absolute() || origin == "<memory>") return path;
  return (fs::path(origin).parent_path() / p).string();
}

}  // namespace

sweep_spec parse_sweep_spec(const std::string& text, const std::string& origin) {
  sweep_spec spec;
  bool in_section = false, have_variable = false, have_values = false;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line != "[sweep]") throw parse_error(origin, lineno, "expected [sweep], got " + line);
      if (in_section) throw parse_error(origin, lineno, "duplicate [sweep] section");
      in_section = true;
      continue;
    }
    if (!in_section) throw parse_error(origin, lineno, "keys must follow a [sweep] header");
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw parse_error(origin, lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (val.empty()) throw parse_error(origin, lineno, "empty value for '" + key + "'");

    if (key == "variable") {
      have_variable = true;
      if (val == "d_h") spec.variable = sweep_variable::d_h;
      else if (val == "d_v") spec.variable = sweep_variable::d_v;
      else if (val == "d_tx") spec.variable = sweep_variable::d_tx;
      else if (val == "t_tx") spec.variable = sweep_variable::t_tx;
      else if (val == "h_tx") spec.variable = sweep_variable::h_tx;
      else if (val == "r_rx") spec.variable = sweep_variable::r_rx;
      else if (val == "h_implant") spec.variable = sweep_variable::h_implant;
      else if (val == "theta") spec.variable = sweep_variable::theta;
      else throw parse_error(origin, lineno, "unknown sweep variable '" + val + "'");
    } else if (key == "values") {
      have_values = true;
      spec.values = parse_number_list(val, origin, lineno);
    } else if (key == "materials") {
      spec.material_file = resolve_near(val, origin);
    } else if (key == "stack") {
      spec.stack_file = resolve_near(val, origin);
    } else if (key == "load") {
      const auto nums = parse_number_list(val, origin, lineno);
      if (nums.empty() || nums.size() > 2) {
        throw parse_error(origin, lineno, "load takes R or R, C");
      }
      spec.load.r = nums[0];
      spec.load.c = nums.size() == 2 ? nums[1] : 0.0;
    } else if (key == "mode") {
      if (val == "matched" || val == "matched-per-point") {
        spec.mode = match_mode::matched_per_point;
      } else if (val == "fixed" || val == "fixed-refs") {
        spec.mode = match_mode::fixed_refs;
      } else {
        throw parse_error(origin, lineno, "mode is matched or fixed, got '" + val + "'");
      }
    } else if (key == "grid") {
      const auto comma = val.find_last_of(',');
      const std::string spacing = comma == std::string::npos ? "" : trim(val.substr(comma + 1));
      std::string head = val;
      grid_spacing sp = grid_spacing::linear;
      if (spacing == "linear" || spacing == "log") {
        sp = spacing == "log" ? grid_spacing::log : grid_spacing::linear;
        head = val.substr(0, comma);
      }
      const auto nums = parse_number_list(head, origin, lineno);
      if (nums.size() != 3) {
        throw parse_error(origin, lineno, "grid takes f_min, f_max, n_points[, linear|log]");
      }
      spec.grid.f_min = nums[0];
      spec.grid.f_max = nums[1];
      spec.grid.n_points = static_cast<int>(nums[2]);
      spec.grid.spacing = sp;
      if (nums[2] != spec.grid.n_points || spec.grid.n_points < 2) {
        throw parse_error(origin, lineno, "n_points must be an integer >= 2");
      }
    } else if (channel::set_geometry_field(spec.base, key, parse_number(val, origin, lineno))) {
      // geometry override handled
    } else {
      throw parse_error(origin, lineno, "unknown key '" + key + "'");
    }
  }
  if (!in_section) throw parse_error(origin, lineno, "missing [sweep] section");
  if (!have_variable) throw parse_error(origin, lineno, "missing 'variable'");
  if (!have_values) throw parse_error(origin, lineno, "missing 'values'");
  if (spec.material_file.empty()) throw parse_error(origin, lineno, "missing 'materials'");
  if (spec.stack_file.empty()) throw parse_error(origin, lineno, "missing 'stack'");
  return spec;
}

sweep_spec load_sweep_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sweep_spec(buf.str(), path);
}

}  // namespace bcplink::explore
