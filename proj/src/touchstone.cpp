#include "bcplink/touchstone.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bcplink/constants.hpp"
#include "bcplink/errors.hpp"

namespace bcplink::touchstone {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double unit_scale(freq_unit u) {
  switch (u) {
    case freq_unit::hz: return 1.0;
    case freq_unit::khz: return 1e3;
    case freq_unit::mhz: return 1e6;
    default: return 1e9;
  }
}

complex pair_to_complex(double a, double b, data_format fmt) {
  switch (fmt) {
    case data_format::ri: return {a, b};
    case data_format::ma: return std::polar(a, b * pi / 180.0);
    default: return std::polar(std::pow(10.0, a / 20.0), b * pi / 180.0);
  }
}

void complex_to_pair(complex v, data_format fmt, double& a, double& b) {
  switch (fmt) {
    case data_format::ri:
      a = v.real();
      b = v.imag();
      return;
    case data_format::ma:
      a = std::abs(v);
      b = std::arg(v) * 180.0 / pi;
      return;
    default:
      a = 20.0 * std::log10(std::abs(v));
      b = std::arg(v) * 180.0 / pi;
      return;
  }
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

frequency_table parse_touchstone(const std::string& text, const std::string& origin) {
  frequency_table table;
  bool have_option = false;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string line = raw;
    if (const auto bang = line.find('!'); bang != std::string::npos) {
      if (bang == line.find_first_not_of(" \t")) {
        table.comments.push_back(line.substr(bang + 1));
      }
      line.erase(bang);
    }
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;

    if (line[first] == '[') {
      throw parse_error(origin, lineno,
                        "bracketed keyword '" + line.substr(first) +
                            "': version 2 files are not supported, export version 1");
    }
    if (line[first] == '#') {
      if (have_option) throw parse_error(origin, lineno, "duplicate option line");
      have_option = true;
      std::istringstream toks(line.substr(first + 1));
      std::string tok;
      bool want_ref = false;
      while (toks >> tok) {
        const std::string t = lower(tok);
        if (want_ref) {
          try {
            table.r_ref = std::stod(t);
          } catch (const std::exception&) {
            throw parse_error(origin, lineno, "expected a resistance after 'R'");
          }
          want_ref = false;
        } else if (t == "hz") {
          table.source_unit = freq_unit::hz;
        } else if (t == "khz") {
          table.source_unit = freq_unit::khz;
        } else if (t == "mhz") {
          table.source_unit = freq_unit::mhz;
        } else if (t == "ghz") {
          table.source_unit = freq_unit::ghz;
        } else if (t == "ri") {
          table.source_format = data_format::ri;
        } else if (t == "ma") {
          table.source_format = data_format::ma;
        } else if (t == "db") {
          table.source_format = data_format::db;
        } else if (t == "r") {
          want_ref = true;
        } else if (t == "s") {
          // scattering parameters, the only kind handled
        } else if (t == "y" || t == "z" || t == "h" || t == "g") {
          throw parse_error(origin, lineno, "only S-parameter files are supported, got '" + tok + "'");
        } else {
          throw parse_error(origin, lineno, "unrecognized option token '" + tok + "'");
        }
      }
      if (want_ref) throw parse_error(origin, lineno, "option line ends after 'R'");
      if (!(table.r_ref > 0.0)) throw parse_error(origin, lineno, "reference resistance must be positive");
      continue;
    }

    if (!have_option) throw parse_error(origin, lineno, "data before the '#' option line");
    std::istringstream vals(line.substr(first));
    std::vector<double> v;
    double x;
    while (vals >> x) v.push_back(x);
    if (!vals.eof()) throw parse_error(origin, lineno, "non-numeric token in data row");
    if (v.size() == 3) {
      throw parse_error(origin, lineno, "one-port row: only two-port files are supported");
    }
    if (v.size() != 9) {
      throw parse_error(origin, lineno, "expected 9 numbers per row, got " +
                                            std::to_string(v.size()));
    }
    table_row row;
    row.f_hz = v[0] * unit_scale(table.source_unit);
    row.s11 = pair_to_complex(v[1], v[2], table.source_format);
    row.s21 = pair_to_complex(v[3], v[4], table.source_format);
    row.s12 = pair_to_complex(v[5], v[6], table.source_format);
    row.s22 = pair_to_complex(v[7], v[8], table.source_format);
    if (!table.rows.empty() && row.f_hz <= table.rows.back().f_hz) {
      throw parse_error(origin, lineno, "frequencies must strictly increase");
    }
    table.rows.push_back(row);
  }
  if (!have_option) throw parse_error(origin, lineno, "missing '#' option line");
  if (table.rows.empty()) throw parse_error(origin, lineno, "no data rows");
  return table;
}

frequency_table load_touchstone_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_touchstone(buf.str(), path);
}

std::string write_touchstone(const frequency_table& table, data_format format) {
  if (table.rows.empty()) throw std::invalid_argument("refusing to write an empty table");
  if (!(table.r_ref > 0.0)) throw std::invalid_argument("reference resistance must be positive");
  std::string out;
  for (const auto& c : table.comments) out += "!" + c + "\n";
  const char* fmt_name = format == data_format::ri ? "RI" : format == data_format::ma ? "MA" : "DB";
  out += "# Hz S " + std::string(fmt_name) + " R " + fmt17(table.r_ref) + "\n";
  for (const auto& row : table.rows) {
    out += fmt17(row.f_hz);
    for (const complex* s : {&row.s11, &row.s21, &row.s12, &row.s22}) {
      double a, b;
      complex_to_pair(*s, format, a, b);
      out += " " + fmt17(a) + " " + fmt17(b);
    }
    out += "\n";
  }
  return out;
}

network::s_matrix table_to_channel(const frequency_table& table, double f_hz) {
  if (table.rows.empty()) throw std::invalid_argument("empty table");
  const double f_lo = table.rows.front().f_hz;
  const double f_hi = table.rows.back().f_hz;
  if (f_hz < f_lo || f_hz > f_hi) {
    throw std::domain_error("frequency " + std::to_string(f_hz) + " Hz outside table range [" +
                            std::to_string(f_lo) + ", " + std::to_string(f_hi) + "]");
  }
  const auto hi = std::lower_bound(
      table.rows.begin(), table.rows.end(), f_hz,
      [](const table_row& r, double f) { return r.f_hz < f; });
  network::s_matrix s;
  s.f_hz = f_hz;
  s.refs = {complex(table.r_ref, 0.0), complex(table.r_ref, 0.0)};
  if (hi->f_hz == f_hz) {
    s.s11 = hi->s11;
    s.s21 = hi->s21;
    s.s12 = hi->s12;
    s.s22 = hi->s22;
    return s;
  }
  const auto lo = hi - 1;
  const double t = (f_hz - lo->f_hz) / (hi->f_hz - lo->f_hz);
  const auto lerp = [t](complex a, complex b) { return a + t * (b - a); };
  s.s11 = lerp(lo->s11, hi->s11);
  s.s21 = lerp(lo->s21, hi->s21);
  s.s12 = lerp(lo->s12, hi->s12);
  s.s22 = lerp(lo->s22, hi->s22);
  return s;
}

}  // namespace bcplink::touchstone
