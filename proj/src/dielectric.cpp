#include "bcplink/dielectric.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bcplink/constants.hpp"
#include "bcplink/errors.hpp"

namespace bcplink::dielectric {

complex complex_permittivity(const cole_cole_model& m, double f_hz) {
  if (!(f_hz > 0.0)) {
    throw std::invalid_argument("complex_permittivity: frequency must be positive, got " +
                                std::to_string(f_hz));
  }
  const double w = 2.0 * pi * f_hz;
  complex eps(m.eps_inf, 0.0);
  for (const auto& p : m.poles) {
    // principal branch of (j*w*tau)^(1-alpha)
    const complex jwt(0.0, w * p.tau);
    eps += p.delta_eps / (1.0 + std::pow(jwt, 1.0 - p.alpha));
  }
  eps += m.sigma_static / (complex(0.0, 1.0) * w * eps0);
  return eps;
}

double conductivity(const cole_cole_model& m, double f_hz) {
  const double w = 2.0 * pi * f_hz;
  return -w * eps0 * complex_permittivity(m, f_hz).imag();
}

void material_db::add(cole_cole_model m) {
  if (m_materials.count(m.name)) {
    throw std::invalid_argument("material '" + m.name + "' defined twice");
  }
  m_materials.emplace(m.name, std::move(m));
}

bool material_db::contains(const std::string& name) const {
  return m_materials.count(name) != 0;
}

const cole_cole_model& material_db::at(const std::string& name) const {
  auto it = m_materials.find(name);
  if (it == m_materials.end()) {
    std::string msg = "unknown material '" + name + "', available:";
    for (const auto& [k, v] : m_materials) msg += " " + k;
    throw std::invalid_argument(msg);
  }
  return it->second;
}

std::vector<std::string> material_db::names() const {
  std::vector<std::string> out;
  out.reserve(m_materials.size());
  for (const auto& [k, v] : m_materials) out.push_back(k);
  return out;
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

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void validate_model(const cole_cole_model& m, const std::string& origin, int line) {
  if (m.eps_inf < 1.0) {
    throw parse_error(origin, line, "material '" + m.name + "': eps_inf must be >= 1");
  }
  if (m.sigma_static < 0.0) {
    throw parse_error(origin, line, "material '" + m.name + "': sigma_static must be >= 0");
  }
  for (std::size_t i = 0; i < m.poles.size(); ++i) {
    const auto& p = m.poles[i];
    const std::string where = "material '" + m.name + "' pole " + std::to_string(i + 1);
    if (p.delta_eps < 0.0) throw parse_error(origin, line, where + ": delta_eps must be >= 0");
    if (!(p.tau > 0.0)) throw parse_error(origin, line, where + ": tau must be > 0");
    if (p.alpha < 0.0 || p.alpha >= 1.0)
      throw parse_error(origin, line, where + ": alpha must be in [0, 1)");
  }
}

}  // namespace

material_db load_material_db(std::istream& in, const std::string& origin) {
  material_db db;
  cole_cole_model cur;
  bool have_section = false;
  int section_line = 0;

  auto flush = [&](int line) {
    if (!have_section) return;
    validate_model(cur, origin, line);
    try {
      db.add(std::move(cur));
    } catch (const std::invalid_argument& e) {
      throw parse_error(origin, section_line, e.what());
    }
    cur = cole_cole_model{};
  };

  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']') throw parse_error(origin, line, "unterminated section header");
      const std::string inner = trim(s.substr(1, s.size() - 2));
      if (inner.rfind("material", 0) != 0) {
        throw parse_error(origin, line, "expected [material <name>], got [" + inner + "]");
      }
      const std::string name = trim(inner.substr(8));
      if (name.empty() || name.find(' ') != std::string::npos) {
        throw parse_error(origin, line, "material name must be a single token");
      }
      flush(line);
      cur.name = name;
      have_section = true;
      section_line = line;
      continue;
    }

    const auto eq = s.find('=');
    if (eq == std::string::npos) throw parse_error(origin, line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (!have_section) {
      throw parse_error(origin, line, "'" + key + "' outside of a [material] section");
    }

    if (key == "eps_inf") {
      cur.eps_inf = parse_number(val, origin, line);
    } else if (key == "sigma_static") {
      cur.sigma_static = parse_number(val, origin, line);
    } else if (key == "pole") {
      const auto parts = split(val, ',');
      if (parts.size() != 3) {
        throw parse_error(origin, line, "pole needs 3 values: delta_eps, tau, alpha");
      }
      if (static_cast<int>(cur.poles.size()) >= max_poles_per_material) {
        throw parse_error(origin, line, "material '" + cur.name + "': more than " +
                                            std::to_string(max_poles_per_material) + " poles");
      }
      cole_cole_pole p;
      p.delta_eps = parse_number(trim(parts[0]), origin, line);
      p.tau = parse_number(trim(parts[1]), origin, line);
      p.alpha = parse_number(trim(parts[2]), origin, line);
      cur.poles.push_back(p);
    } else {
      throw parse_error(origin, line, "unknown key '" + key + "'");
    }
  }
  flush(line + 1);
  if (db.size() == 0) throw parse_error(origin, 1, "no materials defined");
  return db;
}

material_db load_material_db_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open material file '" + path + "'");
  return load_material_db(in, path);
}

}  // namespace bcplink::dielectric
