#include "bcplink/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bcplink/channel.hpp"
#include "bcplink/dielectric.hpp"
#include "bcplink/errors.hpp"
#include "bcplink/explore.hpp"
#include "bcplink/matching.hpp"
#include "bcplink/network.hpp"
#include "bcplink/touchstone.hpp"

namespace bcplink::cli {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// impedances print in the R +/- jX style
std::string ohm(network::complex z) {
  return fmt6(z.real()) + (z.imag() < 0.0 ? " - j" : " + j") + fmt6(std::abs(z.imag()));
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw io_error("short write to " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw io_error("cannot move " + tmp + " into place: " + ec.message());
  }
}

matching::load_model parse_load(const std::string& text) {
  matching::load_model load;
  const auto comma = text.find(',');
  try {
    std::size_t used = 0;
    load.r = std::stod(text.substr(0, comma), &used);
    if (used != (comma == std::string::npos ? text.size() : comma)) throw std::exception();
    if (comma != std::string::npos) {
      load.c = std::stod(text.substr(comma + 1), &used);
      if (used != text.size() - comma - 1) throw std::exception();
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("--load takes R or R,C (SI units), got '" + text + "'");
  }
  return load;
}

struct cli_state {
  std::string materials_path;
  std::string stack_path;
  std::string format = "text";

  bool csv() const { return format == "csv"; }
  dielectric::material_db materials() const {
    if (materials_path.empty()) {
      throw std::invalid_argument("no material file: pass --materials or set BCPLINK_MATERIALS");
    }
    return dielectric::load_material_db_file(materials_path);
  }
  channel::layer_stack stack() const {
    if (stack_path.empty()) throw std::invalid_argument("no stack file: pass --stack");
    return channel::load_stack_file(stack_path);
  }
};

void report_materials_list(const cli_state& st, std::ostream& out) {
  const auto db = st.materials();
  if (st.csv()) out << "name\n";
  for (const auto& n : db.names()) out << n << "\n";
}

void report_materials_show(const cli_state& st, const std::string& name,
                           const std::vector<double>& freqs, std::ostream& out) {
  const auto db = st.materials();
  const auto& model = db.at(name);
  if (st.csv()) out << "name,f_hz,eps_re,eps_im,sigma_s_per_m\n";
  for (double f : freqs) {
    if (!(f > 0.0)) throw std::invalid_argument("--freq must be positive");
    const auto eps = dielectric::complex_permittivity(model, f);
    const double sigma = dielectric::conductivity(model, f);
    if (st.csv()) {
      out << name << "," << fmt17(f) << "," << fmt17(eps.real()) << "," << fmt17(eps.imag())
          << "," << fmt17(sigma) << "\n";
    } else {
      out << name << " @ " << fmt6(f) << " Hz: eps_r = " << ohm(eps)
          << ", sigma = " << fmt6(sigma) << " S/m\n";
    }
  }
}

std::string element_text(const matching::imn_element& e) {
  const bool ind = e.kind == matching::element_kind::inductor;
  return std::string(ind ? "inductor " : "capacitor ") + fmt6(e.value) + (ind ? " H" : " F");
}

void report_section(const matching::l_section& sec, const char* tag, bool csv, std::ostream& out) {
  const bool series_first = sec.topology == matching::section_topology::series_then_shunt;
  if (csv) {
    const auto kind = [](const matching::imn_element& e) {
      return e.kind == matching::element_kind::inductor ? "inductor" : "capacitor";
    };
    out << tag << "_series_kind," << kind(sec.series_elem) << "\n";
    out << tag << "_series_value," << fmt17(sec.series_elem.value) << "\n";
    out << tag << "_shunt_kind," << kind(sec.shunt_elem) << "\n";
    out << tag << "_shunt_value," << fmt17(sec.shunt_elem.value) << "\n";
    out << tag << "_topology," << (series_first ? "series_then_shunt" : "shunt_then_series")
        << "\n";
  } else {
    out << tag << "_imn: series " << element_text(sec.series_elem) << ", shunt "
        << element_text(sec.shunt_elem) << " ("
        << (series_first ? "series element at the outer port" : "shunt element at the outer port")
        << ")\n";
  }
}

int cmd_match(const cli_state& st, const std::string& geom_path, const std::string& s2p_path,
              const std::string& load_text, double f0, double src_ref, std::ostream& out) {
  if (geom_path.empty() == s2p_path.empty()) {
    throw std::invalid_argument("pass exactly one channel source: --geom or --s2p");
  }
  if (!(f0 > 0.0)) throw std::invalid_argument("--freq must be positive");
  const auto load = parse_load(load_text);
  const auto z_load = matching::load_impedance(load, f0);

  network::two_port_abcd ch;
  if (!geom_path.empty()) {
    const auto geom = channel::load_geometry_file(geom_path);
    const auto stack = st.stack();
    const auto db = st.materials();
    channel::validate_against_stack(geom, stack);
    ch = channel::channel_two_port(geom, stack, db, f0);
  } else {
    const auto table = touchstone::load_touchstone_file(s2p_path);
    ch = network::s_to_abcd(touchstone::table_to_channel(table, f0));
  }

  const auto sol = matching::co_determine(ch, load, f0, src_ref);
  if (st.csv()) {
    out << "key,value\n";
    out << "f0_hz," << fmt17(f0) << "\n";
    out << "zload_re," << fmt17(z_load.real()) << "\n";
    out << "zload_im," << fmt17(z_load.imag()) << "\n";
    out << "marginal," << (sol.marginal ? 1 : 0) << "\n";
    if (!sol.marginal) {
      report_section(sol.tx_imn, "tx", true, out);
      report_section(sol.rx_imn, "rx", true, out);
    }
    out << "residual_s11_db," << fmt17(sol.residual_s11_db) << "\n";
    out << "residual_s22_db," << fmt17(sol.residual_s22_db) << "\n";
    out << "matched_pte_pct," << fmt17(sol.matched_pte) << "\n";
    out << "zs_opt_re," << fmt17(sol.zs_opt.real()) << "\n";
    out << "zs_opt_im," << fmt17(sol.zs_opt.imag()) << "\n";
    out << "zl_opt_re," << fmt17(sol.zl_opt.real()) << "\n";
    out << "zl_opt_im," << fmt17(sol.zl_opt.imag()) << "\n";
    if (!sol.deviation_note.empty()) out << "note," << sol.deviation_note << "\n";
  } else {
    out << "f0: " << fmt6(f0) << " Hz\n";
    out << "z_load: " << ohm(z_load) << " Ohm\n";
    if (sol.marginal) {
      out << "marginal: the network sits on the k = 1 stability boundary\n";
    } else {
      report_section(sol.tx_imn, "tx", false, out);
      report_section(sol.rx_imn, "rx", false, out);
    }
    out << "residual_s11: " << fmt6(sol.residual_s11_db) << " dB\n";
    out << "residual_s22: " << fmt6(sol.residual_s22_db) << " dB\n";
    out << "matched_pte: " << fmt6(sol.matched_pte) << " %\n";
    out << "zs_opt: " << ohm(sol.zs_opt) << " Ohm\n";
    out << "zl_opt: " << ohm(sol.zl_opt) << " Ohm\n";
    if (!sol.deviation_note.empty()) out << "note: " << sol.deviation_note << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_path,
              const std::string& svg_path, bool serial, std::ostream& out) {
  const auto spec = explore::load_sweep_spec_file(spec_path);
  const auto result = explore::run_sweep(spec, !serial);
  const auto csv = explore::emit_csv(result);
  if (out_path.empty()) {
    out << csv;
  } else {
    atomic_write(out_path, csv);
    out << "wrote " << out_path << "\n";
  }
  if (!svg_path.empty()) {
    atomic_write(svg_path, explore::emit_svg(result));
    out << "wrote " << svg_path << "\n";
  }
  return 0;
}

void report_sar(const channel::sar_estimate& est, bool csv, std::ostream& out) {
  const bool whole_ok = est.peak_avg_sar <= est.whole_body_limit;
  const char* wb = whole_ok ? "COMPLIANT" : "NON-COMPLIANT";
  const char* limb = est.compliant ? "COMPLIANT" : "NON-COMPLIANT";
  if (csv) {
    out << "key,value\n";
    out << "peak_avg_sar_w_per_kg," << fmt17(est.peak_avg_sar) << "\n";
    out << "whole_body_limit," << fmt17(est.whole_body_limit) << "\n";
    out << "whole_body," << wb << "\n";
    out << "limb_limit," << fmt17(est.limb_limit) << "\n";
    out << "limb," << limb << "\n";
  } else {
    out << "peak_avg_sar: " << fmt6(est.peak_avg_sar) << " W/kg\n";
    out << "whole_body (" << fmt6(est.whole_body_limit) << " W/kg): " << wb << "\n";
    out << "limb (" << fmt6(est.limb_limit) << " W/kg): " << limb << "\n";
  }
}

int cmd_sar(const cli_state& st, double value, bool have_value, double current, bool have_current,
            const std::string& geom_path, double f, std::ostream& out) {
  if (have_value == have_current) {
    throw std::invalid_argument("pass exactly one of --value or --current");
  }
  channel::sar_estimate est;
  if (have_value) {
    est = channel::icnirp_check(value);
  } else {
    if (geom_path.empty()) throw std::invalid_argument("--current needs --geom");
    if (!(f > 0.0)) throw std::invalid_argument("--freq must be positive");
    const auto geom = channel::load_geometry_file(geom_path);
    const auto stack = st.stack();
    const auto db = st.materials();
    channel::validate_against_stack(geom, stack);
    est = channel::sar_coarse(current, geom, stack, db, f);
  }
  report_sar(est, st.csv(), out);
  return 0;
}

int cmd_touchstone(const std::string& action, const std::string& in_path,
                   const std::string& out_path, const std::string& fmt_name,
                   const std::string& grid_text, std::ostream& out) {
  auto table = touchstone::load_touchstone_file(in_path);
  touchstone::data_format fmt = touchstone::data_format::ri;
  if (fmt_name == "MA" || fmt_name == "ma") fmt = touchstone::data_format::ma;
  else if (fmt_name == "DB" || fmt_name == "db") fmt = touchstone::data_format::db;
  else if (fmt_name != "RI" && fmt_name != "ri") {
    throw std::invalid_argument("--fmt takes RI, MA, or DB");
  }

  if (action == "resample") {
    explore::frequency_grid grid;
    if (!grid_text.empty()) {
      std::vector<double> nums;
      std::size_t start = 0;
      std::string spacing = "linear";
      while (start <= grid_text.size()) {
        const auto comma = grid_text.find(',', start);
        const std::string tok = grid_text.substr(start, comma - start);
        try {
          nums.push_back(std::stod(tok));
        } catch (const std::exception&) {
          if (tok == "linear" || tok == "log") spacing = tok;
          else throw std::invalid_argument("bad --grid entry '" + tok + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (nums.size() != 3) throw std::invalid_argument("--grid takes fmin,fmax,n[,linear|log]");
      grid.f_min = nums[0];
      grid.f_max = nums[1];
      grid.n_points = static_cast<int>(nums[2]);
      grid.spacing = spacing == "log" ? explore::grid_spacing::log : explore::grid_spacing::linear;
    }
    touchstone::frequency_table resampled;
    resampled.r_ref = table.r_ref;
    resampled.comments = table.comments;
    for (double f : explore::grid_frequencies(grid)) {
      const auto s = touchstone::table_to_channel(table, f);
      resampled.rows.push_back({f, s.s11, s.s21, s.s12, s.s22});
    }
    table = std::move(resampled);
  }
  atomic_write(out_path, touchstone::write_touchstone(table, fmt));
  out << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"galvanically coupled intra-body power link designer"};
  app.require_subcommand(1);
  app.fallthrough();

  cli_state st;
  app.add_option("--materials", st.materials_path, "material parameter file")
      ->envname("BCPLINK_MATERIALS");
  app.add_option("--stack", st.stack_path, "tissue layer stack file");
  app.add_option("--format", st.format, "output style")
      ->check(CLI::IsMember({"text", "csv"}));

  auto* materials = app.add_subcommand("materials", "inspect the material database");
  auto* mat_list = materials->add_subcommand("list", "list material names");
  auto* mat_show = materials->add_subcommand("show", "evaluate a material");
  materials->require_subcommand(1);
  std::string mat_name;
  std::vector<double> mat_freqs;
  mat_show->add_option("name", mat_name, "material name")->required();
  mat_show->add_option("--freq", mat_freqs, "evaluation frequencies in Hz");

  auto* match = app.add_subcommand("match", "co-design matching networks for a channel");
  std::string geom_path, s2p_path, load_text = "50";
  double f0 = 0.0, src_ref = 50.0;
  match->add_option("--geom", geom_path, "geometry file channel source");
  match->add_option("--s2p", s2p_path, "touchstone channel source");
  match->add_option("--load", load_text, "load as R or R,C (ohm, farad)");
  match->add_option("--freq", f0, "design frequency in Hz")->required();
  match->add_option("--src-ref", src_ref, "source reference resistance, ohm");

  auto* sweep = app.add_subcommand("sweep", "run a design-space sweep");
  std::string spec_path, sweep_out, sweep_svg;
  bool serial = false;
  sweep->add_option("--spec", spec_path, "sweep spec file")->required();
  sweep->add_option("--out", sweep_out, "write CSV here instead of stdout");
  sweep->add_option("--svg", sweep_svg, "also write an SVG chart");
  sweep->add_flag("--serial", serial, "evaluate points on one thread");

  auto* sar = app.add_subcommand("sar", "check exposure compliance");
  double sar_value = 0.0, sar_current = 0.0, sar_freq = 1.25e9;
  std::string sar_geom;
  auto* sar_value_opt = sar->add_option("--value", sar_value, "peak spatial-average SAR, W/kg");
  auto* sar_current_opt = sar->add_option("--current", sar_current, "drive current (A rms)");
  sar->add_option("--geom", sar_geom, "geometry file for the current route");
  sar->add_option("--freq", sar_freq, "evaluation frequency in Hz");

  auto* ts = app.add_subcommand("touchstone", "convert or resample two-port files");
  auto* ts_convert = ts->add_subcommand("convert", "rewrite in another data format");
  auto* ts_resample = ts->add_subcommand("resample", "interpolate onto a frequency grid");
  ts->require_subcommand(1);
  std::string ts_in, ts_out, ts_fmt = "RI", ts_grid;
  for (auto* sub : {ts_convert, ts_resample}) {
    sub->add_option("--in", ts_in, "input .s2p")->required();
    sub->add_option("--out", ts_out, "output path")->required();
    sub->add_option("--fmt", ts_fmt, "RI, MA, or DB");
  }
  ts_resample->add_option("--grid", ts_grid, "fmin,fmax,n[,linear|log]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (mat_list->parsed()) {
      report_materials_list(st, out);
      return 0;
    }
    if (mat_show->parsed()) {
      if (mat_freqs.empty()) mat_freqs.push_back(1.25e9);
      report_materials_show(st, mat_name, mat_freqs, out);
      return 0;
    }
    if (match->parsed()) return cmd_match(st, geom_path, s2p_path, load_text, f0, src_ref, out);
    if (sweep->parsed()) return cmd_sweep(spec_path, sweep_out, sweep_svg, serial, out);
    if (sar->parsed()) {
      return cmd_sar(st, sar_value, sar_value_opt->count() > 0, sar_current,
                     sar_current_opt->count() > 0, sar_geom, sar_freq, out);
    }
    if (ts_convert->parsed() || ts_resample->parsed()) {
      return cmd_touchstone(ts_convert->parsed() ? "convert" : "resample", ts_in, ts_out, ts_fmt,
                            ts_grid, out);
    }
    err << "error: no command selected\n";
    return 2;
  } catch (const parse_error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const io_error& e) {
    err << "error: " << e.what() << "\n";
    return 5;
  } catch (const physics_error& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bcplink::cli
