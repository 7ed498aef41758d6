#pragma once

#include <string>
#include <vector>

#include "bcplink/network.hpp"

// touchstone version-1 two-port (.s2p) reader/writer, so externally simulated
// or measured channels can stand in for the built-in equivalent circuit
namespace bcplink::touchstone {

using network::complex;

enum class freq_unit { hz, khz, mhz, ghz };
enum class data_format { ri, ma, db };

// one frequency row in version-1 two-port column order: s11 s21 s12 s22
struct table_row {
  double f_hz = 0.0;
  complex s11, s21, s12, s22;
};

struct frequency_table {
  double r_ref = 50.0;
  std::vector<table_row> rows;            // strictly ascending f, stored in hz
  std::vector<std::string> comments;      // '!' lines in source order, markers stripped
  freq_unit source_unit = freq_unit::hz;  // unit of the file this came from
  data_format source_format = data_format::ri;
};

// parses version-1 text; 'origin' names the source in diagnostics.
// throws parse_error with a 1-based line number on malformed input and
// rejects version-2 constructs outright.
frequency_table parse_touchstone(const std::string& text, const std::string& origin = "<memory>");

// reads and parses a file; throws io_error when it cannot be opened
frequency_table load_touchstone_file(const std::string& path);

// canonical emission: option line '# Hz S <FMT> R <r>', one row per line,
// 17 significant digits, single spaces. byte-stable for a given table.
std::string write_touchstone(const frequency_table& table, data_format format = data_format::ri);

// scattering matrix at f via linear interpolation of real/imaginary parts
// between the bracketing rows; exact on grid points; refuses extrapolation
network::s_matrix table_to_channel(const frequency_table& table, double f_hz);

}  // namespace bcplink::touchstone
