#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bcplink/dielectric.hpp"
#include "bcplink/network.hpp"

namespace bcplink::channel {

// all lengths in metres, angle in degrees
struct link_geometry {
  double d_h = 0.002;        // implant depth below the skin surface
  double d_v = 0.001;        // vertical offset between ring plane and implant
  double d_tx = 0.022;       // axial separation of the two TX rings
  double t_tx = 0.001;       // axial width of each TX ring
  double h_tx = 0.0005;      // radial build height of each TX ring
  double r_rx = 0.001;       // RX disc electrode radius
  double h_rx = 0.0001;      // RX disc electrode thickness
  double h_implant = 0.020;  // implant length (RX electrode spacing)
  double r_tissue = 0.010;   // tissue cylinder radius
  double theta_deg = 0.0;    // implant axis misalignment, 0..90
};

struct tissue_layer {
  std::string material;
  double thickness = 0.0;  // m
};

// radial layering of the tissue cylinder, outermost layer first
struct layer_stack {
  std::vector<tissue_layer> layers;
  double total_thickness() const;
};

// parses
//   [stack]
//   layer = skin, 0.0007
layer_stack load_stack(std::istream& in, const std::string& origin);
layer_stack load_stack_file(const std::string& path);

// assigns one field by its name (theta means theta_deg, in degrees);
// returns false for unknown names
bool set_geometry_field(link_geometry& geom, const std::string& key, double value);

// parses
//   [geometry]
//   d_h = 0.002
// unset keys keep their defaults; the result is validated
link_geometry load_geometry(std::istream& in, const std::string& origin);
link_geometry load_geometry_file(const std::string& path);

// Projection constants for the lumped element table.  The translation from
// the cylindrical geometry to one-dimensional prisms is necessarily a
// modelling choice; every constant used by channel_two_port lives here.
//
//   ring contact    R = 1/(4 sigma_outer a),  a = sqrt(t_tx 2 pi r_ring / pi),
//                   r_ring = r_tissue + h_tx/2, one per ring, in series
//   ring-to-ring    axial prism through the shell above the implant
//   leakage         (depths 0..d_shell, d_shell = min(d_h, r_tissue - r_rx)),
//                   effective path length leak_length_scale * d_tx (the
//                   return bows outward, so it runs longer than the ring
//                   spacing), in shunt at the TX side; current in this shell
//                   returns between the rings without reaching the implant
//   radial descent  prisms of length dl at depth t, cross-section
//                   2 pi max(r_tissue - t, r_rx) * (t_tx + radial_fan * t),
//                   traversed once per ring, in series
//   axial feed      prism of cross-section pi (pickup_radius_scale r_rx)^2
//                   and length d_tx - min(h_implant, d_tx) funnelling into
//                   the pickup column, in series, material at depth d_h
//   pickup span     prism of the same cross-section, length
//                   min(h_implant, d_tx): the differential implant taps the
//                   voltage across this column, so it is the shunt (mutual)
//                   branch of the output tee
//   disc contact    R = 1/(4 sigma_local r_rx) per RX disc, in series
//   coupling        implant tilt and vertical offset are projection losses
//                   of the differential pickup, not tissue elements; the
//                   amplitude factor misalignment_scale(theta) /
//                   (1 + (d_v / (dv_field_width * r_tissue))^2) enters the
//                   link budget squared, as coupling_power_factor, applied
//                   to reported efficiencies.  A frequency-flat factor
//                   cannot move the argmax over f, which keeps the matched
//                   resonance exactly alignment-invariant
//
// h_rx does not enter the table; disc spreading resistance depends only on
// the disc radius.  The pickup column is pinned to the disc scale rather
// than to the residual core so that deeper implants never look better: depth
// grows the series descent and the leak shell while the mutual stays put.
struct model_constants {
  double radial_fan = 2.0;          // sheet widening per unit depth under a ring
  double pickup_radius_scale = 1.0; // pickup column radius, multiple of r_rx
  double leak_length_scale = 12.0;  // leak path length, multiple of d_tx
  double dv_field_width = 1.0;      // d_v roll-off scale, multiple of r_tissue
  double misalignment_floor = 0.05;
};

// amplitude factor on the pickup for an implant tilted by theta degrees;
// 1 at 0 deg, strictly decreasing, floor at 90 deg
double misalignment_scale(double theta_deg, double floor = 0.05);

// power factor combining tilt and vertical offset; multiply reported link
// efficiencies by this (it is the square of the amplitude factor)
double coupling_power_factor(const link_geometry& geom, const model_constants& k = {});

// lumped two-port of the tissue channel between the TX ring pair (port 1)
// and the RX electrode pair (port 2); alignment-independent, see the table
network::two_port_abcd channel_two_port(const link_geometry& geom, const layer_stack& stack,
                                        const dielectric::material_db& db, double f_hz,
                                        const model_constants& k = {});

struct sar_estimate {
  double peak_avg_sar = 0.0;     // W/kg
  double whole_body_limit = 0.08;
  double limb_limit = 4.0;
  bool compliant = false;        // against the limb (local exposure) limit
};

// |J|^2 / (sigma rho) with J = i_rms over the core cross-section at the
// implant depth and sigma taken from the layer the implant sits in
sar_estimate sar_coarse(double i_rms, const link_geometry& geom, const layer_stack& stack,
                        const dielectric::material_db& db, double f_hz,
                        double mass_density = 1050.0);

sar_estimate icnirp_check(double peak_avg_sar);

// validation helpers shared by the channel and the sweep driver; throw
// std::invalid_argument on violations
void validate_geometry(const link_geometry& geom);
void validate_against_stack(const link_geometry& geom, const layer_stack& stack);

}  // namespace bcplink::channel
