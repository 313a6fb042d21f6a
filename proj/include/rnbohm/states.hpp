#pragma once

#include "rnbohm/hamiltonian.hpp"

namespace rnbohm {

// Smooth initial data: a radial Gaussian packet times a fixed spinor in every
// interior sector, psi_0 a constant, boundary spinors b = 0. Sector N >= 2 is
// the antisymmetrized product of one-particle packets at shifted radii. Each
// sector also carries a short-range term that matches its r = 0 trace, so the
// data is continuous at the first radial node.
struct PacketSpec {
  double psi0 = 0.5;        // relative amplitude of the vacuum sector
  double w1 = 1.0;          // relative amplitude of sector 1
  double w2 = 0.3;          // relative amplitude of sector 2 (and higher)
  double r_center = 2.0;
  double width = 0.6;
  double incoming = 1.0;    // weight of phi- in the packet spinor
  double outgoing = 0.3;    // weight of phi+
  double theta_tilt = 0.0;  // amplitude of a cos(theta) modulation
  double dress_width = 1.0; // range of the r = 0 trace continuation; 0 disables it
};

// Normalized coordinates (x^+ G x = 1).
CVec packet_state(const DiscreteHamiltonian& H, const PacketSpec& spec);

}  // namespace rnbohm
