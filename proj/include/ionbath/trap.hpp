#pragma once

#include <array>

#include "ionbath/vec.hpp"

namespace ionbath {

// Linear Paul trap in the first-order (lowest-band) Mathieu description.
// Axes are the trap principal axes: x, y radial, z axial. Excess micromotion
// enters through a static displacement u_dc (in-phase EMM, coupled via q_j/2)
// and a homogeneous quadrature-field amplitude u_perp.
struct TrapConfig {
    double rf_frequency = 0.0;          // Omega, rad/s
    std::array<double, 3> a{0, 0, 0};   // Mathieu dc parameters
    std::array<double, 3> q{0, 0, 0};   // Mathieu rf parameters
    std::array<double, 3> emm_dc_displacement{0, 0, 0};       // u_dc, m
    std::array<double, 3> emm_quadrature_amplitude{0, 0, 0};  // u_perp, m

    // First-order validity bounds |a|<=0.3, |q|<=0.9 and per-axis stability
    // a + q^2/2 >= 0. Throws std::invalid_argument.
    void validate() const;
};

struct SpeciesPair {
    double ion_mass = 0.0;   // kg
    double atom_mass = 0.0;  // kg
    double c4 = 0.0;         // J m^4, V(r) = -c4 / (2 r^4)

    double reduced_mass() const { return ion_mass * atom_mass / (ion_mass + atom_mass); }
    void validate() const;
};

// Secular amplitude/phase per mode; position coordinate u_j cos(w_j t + phi_j).
struct SecularState {
    std::array<double, 3> amplitude{0, 0, 0};  // u_j >= 0, m
    std::array<double, 3> phase{0, 0, 0};      // phi_j in [0, 2pi)
};

struct TrajectorySample {
    Vec3 position;
    Vec3 velocity;
};

// w_j = (Omega/2) sqrt(a_j + q_j^2/2). Marginal axes (a=q=0) give w=0;
// a_j + q_j^2/2 < 0 throws.
std::array<double, 3> secular_frequencies(const TrapConfig& trap);

// Inverts measured secular frequencies to Mathieu parameters. With
// axial_rf_free the axial confinement is purely static (q_z = 0,
// a_z = (2 w_z/Omega)^2) and the radial rf parameter obeys q_x = -q_y;
// the static potential keeps trace(a) = 0, splitting the radials through
// a_x != a_y. Degenerate radials reduce to a_x = a_y = -a_z/2. Without the
// flag each axis is inverted as pure rf drive (a = 0, q_j = 2*sqrt(2) w_j/Omega).
TrapConfig mathieu_from_frequencies(const std::array<double, 3>& omega,
                                    double rf_frequency, bool axial_rf_free);

// First-order trajectory
//   x_j(t) = (u_dc_j + u_j cos(w_j t + phi_j)) (1 + (q_j/2) cos(Omega t))
//            + uperp_j sin(Omega t)
//   v_j(t) = -u_j w_j sin(w_j t + phi_j)
//            - (u_j cos(w_j t + phi_j) + u_dc_j) (q_j/2) Omega sin(Omega t)
//            + uperp_j Omega cos(Omega t)
// The uperp term is the homogeneous quadrature field's driven motion and
// vanishes for the default zero amplitude.
TrajectorySample trajectory_at(const TrapConfig& trap, const SecularState& state, double t);

// Exact algebraic inverse of trajectory_at: recovers amplitudes and phases
// from a phase-space snapshot at time t. Requires w_j > 0 on every axis.
SecularState extract_secular_state(const TrapConfig& trap, const Vec3& position,
                                   const Vec3& velocity, double t);

// |u_EMM|^2 = sum_j (u_dc_j q_j/2)^2 + sum_j uperp_j^2.
double emm_amplitude(const TrapConfig& trap);

// Total secular energy sum_j (1/2) m w_j^2 u_j^2 (kinetic plus potential), J.
double secular_energy(const TrapConfig& trap, double ion_mass, const SecularState& state);

// Mean EMM kinetic energy E = m (|u_EMM| Omega)^2 / 4, in J.
double emm_energy(const TrapConfig& trap, double ion_mass);

// Characteristic energy scale of forced-micromotion heating in atom-ion
// collisions, W0 = 2 (mu^5 w^4 C4 / (m_i^3 q^2))^(1/3), in J. The caller
// chooses which secular mode (w, q) represents the trap; for anisotropic
// radials the geometric mean of the two radial modes is the documented
// convention used by the CLI.
double cetina_energy_scale(const SpeciesPair& pair, double omega, double q);

}  // namespace ionbath
