#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ionbath/fitting.hpp"
#include "ionbath/trap.hpp"
#include "ionbath/vec.hpp"

namespace ionbath {

// Probe laser geometry. Only the k-vector enters any computation; the field
// amplitude, optical frequency and phase are carried for completeness.
struct LaserProbe {
    double wavelength = 674e-9;      // m
    Vec3 direction{0.0, 0.0, 1.0};   // unit k-hat
    double field_amplitude = 0.0;    // V/m
    double optical_frequency = 0.0;  // rad/s
    double optical_phase = 0.0;      // rad

    double wavenumber() const;  // 2 pi / wavelength
    Vec3 k_vector() const;
    void validate() const;
};

// u_EMM(t) = in_phase cos(Omega t) + quadrature sin(Omega t)
struct EmmVector {
    Vec3 in_phase{};    // m
    Vec3 quadrature{};  // m

    double total_amplitude() const;
};

// k.u_EMM(t) = beta cos(Omega t + delta)
struct ModulationIndex {
    double beta = 0.0;
    double delta = 0.0;  // rad
};

ModulationIndex modulation_index(const LaserProbe& probe, const EmmVector& emm);

// Sideband-to-carrier coupling J1(beta)/J0(beta), valid below the first J0
// zero (enforced as beta < 1.8), its small-beta limit beta/2, and the
// numerical inverse of the exact ratio.
double coupling_ratio_from_beta(double beta);
double coupling_ratio_small_beta(double beta);
double beta_from_coupling_ratio(double ratio);

// Driven-oscillator rf field at the ion: E_rf = m Omega^2 |u| / e.
double rf_field_from_amplitude(double u_emm, double ion_mass, double rf_frequency);

// Average kinetic energy of an rf oscillation of amplitude u, m (u Omega)^2/4,
// expressed as a temperature; and the inverse conversion.
double emm_temperature_from_amplitude(double u_emm, double ion_mass, double rf_frequency);
double emm_amplitude_from_temperature(double temperature, double ion_mass,
                                      double rf_frequency);

// m_d g_D - m_s g_S. Defaults: free-electron g for S_1/2, LS-coupling 6/5 for
// D_5/2 (Sr+ 674 nm quadrupole transition).
double zeeman_susceptibility(double m_s, double m_d, double g_s = 2.00231930,
                             double g_d = 1.2);

struct ZeemanTransition {
    double m_s = 0.5;
    double m_d = 0.5;
    double susceptibility = 0.0;

    void validate() const;
};

struct ZeemanMeasurement {
    double susceptibility = 0.0;
    double voltage = 0.0;  // compensation voltage found on this transition, V
    double sigma = 0.0;    // voltage uncertainty; 0 means unweighted
};

struct RfZeemanResult {
    double compensation = 0.0;  // V, extrapolated to zero susceptibility
    double compensation_sigma = 0.0;
    double slope = 0.0;  // V per unit susceptibility
    double slope_sigma = 0.0;
    double equivalent_amplitude = 0.0;  // m per unit susceptibility
};

// Weighted line through voltage vs susceptibility. The intercept is the true
// compensation; the slope times a supplied response calibration gives the
// rf-Zeeman-equivalent EMM amplitude.
RfZeemanResult rf_zeeman_extrapolate(const std::vector<ZeemanMeasurement>& measurements,
                                     double response_m_per_volt = 0.0);

struct ResponseMeasurement {
    double delta_voltage = 0.0;  // V, offset from the compensated point
    double amplitude = 0.0;      // m
    double sigma = 0.0;          // amplitude uncertainty; 0 means unweighted
};

// Electrode response |u_EMM| vs delta-V. With fit_floor the regression runs
// against |delta_voltage| so the residual amplitude at the compensated point
// shows up as the intercept.
LineFit emm_response_slope(const std::vector<ResponseMeasurement>& measurements,
                           bool fit_floor = false);

// Thermal-motion sideband coupling expressed as an equivalent modulation
// index: beta_temp = q eta^2 kB T / (hbar w) for the selected mode. The exact
// Bessel-product form is exposed as a cross-check. Modes with q = 0 produce
// no inherent sidebands and return 0.
double temperature_systematic_beta(const TrapConfig& trap, const LaserProbe& probe,
                                   double ion_mass, double temperature, int mode_index);
double temperature_systematic_beta_exact(const TrapConfig& trap, const LaserProbe& probe,
                                         double ion_mass, double temperature,
                                         int mode_index);

struct EmmBudgetEntry {
    std::string label;
    std::optional<double> amplitude;    // m
    std::optional<double> temperature;  // K
};

struct EmmBudgetRow {
    std::string label;
    double amplitude = 0.0;    // m
    double temperature = 0.0;  // K
};

struct EmmBudget {
    std::vector<EmmBudgetRow> rows;
    double total_amplitude = 0.0;    // m
    double total_temperature = 0.0;  // K
};

// Fills in the missing half of each (amplitude, temperature) pair, sums the
// energies linearly and converts the total back to an amplitude (a quadrature
// sum of the underlying fields).
EmmBudget build_emm_budget(const std::vector<EmmBudgetEntry>& entries, double ion_mass,
                           double rf_frequency);

}  // namespace ionbath
