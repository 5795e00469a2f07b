#include "ionbath/emm.hpp"

#include <cmath>
#include <stdexcept>

#include "ionbath/constants.hpp"

namespace ionbath {

namespace {

constexpr double two_pi = 6.283185307179586476925286766559;
constexpr double half_pi = 0.25 * two_pi;
constexpr double beta_max = 1.8;  // first J0 zero sits at 2.405

double bessel_ratio(double x) {
    return std::cyl_bessel_j(1, x) / std::cyl_bessel_j(0, x);
}

bool half_integer(double m) { return std::abs(2.0 * m - std::round(2.0 * m)) < 1e-9; }

}  // namespace

double LaserProbe::wavenumber() const { return two_pi / wavelength; }

Vec3 LaserProbe::k_vector() const { return wavenumber() * direction; }

void LaserProbe::validate() const {
    if (!(wavelength > 0.0))
        throw std::invalid_argument("LaserProbe: wavelength must be positive");
    if (std::abs(norm(direction) - 1.0) > 1e-12)
        throw std::invalid_argument("LaserProbe: direction must be a unit vector");
}

double EmmVector::total_amplitude() const {
    return std::sqrt(norm2(in_phase) + norm2(quadrature));
}

ModulationIndex modulation_index(const LaserProbe& probe, const EmmVector& emm) {
    probe.validate();
    Vec3 k = probe.k_vector();
    double kp = dot(k, emm.in_phase);
    double kq = dot(k, emm.quadrature);
    ModulationIndex out;
    out.beta = std::hypot(kp, kq);
    out.delta = std::atan2(kq, kp) - half_pi;
    return out;
}

double coupling_ratio_from_beta(double beta) {
    if (!(beta >= 0.0) || beta >= beta_max)
        throw std::invalid_argument("coupling_ratio_from_beta: need 0 <= beta < 1.8");
    return bessel_ratio(beta);
}

double coupling_ratio_small_beta(double beta) { return 0.5 * beta; }

double beta_from_coupling_ratio(double ratio) {
    if (!(ratio >= 0.0))
        throw std::invalid_argument("beta_from_coupling_ratio: ratio must be >= 0");
    if (ratio == 0.0) return 0.0;
    double hi = beta_max;
    if (ratio > bessel_ratio(hi))
        throw std::invalid_argument("beta_from_coupling_ratio: ratio beyond the monotone branch");
    double lo = 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        double mid = 0.5 * (lo + hi);
        (bessel_ratio(mid) < ratio ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double rf_field_from_amplitude(double u_emm, double ion_mass, double rf_frequency) {
    if (u_emm < 0.0)
        throw std::invalid_argument("rf_field_from_amplitude: negative amplitude");
    return ion_mass * rf_frequency * rf_frequency * u_emm / constants::elementary_charge;
}

double emm_temperature_from_amplitude(double u_emm, double ion_mass, double rf_frequency) {
    double v = u_emm * rf_frequency;
    return 0.25 * ion_mass * v * v / constants::k_boltzmann;
}

double emm_amplitude_from_temperature(double temperature, double ion_mass,
                                      double rf_frequency) {
    if (temperature < 0.0)
        throw std::invalid_argument("emm_amplitude_from_temperature: negative temperature");
    return 2.0 * std::sqrt(constants::k_boltzmann * temperature / ion_mass) / rf_frequency;
}

double zeeman_susceptibility(double m_s, double m_d, double g_s, double g_d) {
    return m_d * g_d - m_s * g_s;
}

void ZeemanTransition::validate() const {
    if (std::abs(std::abs(m_s) - 0.5) > 1e-9)
        throw std::invalid_argument("ZeemanTransition: |m_s| must be 1/2");
    if (!half_integer(m_d) || std::abs(m_d) > 2.5 + 1e-9)
        throw std::invalid_argument("ZeemanTransition: |m_d| must be a half-integer <= 5/2");
}

RfZeemanResult rf_zeeman_extrapolate(const std::vector<ZeemanMeasurement>& measurements,
                                     double response_m_per_volt) {
    if (measurements.size() < 2)
        throw std::invalid_argument("rf_zeeman_extrapolate: need >= 2 transitions");
    std::vector<double> x, y, w;
    for (const auto& m : measurements) {
        x.push_back(m.susceptibility);
        y.push_back(m.voltage);
        w.push_back(m.sigma > 0.0 ? 1.0 / (m.sigma * m.sigma) : 1.0);
    }
    LineFit fit = weighted_line_fit(x, y, w);
    RfZeemanResult out;
    out.compensation = fit.intercept;
    out.compensation_sigma = fit.intercept_sigma;
    out.slope = fit.slope;
    out.slope_sigma = fit.slope_sigma;
    out.equivalent_amplitude = std::abs(fit.slope) * response_m_per_volt;
    return out;
}

LineFit emm_response_slope(const std::vector<ResponseMeasurement>& measurements,
                           bool fit_floor) {
    if (measurements.size() < 2)
        throw std::invalid_argument("emm_response_slope: need >= 2 points");
    std::vector<double> x, y, w;
    for (const auto& m : measurements) {
        x.push_back(fit_floor ? std::abs(m.delta_voltage) : m.delta_voltage);
        y.push_back(m.amplitude);
        w.push_back(m.sigma > 0.0 ? 1.0 / (m.sigma * m.sigma) : 1.0);
    }
    return weighted_line_fit(x, y, w);
}

namespace {

struct ModeGeometry {
    double q;  // |q_j|
    double w;  // rad/s
    double k;  // probe k projected on the mode axis, 1/m
};

ModeGeometry mode_geometry(const TrapConfig& trap, const LaserProbe& probe,
                           double temperature, int mode_index) {
    probe.validate();
    if (mode_index < 0 || mode_index > 2)
        throw std::out_of_range("temperature_systematic_beta: mode_index must be 0..2");
    if (temperature < 0.0)
        throw std::invalid_argument("temperature_systematic_beta: negative temperature");
    ModeGeometry g;
    g.q = std::abs(trap.q[mode_index]);
    g.w = secular_frequencies(trap)[mode_index];
    g.k = probe.wavenumber() * std::abs(probe.direction[mode_index]);
    return g;
}

}  // namespace

double temperature_systematic_beta(const TrapConfig& trap, const LaserProbe& probe,
                                   double ion_mass, double temperature, int mode_index) {
    ModeGeometry g = mode_geometry(trap, probe, temperature, mode_index);
    if (g.q == 0.0) return 0.0;
    double eta2 = g.k * g.k * constants::hbar / (2.0 * ion_mass * g.w);
    return g.q * eta2 * constants::k_boltzmann * temperature / (constants::hbar * g.w);
}

double temperature_systematic_beta_exact(const TrapConfig& trap, const LaserProbe& probe,
                                         double ion_mass, double temperature,
                                         int mode_index) {
    ModeGeometry g = mode_geometry(trap, probe, temperature, mode_index);
    if (g.q == 0.0) return 0.0;
    // kB T = m (u w)^2 / 2 fixes the harmonic amplitude; the coupling is the
    // product of the secular sideband pair and the micromotion sideband pair.
    double u = std::sqrt(2.0 * constants::k_boltzmann * temperature / ion_mass) / g.w;
    double x = g.k * u;
    return 4.0 * bessel_ratio(x) * bessel_ratio(0.25 * x * g.q);
}

EmmBudget build_emm_budget(const std::vector<EmmBudgetEntry>& entries, double ion_mass,
                           double rf_frequency) {
    if (entries.empty()) throw std::invalid_argument("build_emm_budget: no entries");
    EmmBudget out;
    for (const auto& e : entries) {
        EmmBudgetRow row;
        row.label = e.label;
        if (e.amplitude) {
            row.amplitude = *e.amplitude;
            row.temperature =
                e.temperature
                    ? *e.temperature
                    : emm_temperature_from_amplitude(row.amplitude, ion_mass, rf_frequency);
        } else if (e.temperature) {
            row.temperature = *e.temperature;
            row.amplitude =
                emm_amplitude_from_temperature(row.temperature, ion_mass, rf_frequency);
        } else {
            throw std::invalid_argument("build_emm_budget: entry \"" + e.label +
                                        "\" needs an amplitude or a temperature");
        }
        out.total_temperature += row.temperature;
        out.rows.push_back(std::move(row));
    }
    out.total_amplitude =
        emm_amplitude_from_temperature(out.total_temperature, ion_mass, rf_frequency);
    return out;
}

}  // namespace ionbath
