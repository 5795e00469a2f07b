#include "ionbath/trap.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ionbath {

void TrapConfig::validate() const {
    if (!(rf_frequency > 0.0))
        throw std::invalid_argument("trap: rf frequency must be positive");
    for (int j = 0; j < 3; ++j) {
        if (std::abs(a[j]) > 0.3)
            throw std::invalid_argument("trap: |a| > 0.3 on axis " + std::to_string(j) +
                                        ", outside first-order validity");
        if (std::abs(q[j]) > 0.9)
            throw std::invalid_argument("trap: |q| > 0.9 on axis " + std::to_string(j) +
                                        ", outside first-order validity");
        if (a[j] + 0.5 * q[j] * q[j] < 0.0)
            throw std::invalid_argument("trap: a + q^2/2 < 0 on axis " + std::to_string(j) +
                                        ", unstable secular motion");
    }
}

void SpeciesPair::validate() const {
    if (!(ion_mass > 0.0) || !(atom_mass > 0.0))
        throw std::invalid_argument("species: masses must be positive");
    if (!(c4 >= 0.0))
        throw std::invalid_argument("species: C4 must be non-negative");
}

std::array<double, 3> secular_frequencies(const TrapConfig& trap) {
    std::array<double, 3> w{};
    for (int j = 0; j < 3; ++j) {
        double radicand = trap.a[j] + 0.5 * trap.q[j] * trap.q[j];
        if (radicand < 0.0)
            throw std::invalid_argument("secular_frequencies: unstable axis " + std::to_string(j));
        w[j] = 0.5 * trap.rf_frequency * std::sqrt(radicand);
    }
    return w;
}

TrapConfig mathieu_from_frequencies(const std::array<double, 3>& omega,
                                    double rf_frequency, bool axial_rf_free) {
    if (!(rf_frequency > 0.0))
        throw std::invalid_argument("mathieu_from_frequencies: rf frequency must be positive");
    for (double w : omega)
        if (w < 0.0)
            throw std::invalid_argument("mathieu_from_frequencies: negative secular frequency");

    TrapConfig trap;
    trap.rf_frequency = rf_frequency;
    auto beta2 = [&](int j) {  // (2 w_j / Omega)^2 = a_j + q_j^2/2
        double b = 2.0 * omega[j] / rf_frequency;
        return b * b;
    };

    if (axial_rf_free) {
        trap.q[2] = 0.0;
        trap.a[2] = beta2(2);
        double q2 = beta2(0) + beta2(1) + trap.a[2];
        double qr = std::sqrt(q2);
        trap.q[0] = -qr;
        trap.q[1] = qr;
        trap.a[0] = beta2(0) - 0.5 * q2;
        trap.a[1] = beta2(1) - 0.5 * q2;
    } else {
        for (int j = 0; j < 3; ++j) {
            trap.a[j] = 0.0;
            trap.q[j] = 2.0 * std::sqrt(2.0) * omega[j] / rf_frequency;
        }
    }
    trap.validate();
    return trap;
}

TrajectorySample trajectory_at(const TrapConfig& trap, const SecularState& state, double t) {
    const std::array<double, 3> w = secular_frequencies(trap);
    const double omega_rf = trap.rf_frequency;
    const double cos_rf = std::cos(omega_rf * t);
    const double sin_rf = std::sin(omega_rf * t);

    TrajectorySample out;
    for (int j = 0; j < 3; ++j) {
        double u = state.amplitude[j];
        double th = w[j] * t + state.phase[j];
        double sec_pos = u * std::cos(th);
        double qh = 0.5 * trap.q[j];
        double udc = trap.emm_dc_displacement[j];
        double uperp = trap.emm_quadrature_amplitude[j];

        out.position[j] = (udc + sec_pos) * (1.0 + qh * cos_rf) + uperp * sin_rf;
        out.velocity[j] = -u * w[j] * std::sin(th)
                          - (sec_pos + udc) * qh * omega_rf * sin_rf
                          + uperp * omega_rf * cos_rf;
    }
    return out;
}

SecularState extract_secular_state(const TrapConfig& trap, const Vec3& position,
                                   const Vec3& velocity, double t) {
    const std::array<double, 3> w = secular_frequencies(trap);
    const double omega_rf = trap.rf_frequency;
    const double cos_rf = std::cos(omega_rf * t);
    const double sin_rf = std::sin(omega_rf * t);
    constexpr double two_pi = 6.283185307179586476925286766559;

    SecularState out;
    for (int j = 0; j < 3; ++j) {
        if (!(w[j] > 0.0))
            throw std::invalid_argument("extract_secular_state: zero secular frequency on axis " +
                                        std::to_string(j));
        double qh = 0.5 * trap.q[j];
        double udc = trap.emm_dc_displacement[j];
        double uperp = trap.emm_quadrature_amplitude[j];

        double sec_pos = (position[j] - uperp * sin_rf) / (1.0 + qh * cos_rf) - udc;
        double sec_vel = velocity[j] + (sec_pos + udc) * qh * omega_rf * sin_rf
                         - uperp * omega_rf * cos_rf;

        out.amplitude[j] = std::hypot(sec_pos, sec_vel / w[j]);
        double th = std::atan2(-sec_vel / w[j], sec_pos);
        out.phase[j] = std::fmod(th - w[j] * t, two_pi);
        if (out.phase[j] < 0.0) out.phase[j] += two_pi;
    }
    return out;
}

double emm_amplitude(const TrapConfig& trap) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) {
        double in_phase = trap.emm_dc_displacement[j] * 0.5 * trap.q[j];
        s += in_phase * in_phase;
        s += trap.emm_quadrature_amplitude[j] * trap.emm_quadrature_amplitude[j];
    }
    return std::sqrt(s);
}

double secular_energy(const TrapConfig& trap, double ion_mass, const SecularState& state) {
    const std::array<double, 3> w = secular_frequencies(trap);
    double e = 0.0;
    for (int j = 0; j < 3; ++j) {
        double uw = state.amplitude[j] * w[j];
        e += 0.5 * ion_mass * uw * uw;
    }
    return e;
}

double emm_energy(const TrapConfig& trap, double ion_mass) {
    double v_peak = emm_amplitude(trap) * trap.rf_frequency;
    return 0.25 * ion_mass * v_peak * v_peak;
}

double cetina_energy_scale(const SpeciesPair& pair, double omega, double q) {
    if (!(omega > 0.0) || q == 0.0)
        throw std::invalid_argument("cetina_energy_scale: needs omega > 0 and q != 0");
    double mu = pair.reduced_mass();
    double mi = pair.ion_mass;
    double num = std::pow(mu, 5) * std::pow(omega, 4) * pair.c4;
    double den = mi * mi * mi * q * q;
    return 2.0 * std::cbrt(num / den);
}

}  // namespace ionbath
