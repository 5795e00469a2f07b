#include "ionbath/collision_mc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ionbath/constants.hpp"
#include "ionbath/parallel.hpp"

namespace ionbath {

namespace {

constexpr double two_pi = 2.0 * M_PI;

double wrap2pi(double x) {
    double w = x - two_pi * std::floor(x / two_pi);
    if (w >= two_pi) w -= two_pi;
    if (w < 0.0) w += two_pi;
    return w;
}

// Evolving ion state in current-phase form: psi_j = w_j t + phi_j and
// theta = Omega t, advanced modulo 2pi so long runs never lose phase
// resolution to a growing absolute time.
struct PhaseState {
    std::array<double, 3> u;
    std::array<double, 3> psi;
    double theta = 0.0;
};

Vec3 phase_position(const TrapConfig& trap, const PhaseState& ps) {
    const double cos_rf = std::cos(ps.theta), sin_rf = std::sin(ps.theta);
    Vec3 x;
    for (int j = 0; j < 3; ++j) {
        double sec = ps.u[j] * std::cos(ps.psi[j]);
        double qh = 0.5 * trap.q[j];
        x[j] = (trap.emm_dc_displacement[j] + sec) * (1.0 + qh * cos_rf) +
               trap.emm_quadrature_amplitude[j] * sin_rf;
    }
    return x;
}

// Elastic kick + micromotion stripping; updates u and psi in place.
void collide(const TrapConfig& trap, const std::array<double, 3>& w, double beta,
             PhaseState& ps, const Vec3& atom_velocity, const Mat3& rotation) {
    const double omega_rf = trap.rf_frequency;
    const double cos_rf = std::cos(ps.theta), sin_rf = std::sin(ps.theta);

    std::array<double, 3> sec{}, mm{};  // secular coordinate, micromotion velocity
    Vec3 v;
    for (int j = 0; j < 3; ++j) {
        sec[j] = ps.u[j] * std::cos(ps.psi[j]);
        mm[j] = -(sec[j] + trap.emm_dc_displacement[j]) * 0.5 * trap.q[j] * omega_rf * sin_rf +
                trap.emm_quadrature_amplitude[j] * omega_rf * cos_rf;
        v[j] = -ps.u[j] * w[j] * std::sin(ps.psi[j]) + mm[j];
    }

    Vec3 rel = v - atom_velocity;
    Vec3 v_new = atom_velocity + (1.0 - beta) * rel + beta * (rotation * rel);

    for (int j = 0; j < 3; ++j) {
        double v_sec = v_new[j] - mm[j];
        double s = -v_sec / w[j];
        ps.u[j] = std::hypot(sec[j], s);
        ps.psi[j] = wrap2pi(std::atan2(s, sec[j]));
    }
}

double guard_energy(const TrapConfig& trap, const SpeciesPair& pair, const BathConfig& bath) {
    double scale = std::max({emm_energy(trap, pair.ion_mass),
                             constants::k_boltzmann * bath.temperature,
                             constants::k_boltzmann * 1e-6});
    return 1e6 * scale;
}

}  // namespace

void BathConfig::validate() const {
    if (temperature < 0.0) throw std::invalid_argument("bath: negative temperature");
    if (!(density > 0.0)) throw std::invalid_argument("bath: density must be positive");
    if (cloud_sigma)
        for (int j = 0; j < 3; ++j)
            if (!((*cloud_sigma)[j] > 0.0))
                throw std::invalid_argument("bath: cloud sigma must be positive per axis");
}

void McRunConfig::validate() const {
    if (n_realizations <= 0) throw std::invalid_argument("mc run: n_realizations must be positive");
    if (collisions_per_realization <= 0)
        throw std::invalid_argument("mc run: collisions_per_realization must be positive");
    if (!(mean_collision_interval > 0.0))
        throw std::invalid_argument("mc run: mean_collision_interval must be positive");
    if (initial.value < 0.0)
        throw std::invalid_argument("mc run: initial energy parameter must be non-negative");
}

SecularState sample_initial_state(const InitialEnergy& dist, const TrapConfig& trap,
                                  const SpeciesPair& pair, Rng& rng) {
    const std::array<double, 3> w = secular_frequencies(trap);
    std::array<double, 3> energy{};
    switch (dist.kind) {
        case InitialEnergy::Kind::delta:
            energy = {dist.value / 3.0, dist.value / 3.0, dist.value / 3.0};
            break;
        case InitialEnergy::Kind::maxwell_boltzmann: {
            double kt = constants::k_boltzmann * dist.value;
            for (int j = 0; j < 3; ++j) energy[j] = kt > 0.0 ? rng.exponential(kt) : 0.0;
            break;
        }
        case InitialEnergy::Kind::ground:
            for (int j = 0; j < 3; ++j) energy[j] = 0.5 * constants::hbar * w[j];
            break;
    }

    SecularState state;
    for (int j = 0; j < 3; ++j) {
        if (w[j] > 0.0) {
            state.amplitude[j] = std::sqrt(2.0 * energy[j] / (pair.ion_mass * w[j] * w[j]));
        } else if (energy[j] > 0.0) {
            throw std::invalid_argument("sample_initial_state: finite energy on a zero-frequency axis");
        }
        state.phase[j] = rng.uniform(0.0, two_pi);
    }
    return state;
}

double sample_collision_time(double mean_interval, Rng& rng) {
    if (!(mean_interval > 0.0))
        throw std::invalid_argument("sample_collision_time: mean interval must be positive");
    return rng.exponential(mean_interval);
}

bool accept_collision_by_density(const Vec3& position, const BathConfig& bath, Rng& rng) {
    if (!bath.cloud_sigma) return true;
    Vec3 d = position - bath.cloud_center;
    double arg = 0.0;
    for (int j = 0; j < 3; ++j) {
        double r = d[j] / (*bath.cloud_sigma)[j];
        arg += r * r;
    }
    return rng.uniform() < std::exp(-0.5 * arg);
}

SecularState hard_sphere_collision(const SecularState& state, const TrapConfig& trap,
                                   const SpeciesPair& pair, double t_c,
                                   const Vec3& atom_velocity, const Mat3& rotation) {
    if (orthogonality_defect(rotation) > 1e-12 || std::abs(det(rotation) - 1.0) > 1e-12)
        throw std::invalid_argument("hard_sphere_collision: rotation is not proper orthogonal");
    const std::array<double, 3> w = secular_frequencies(trap);
    for (int j = 0; j < 3; ++j)
        if (!(w[j] > 0.0))
            throw std::invalid_argument("hard_sphere_collision: zero-frequency axis");

    PhaseState ps;
    ps.u = state.amplitude;
    for (int j = 0; j < 3; ++j) ps.psi[j] = wrap2pi(w[j] * t_c + state.phase[j]);
    ps.theta = wrap2pi(trap.rf_frequency * t_c);

    double beta = pair.atom_mass / (pair.atom_mass + pair.ion_mass);
    collide(trap, w, beta, ps, atom_velocity, rotation);

    SecularState out;
    out.amplitude = ps.u;
    for (int j = 0; j < 3; ++j) out.phase[j] = wrap2pi(ps.psi[j] - w[j] * t_c);
    return out;
}

std::vector<EnergyRecord> run_hard_sphere_mc(const TrapConfig& trap, const SpeciesPair& pair,
                                             const BathConfig& bath, const McRunConfig& run,
                                             int workers) {
    trap.validate();
    pair.validate();
    bath.validate();
    run.validate();
    const std::array<double, 3> w = secular_frequencies(trap);
    for (int j = 0; j < 3; ++j)
        if (!(w[j] > 0.0))
            throw std::invalid_argument("run_hard_sphere_mc: every axis needs a finite "
                                        "secular frequency");

    const double guard = guard_energy(trap, pair, bath);
    const double beta = pair.atom_mass / (pair.atom_mass + pair.ion_mass);
    const double sigma_v = bath.temperature > 0.0
        ? std::sqrt(constants::k_boltzmann * bath.temperature / pair.atom_mass)
        : 0.0;
    const double emm_add = run.add_emm_energy ? emm_energy(trap, pair.ion_mass) : 0.0;
    const double half_mass = 0.5 * pair.ion_mass;
    const int cpr = run.collisions_per_realization;
    const bool trace = run.record_mode == RecordMode::full_trace;

    std::vector<EnergyRecord> records(
        trace ? run.n_realizations * static_cast<std::int64_t>(cpr) : run.n_realizations);

    auto mode_energy = [&](const PhaseState& ps) {
        double e = emm_add;
        for (int j = 0; j < 3; ++j) {
            double uw = ps.u[j] * w[j];
            e += half_mass * uw * uw;
        }
        return e;
    };

    parallel_for_indexed(run.n_realizations, workers, [&](std::int64_t i) {
        Rng rng = Rng::for_realization(run.master_seed, static_cast<std::uint64_t>(i));
        SecularState init = sample_initial_state(run.initial, trap, pair, rng);
        PhaseState ps{init.amplitude, init.phase, 0.0};

        bool flagged = false;
        double energy = mode_energy(ps);
        int accepted = 0;
        while (accepted < cpr) {
            double dt = rng.exponential(run.mean_collision_interval);
            for (int j = 0; j < 3; ++j) ps.psi[j] = wrap2pi(ps.psi[j] + w[j] * dt);
            ps.theta = wrap2pi(ps.theta + trap.rf_frequency * dt);

            if (!accept_collision_by_density(phase_position(trap, ps), bath, rng)) continue;

            Vec3 v_atom{};
            if (sigma_v > 0.0)
                v_atom = {sigma_v * rng.normal(), sigma_v * rng.normal(),
                          sigma_v * rng.normal()};
            Mat3 rot = rng.random_rotation();
            collide(trap, w, beta, ps, v_atom, rot);
            ++accepted;
            energy = mode_energy(ps);

            if (!(energy < guard) || !std::isfinite(energy)) {
                flagged = true;
                if (trace)
                    for (int k = accepted - 1; k < cpr; ++k)
                        records[i * cpr + k] = {energy, accepted, true};
                break;
            }
            if (trace) records[i * cpr + accepted - 1] = {energy, accepted, false};
        }
        if (!trace) records[i] = {energy, accepted, flagged};
    });
    return records;
}

double langevin_rate_coefficient(const SpeciesPair& pair) {
    return two_pi * std::sqrt(pair.c4 / pair.reduced_mass());
}

double langevin_critical_impact_parameter(double c4, double collision_energy) {
    if (!(c4 > 0.0) || !(collision_energy > 0.0))
        throw std::invalid_argument("langevin_critical_impact_parameter: needs C4 > 0, E > 0");
    return std::pow(2.0 * c4 / collision_energy, 0.25);
}

}  // namespace ionbath
