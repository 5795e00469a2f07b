#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ionbath/energy_stats.hpp"
#include "ionbath/rng.hpp"
#include "ionbath/trap.hpp"
#include "ionbath/vec.hpp"

namespace ionbath {

// Ultracold atom bath. cloud_sigma absent means a homogeneous cloud; a finite
// cloud is a Gaussian density profile n(x) = n_peak exp(-sum (x-c)^2/2s^2).
struct BathConfig {
    double temperature = 0.0;       // K
    double density = 0.0;           // peak density, m^-3
    std::optional<Vec3> cloud_sigma;
    Vec3 cloud_center{0.0, 0.0, 0.0};

    void validate() const;
};

// Per-mode initial ion energy. delta splits a total energy equally between
// the three modes; maxwell_boltzmann draws each mode's total energy from an
// exponential with mean k_B T; ground assigns hbar w_j / 2.
struct InitialEnergy {
    enum class Kind { delta, maxwell_boltzmann, ground };
    Kind kind = Kind::ground;
    double value = 0.0;  // J (delta total) or K (maxwell_boltzmann)

    static InitialEnergy delta(double total_energy_j) {
        return {Kind::delta, total_energy_j};
    }
    static InitialEnergy maxwell_boltzmann(double temperature_k) {
        return {Kind::maxwell_boltzmann, temperature_k};
    }
    static InitialEnergy ground() { return {Kind::ground, 0.0}; }
};

enum class RecordMode { final_energy, full_trace };

struct McRunConfig {
    std::int64_t n_realizations = 0;
    int collisions_per_realization = 500;
    double mean_collision_interval = 0.0;  // s, at peak density
    InitialEnergy initial = InitialEnergy::ground();
    std::uint64_t master_seed = 0;
    RecordMode record_mode = RecordMode::final_energy;
    bool add_emm_energy = false;  // diagnostic: add the constant EMM kinetic term

    void validate() const;
};

// Draws per-mode secular amplitudes from the initial energy distribution,
// u_j = sqrt(2 E_j / m w_j^2), with phases uniform on [0, 2pi).
SecularState sample_initial_state(const InitialEnergy& dist, const TrapConfig& trap,
                                  const SpeciesPair& pair, Rng& rng);

// Exponential waiting time with the given mean.
double sample_collision_time(double mean_interval, Rng& rng);

// Thinning step for the inhomogeneous collision rate: a candidate drawn at
// the peak rate is kept with probability n(position)/n_peak.
bool accept_collision_by_density(const Vec3& position, const BathConfig& bath, Rng& rng);

// Instantaneous elastic collision at time t_c. The ion's full velocity takes
// an isotropic kick v' = v_cm + beta R (v - v_atom) with beta =
// m_a/(m_a + m_i); the position is unchanged. The micromotion part of v' is
// stripped at the collision rf phase and the secular amplitude and phase are
// re-extracted from the unchanged secular coordinate and the new secular
// velocity. rotation must be orthogonal with determinant +1 (1e-12).
SecularState hard_sphere_collision(const SecularState& state, const TrapConfig& trap,
                                   const SpeciesPair& pair, double t_c,
                                   const Vec3& atom_velocity, const Mat3& rotation);

// Full Monte Carlo: for each realization, alternate exponential waiting times
// and collisions with Maxwell-Boltzmann atoms for collisions_per_realization
// accepted collisions, recording the ion's secular energy. Realization i uses
// an RNG stream derived from (master_seed, i), so results are byte-identical
// for any worker count. Realizations whose energy exceeds the runaway guard
// (1e6 x the dominant energy scale) are flagged and stop evolving.
//
// record_mode final_energy: one record per realization.
// record_mode full_trace: collisions_per_realization records per realization,
// realization-major, one per accepted collision.
std::vector<EnergyRecord> run_hard_sphere_mc(const TrapConfig& trap, const SpeciesPair& pair,
                                             const BathConfig& bath, const McRunConfig& run,
                                             int workers = 1);

// Langevin rate coefficient k_L = 2 pi sqrt(C4 / mu), m^3/s; collision rate
// is n_a k_L independent of collision energy.
double langevin_rate_coefficient(const SpeciesPair& pair);

// Critical impact parameter b_c = (2 C4 / E)^(1/4) below which a classical
// trajectory in the -C4/2r^4 potential spirals to the origin.
double langevin_critical_impact_parameter(double c4, double collision_energy);

}  // namespace ionbath
