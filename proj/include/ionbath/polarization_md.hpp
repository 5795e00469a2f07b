#pragma once

// Explicit two-body molecular dynamics: one trapped ion in the time-dependent
// rf potential plus one neutral atom, coupled by the -C4/(2 r^4) polarization
// potential. Atoms are injected one at a time through a sphere around the
// trap center and integrated (RK4) while they interact; between visits the
// ion advances analytically on its first-order secular trajectory.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ionbath/collision_mc.hpp"
#include "ionbath/energy_stats.hpp"
#include "ionbath/rng.hpp"
#include "ionbath/trap.hpp"
#include "ionbath/vec.hpp"

namespace ionbath {

struct PairState {
    Vec3 ion_position{};
    Vec3 ion_velocity{};
    Vec3 atom_position{};
    Vec3 atom_velocity{};
    double time = 0.0;  // rf phase is rf_frequency * time
};

struct PairDerivatives {
    Vec3 ion_velocity{};
    Vec3 ion_acceleration{};
    Vec3 atom_velocity{};
    Vec3 atom_acceleration{};
};

struct IntegrationError : std::runtime_error {
    PairState state;
    explicit IntegrationError(const PairState& s)
        : std::runtime_error("polarization_md: non-finite state during integration"), state(s) {}
};

// How the relative velocity is redirected when the pair reaches the contact
// radius: isotropic resampling in the CM frame (Langevin-style, default) or a
// specular hard-sphere bounce about the line of centers.
enum class ContactModel { isotropic, specular };

enum class StepPolicy { fixed, distance_scaled };

struct MdConfig {
    double sphere_radius = 1.2e-6;   // m, atom injection sphere
    double contact_radius = 5e-9;    // m, hard-core exchange distance
    double langevin_radius_factor = 10.0;  // r < factor*contact counts as a Langevin collision

    int steps_per_rf = 200;          // base dt = min(rf period, free fall at shrink_radius)/steps
    StepPolicy step_policy = StepPolicy::distance_scaled;
    double shrink_radius = 100e-9;   // m, below this dt shrinks by (r/shrink)^2
    double min_step_factor = 1e-4;   // floor of the shrink factor

    double mean_langevin_collisions = 300.0;
    bool fixed_collision_target = false;  // false: per-realization Poisson draw

    std::int64_t n_realizations = 0;
    std::uint64_t master_seed = 0;
    InitialEnergy initial = InitialEnergy::maxwell_boltzmann(0.5e-3);
    Vec3 rf_field{};                 // V/m, optional homogeneous in-phase drive on the ion
    ContactModel contact_model = ContactModel::isotropic;

    // Event gating: while the ballistic atom path stays farther from the
    // secular ion path than a trigger radius (a few critical impact
    // parameters plus micromotion and scan slack), the interaction is skipped
    // and both bodies advance analytically. Disable to integrate every visit
    // end to end.
    bool event_gating = true;
    double trigger_bc_factor = 3.0;
    double trigger_exit_factor = 1.25;
    double scan_slack = 50e-9;       // m

    std::int64_t max_steps_per_visit = 10000000;
    std::int64_t max_scan_steps_per_visit = 2000000;
    std::int64_t max_total_visits = 2000000;

    // Long-lived bound complexes can eat unbounded integrator time; a
    // realization that spends more than this across all its visits is cut
    // short and flagged, keeping the energy it had reached.
    std::int64_t max_rk_steps_per_realization = 60000000;
    std::int64_t max_scan_steps_per_realization = 600000000;

    void validate() const;
};

struct MdRecord {
    double total_energy = 0.0;        // J, ion secular energy at the end
    std::int64_t langevin_collisions = 0;
    std::int64_t flagged_visits = 0;  // abandoned visits (step budget, scan stall)
    bool flagged = false;             // realization did not reach its collision target
};

// d/dt of PairState. r = ion - atom; the polarization force is
// -2 C4 rhat / r^5 on the ion and the opposite on the atom. The optional
// homogeneous rf field adds e E cos(rf t) / m_i to the ion only.
// Throws std::domain_error when r < 1e-12 m.
PairDerivatives eom_derivatives(const PairState& state, const TrapConfig& trap,
                                const SpeciesPair& pair, const Vec3& rf_field = Vec3{});

// Classic RK4 with the rf phase evaluated at the stage times.
// Throws IntegrationError if the result is non-finite.
PairState rk4_step(const PairState& state, const TrapConfig& trap, const SpeciesPair& pair,
                   double dt, const Vec3& rf_field = Vec3{});

// Timestep for the current pair separation r.
double md_timestep(double r, const TrapConfig& trap, const SpeciesPair& pair,
                   const MdConfig& md);

struct AtomEntry {
    Vec3 position{};
    Vec3 velocity{};
};

// Uniform point on the injection sphere; inward normal speed Rayleigh with
// scale sqrt(kT/m_a), tangential components Gaussian with the same scale
// (flux-weighted Maxwell-Boltzmann). Throws for non-positive temperature.
AtomEntry sample_atom_entry(double sphere_radius, const BathConfig& bath,
                            const SpeciesPair& pair, Rng& rng);

// Atom arrival rate through the sphere: n pi r0^2 <v> with
// <v> = sqrt(8 kT / (pi m_a)).
double atom_entry_rate(double sphere_radius, const BathConfig& bath, const SpeciesPair& pair);

// Elastic hard-sphere exchange in the CM frame applied to both partners:
// w' = R w, v_ion' = v_cm + (m_a/M) w', v_atom' = v_cm - (m_i/M) w'.
// Positions unchanged. The rotation must be proper orthogonal.
PairState contact_collision(const PairState& state, const SpeciesPair& pair,
                            const Mat3& rotation);

std::vector<MdRecord> run_polarization_md(const TrapConfig& trap, const SpeciesPair& pair,
                                          const BathConfig& bath, const MdConfig& md,
                                          int workers = 1);

std::vector<EnergyRecord> to_energy_records(std::span<const MdRecord> records);

}  // namespace ionbath
