#include "ionbath/polarization_md.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ionbath/constants.hpp"
#include "ionbath/parallel.hpp"

namespace ionbath {

namespace {

constexpr double two_pi = 6.283185307179586476925286766559;
constexpr double pi = 0.5 * two_pi;

double wrap2pi(double x) {
    double y = std::fmod(x, two_pi);
    return y < 0.0 ? y + two_pi : y;
}

bool all_finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// Free-ion analytic state between interactions.
struct IonPhase {
    std::array<double, 3> u{};
    std::array<double, 3> psi{};
    double theta = 0.0;
};

struct Ctx {
    const TrapConfig& trap;
    const SpeciesPair& pair;
    const MdConfig& md;
    std::array<double, 3> w{};
    std::array<double, 3> drive_u{};  // e E_j / (m_i Omega^2), driven response to rf_field
    double mu = 0.0;
    double langevin_radius = 0.0;
    double scan_dt_cap = 0.0;  // shortest secular period / 8
};

void advance_phases(IonPhase& ion, const std::array<double, 3>& w, double omega_rf, double dt) {
    for (int j = 0; j < 3; ++j) ion.psi[j] = wrap2pi(ion.psi[j] + w[j] * dt);
    ion.theta = wrap2pi(ion.theta + omega_rf * dt);
}

void synthesize_ion(const Ctx& c, const IonPhase& ion, Vec3* x, Vec3* v) {
    double cth = std::cos(ion.theta);
    double sth = std::sin(ion.theta);
    double omega_rf = c.trap.rf_frequency;
    for (int j = 0; j < 3; ++j) {
        double qh = 0.5 * c.trap.q[j];
        double sec = ion.u[j] * std::cos(ion.psi[j]);
        (*x)[j] = sec * (1.0 + qh * cth) - c.drive_u[j] * cth;
        (*v)[j] = -ion.u[j] * c.w[j] * std::sin(ion.psi[j]) - sec * qh * omega_rf * sth
                  + c.drive_u[j] * omega_rf * sth;
    }
}

IonPhase extract_ion(const Ctx& c, const Vec3& x, const Vec3& v, double theta) {
    IonPhase out;
    out.theta = wrap2pi(theta);
    double cth = std::cos(out.theta);
    double sth = std::sin(out.theta);
    double omega_rf = c.trap.rf_frequency;
    for (int j = 0; j < 3; ++j) {
        double qh = 0.5 * c.trap.q[j];
        double sec = (x[j] + c.drive_u[j] * cth) / (1.0 + qh * cth);
        double sec_vel = v[j] + sec * qh * omega_rf * sth - c.drive_u[j] * omega_rf * sth;
        out.u[j] = std::hypot(sec, sec_vel / c.w[j]);
        out.psi[j] = wrap2pi(std::atan2(-sec_vel / c.w[j], sec));
    }
    return out;
}

double ion_secular_energy(const Ctx& c, const IonPhase& ion) {
    double e = 0.0;
    for (int j = 0; j < 3; ++j) {
        double uw = ion.u[j] * c.w[j];
        e += 0.5 * c.pair.ion_mass * uw * uw;
    }
    return e;
}

// Mean-square ion speed (secular + inherent micromotion + driven motion),
// used for the collision-energy estimate behind the trigger radius.
double ion_mean_square_speed(const Ctx& c, const IonPhase& ion) {
    double s = 0.0;
    double omega_rf = c.trap.rf_frequency;
    for (int j = 0; j < 3; ++j) {
        double uw = ion.u[j] * c.w[j];
        double umm = ion.u[j] * 0.5 * c.trap.q[j] * omega_rf;
        double udr = c.drive_u[j] * omega_rf;
        s += 0.5 * uw * uw + 0.25 * umm * umm + 0.5 * udr * udr;
    }
    return s;
}

// Largest deviation of the full trajectory from the secular path.
double micromotion_slack(const Ctx& c, const IonPhase& ion) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j)
        s = std::max(s, std::abs(0.5 * c.trap.q[j]) * ion.u[j] + std::abs(c.drive_u[j]));
    return s;
}

// CM-frame velocity exchange with an outgoing relative direction.
void exchange_velocities(PairState& ps, const SpeciesPair& pair, const Vec3& direction) {
    double m = pair.ion_mass + pair.atom_mass;
    Vec3 vcm = (1.0 / m) * (pair.ion_mass * ps.ion_velocity + pair.atom_mass * ps.atom_velocity);
    Vec3 w = ps.ion_velocity - ps.atom_velocity;
    Vec3 wp = norm(w) * direction;
    ps.ion_velocity = vcm + (pair.atom_mass / m) * wp;
    ps.atom_velocity = vcm - (pair.ion_mass / m) * wp;
}

struct VisitStats {
    bool langevin = false;
    bool flagged = false;
    bool exhausted = false;  // realization step budget ran out
};

// Remaining per-realization integrator allowance, shared across visits.
struct StepBudget {
    std::int64_t rk = 0;
    std::int64_t scan = 0;
};

// One atom from entry to escape. The ion phase state is updated in place;
// a visit abandoned mid-interaction restores it and reports flagged.
VisitStats run_visit(const Ctx& c, IonPhase& ion, const AtomEntry& entry, Rng& rng,
                     StepBudget& budget) {
    VisitStats out;
    const IonPhase pre_visit = ion;
    Vec3 p = entry.position;
    Vec3 v = entry.velocity;
    std::int64_t rk_steps = 0;
    std::int64_t scan_steps = 0;
    bool armed = true;
    const double r0 = c.md.sphere_radius;
    const double contact = c.md.contact_radius;
    const double omega_rf = c.trap.rf_frequency;

    for (;;) {
        double trigger = 0.0;
        bool triggered = !c.md.event_gating;
        if (c.md.event_gating) {
            double e_est = 0.5 * c.mu * (norm2(v) + ion_mean_square_speed(c, ion));
            double bc = (c.pair.c4 > 0.0 && e_est > 0.0)
                            ? langevin_critical_impact_parameter(c.pair.c4, e_est)
                            : 0.0;
            trigger = std::max(c.md.trigger_bc_factor * bc, c.md.shrink_radius)
                      + micromotion_slack(c, ion) + c.md.scan_slack;

            double reach = std::sqrt(ion.u[0] * ion.u[0] + ion.u[1] * ion.u[1]
                                     + ion.u[2] * ion.u[2]);
            double shell = trigger + reach;
            double shell2 = shell * shell;
            double vsec = 0.0;
            for (int j = 0; j < 3; ++j) vsec += ion.u[j] * c.w[j] * ion.u[j] * c.w[j];
            double closing = norm(v) + std::sqrt(vsec);
            double dt_scan = std::min(c.md.scan_slack / std::max(closing, 1e-30), c.scan_dt_cap);

            for (;;) {
                double p2 = norm2(p);
                if (p2 > shell2) {
                    armed = true;  // |p| - reach > trigger bounds the separation from below
                } else {
                    Vec3 xs;
                    for (int j = 0; j < 3; ++j) xs[j] = ion.u[j] * std::cos(ion.psi[j]);
                    double d = norm(p - xs);
                    if (d >= trigger) {
                        armed = true;
                    } else if (armed) {
                        triggered = true;
                        break;
                    }
                }
                if (p2 > r0 * r0 && dot(p, v) > 0.0) break;  // atom left the sphere
                p += dt_scan * v;
                for (int j = 0; j < 3; ++j) ion.psi[j] += c.w[j] * dt_scan;
                ion.theta += omega_rf * dt_scan;
                if (++scan_steps > c.md.max_scan_steps_per_visit || --budget.scan < 0) {
                    out.flagged = true;  // stalled atom; interaction so far is kept
                    out.exhausted = budget.scan < 0;
                    advance_phases(ion, c.w, omega_rf, 0.0);
                    return out;
                }
            }
            advance_phases(ion, c.w, omega_rf, 0.0);  // re-wrap after unwrapped scan steps
        }
        if (!triggered) break;

        PairState ps;
        synthesize_ion(c, ion, &ps.ion_position, &ps.ion_velocity);
        ps.atom_position = p;
        ps.atom_velocity = v;
        ps.time = ion.theta / omega_rf;
        double r_prev = norm(ps.ion_position - ps.atom_position);
        for (;;) {
            if (++rk_steps > c.md.max_steps_per_visit || --budget.rk < 0) {
                ion = pre_visit;
                return {false, true, budget.rk < 0};
            }
            double dt = md_timestep(r_prev, c.trap, c.pair, c.md);
            try {
                ps = rk4_step(ps, c.trap, c.pair, dt, c.md.rf_field);
            } catch (const IntegrationError&) {
                ion = pre_visit;
                return {false, true, false};
            } catch (const std::domain_error&) {  // drove into the r -> 0 singularity
                ion = pre_visit;
                return {false, true, false};
            }
            Vec3 rel = ps.ion_position - ps.atom_position;
            double r = norm(rel);
            if (r <= c.langevin_radius) out.langevin = true;
            // exchange whenever the pair closes in inside the contact radius, not
            // just on the crossing step: a tangential outgoing draw can otherwise
            // strand the pair inside, where the r^-5 force wrecks the integrator
            if (r <= contact
                && dot(rel, ps.ion_velocity - ps.atom_velocity) < 0.0) {
                Vec3 rhat = (1.0 / r) * rel;
                Vec3 dir;
                if (c.md.contact_model == ContactModel::specular) {
                    Vec3 w = ps.ion_velocity - ps.atom_velocity;
                    Vec3 wr = w - 2.0 * dot(w, rhat) * rhat;
                    double wn = norm(wr);
                    dir = wn > 0.0 ? (1.0 / wn) * wr : rhat;
                } else {
                    dir = rng.isotropic_direction();
                    double along = dot(dir, rhat);
                    if (along < 0.0) dir -= 2.0 * along * rhat;  // outgoing hemisphere
                }
                exchange_velocities(ps, c.pair, dir);
            }
            bool receding = r > r_prev;
            bool window_done = false;
            if (c.md.event_gating) {
                window_done = receding
                              && (r > c.md.trigger_exit_factor * trigger
                                  || (norm2(ps.atom_position) > 4.0 * r0 * r0
                                      && dot(ps.atom_position, ps.atom_velocity) > 0.0));
            } else {
                window_done = receding && norm2(ps.atom_position) > r0 * r0
                              && dot(ps.atom_position, ps.atom_velocity) > 0.0;
            }
            r_prev = r;
            if (window_done) break;
        }
        ion = extract_ion(c, ps.ion_position, ps.ion_velocity, omega_rf * ps.time);
        p = ps.atom_position;
        v = ps.atom_velocity;
        armed = false;
        if (!c.md.event_gating) break;
    }
    return out;
}

}  // namespace

void MdConfig::validate() const {
    if (!(sphere_radius > 0.0))
        throw std::invalid_argument("md: sphere radius must be positive");
    if (!(contact_radius > 0.0) || contact_radius >= sphere_radius)
        throw std::invalid_argument("md: contact radius must be in (0, sphere radius)");
    if (!(langevin_radius_factor >= 1.0)
        || langevin_radius_factor * contact_radius >= sphere_radius)
        throw std::invalid_argument("md: langevin radius must be in [contact, sphere radius)");
    if (steps_per_rf < 10)
        throw std::invalid_argument("md: need at least 10 steps per rf period");
    if (!(shrink_radius > contact_radius))
        throw std::invalid_argument("md: shrink radius must exceed the contact radius");
    if (!(min_step_factor > 0.0) || min_step_factor > 1.0)
        throw std::invalid_argument("md: min step factor must be in (0, 1]");
    if (!(mean_langevin_collisions > 0.0))
        throw std::invalid_argument("md: mean langevin collisions must be positive");
    if (n_realizations <= 0)
        throw std::invalid_argument("md: need at least one realization");
    if (!(trigger_bc_factor >= 1.0))
        throw std::invalid_argument("md: trigger factor must be >= 1");
    if (!(trigger_exit_factor > 1.0))
        throw std::invalid_argument("md: trigger exit factor must exceed 1");
    if (!(scan_slack > 0.0))
        throw std::invalid_argument("md: scan slack must be positive");
    if (max_steps_per_visit <= 0 || max_scan_steps_per_visit <= 0 || max_total_visits <= 0
        || max_rk_steps_per_realization <= 0 || max_scan_steps_per_realization <= 0)
        throw std::invalid_argument("md: step and visit budgets must be positive");
}

PairDerivatives eom_derivatives(const PairState& state, const TrapConfig& trap,
                                const SpeciesPair& pair, const Vec3& rf_field) {
    Vec3 r = state.ion_position - state.atom_position;
    double r2 = norm2(r);
    if (r2 < 1e-24)
        throw std::domain_error("eom_derivatives: pair separation below 1e-12 m");
    double inv_r6 = 1.0 / (r2 * r2 * r2);
    Vec3 g = (2.0 * pair.c4 * inv_r6) * r;  // attraction along -r on the ion

    double omega_rf = trap.rf_frequency;
    double cos_rf = std::cos(omega_rf * state.time);
    double quarter = 0.25 * omega_rf * omega_rf;

    PairDerivatives d;
    d.ion_velocity = state.ion_velocity;
    d.atom_velocity = state.atom_velocity;
    for (int j = 0; j < 3; ++j) {
        double trap_acc = -quarter * (trap.a[j] + 2.0 * trap.q[j] * cos_rf)
                          * state.ion_position[j];
        double field_acc = constants::elementary_charge * rf_field[j] * cos_rf / pair.ion_mass;
        d.ion_acceleration[j] = trap_acc - g[j] / pair.ion_mass + field_acc;
        d.atom_acceleration[j] = g[j] / pair.atom_mass;
    }
    return d;
}

PairState rk4_step(const PairState& state, const TrapConfig& trap, const SpeciesPair& pair,
                   double dt, const Vec3& rf_field) {
    auto advanced = [&](const PairDerivatives& k, double h) {
        PairState s = state;
        s.ion_position += h * k.ion_velocity;
        s.ion_velocity += h * k.ion_acceleration;
        s.atom_position += h * k.atom_velocity;
        s.atom_velocity += h * k.atom_acceleration;
        s.time = state.time + h;
        return s;
    };
    PairDerivatives k1 = eom_derivatives(state, trap, pair, rf_field);
    PairDerivatives k2 = eom_derivatives(advanced(k1, 0.5 * dt), trap, pair, rf_field);
    PairDerivatives k3 = eom_derivatives(advanced(k2, 0.5 * dt), trap, pair, rf_field);
    PairDerivatives k4 = eom_derivatives(advanced(k3, dt), trap, pair, rf_field);

    double h6 = dt / 6.0;
    PairState out = state;
    out.ion_position += h6 * (k1.ion_velocity + 2.0 * k2.ion_velocity
                              + 2.0 * k3.ion_velocity + k4.ion_velocity);
    out.ion_velocity += h6 * (k1.ion_acceleration + 2.0 * k2.ion_acceleration
                              + 2.0 * k3.ion_acceleration + k4.ion_acceleration);
    out.atom_position += h6 * (k1.atom_velocity + 2.0 * k2.atom_velocity
                               + 2.0 * k3.atom_velocity + k4.atom_velocity);
    out.atom_velocity += h6 * (k1.atom_acceleration + 2.0 * k2.atom_acceleration
                               + 2.0 * k3.atom_acceleration + k4.atom_acceleration);
    out.time = state.time + dt;

    if (!all_finite(out.ion_position) || !all_finite(out.ion_velocity)
        || !all_finite(out.atom_position) || !all_finite(out.atom_velocity))
        throw IntegrationError(out);
    return out;
}

double md_timestep(double r, const TrapConfig& trap, const SpeciesPair& pair,
                   const MdConfig& md) {
    double base = two_pi / trap.rf_frequency;
    if (pair.c4 > 0.0) {
        double rs = md.shrink_radius;
        double r6 = rs * rs * rs * rs * rs * rs;
        base = std::min(base, std::sqrt(pair.reduced_mass() * r6 / (2.0 * pair.c4)));
    }
    double dt = base / md.steps_per_rf;
    if (md.step_policy == StepPolicy::distance_scaled && r < md.shrink_radius) {
        double f = (r / md.shrink_radius) * (r / md.shrink_radius);
        dt *= std::clamp(f, md.min_step_factor, 1.0);
    }
    return dt;
}

AtomEntry sample_atom_entry(double sphere_radius, const BathConfig& bath,
                            const SpeciesPair& pair, Rng& rng) {
    if (!(sphere_radius > 0.0))
        throw std::invalid_argument("sample_atom_entry: sphere radius must be positive");
    if (!(bath.temperature > 0.0))
        throw std::invalid_argument("sample_atom_entry: bath temperature must be positive");

    Vec3 n = rng.isotropic_direction();
    double sigma = std::sqrt(constants::k_boltzmann * bath.temperature / pair.atom_mass);
    double v_in = rng.rayleigh(sigma);
    double v_t1 = sigma * rng.normal();
    double v_t2 = sigma * rng.normal();

    Vec3 ref = std::abs(n.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    Vec3 e1 = cross(n, ref);
    e1 = (1.0 / norm(e1)) * e1;
    Vec3 e2 = cross(n, e1);

    AtomEntry out;
    out.position = sphere_radius * n;
    out.velocity = (-v_in) * n + v_t1 * e1 + v_t2 * e2;
    return out;
}

double atom_entry_rate(double sphere_radius, const BathConfig& bath, const SpeciesPair& pair) {
    if (!(sphere_radius > 0.0))
        throw std::invalid_argument("atom_entry_rate: sphere radius must be positive");
    double mean_speed = std::sqrt(8.0 * constants::k_boltzmann * bath.temperature
                                  / (pi * pair.atom_mass));
    return bath.density * pi * sphere_radius * sphere_radius * mean_speed;
}

PairState contact_collision(const PairState& state, const SpeciesPair& pair,
                            const Mat3& rotation) {
    if (orthogonality_defect(rotation) > 1e-12 || std::abs(det(rotation) - 1.0) > 1e-12)
        throw std::invalid_argument("contact_collision: rotation must be proper orthogonal");
    double m = pair.ion_mass + pair.atom_mass;
    Vec3 vcm = (1.0 / m)
               * (pair.ion_mass * state.ion_velocity + pair.atom_mass * state.atom_velocity);
    Vec3 wp = rotation * (state.ion_velocity - state.atom_velocity);
    PairState out = state;
    out.ion_velocity = vcm + (pair.atom_mass / m) * wp;
    out.atom_velocity = vcm - (pair.ion_mass / m) * wp;
    return out;
}

std::vector<MdRecord> run_polarization_md(const TrapConfig& trap, const SpeciesPair& pair,
                                          const BathConfig& bath, const MdConfig& md,
                                          int workers) {
    trap.validate();
    pair.validate();
    bath.validate();
    md.validate();
    if (!(bath.temperature > 0.0))
        throw std::invalid_argument("polarization_md: bath temperature must be positive");
    if (!(bath.density > 0.0))
        throw std::invalid_argument("polarization_md: bath density must be positive");

    std::array<double, 3> w = secular_frequencies(trap);
    for (int j = 0; j < 3; ++j)
        if (!(w[j] > 0.0))
            throw std::invalid_argument("polarization_md: all secular frequencies must be positive");

    Ctx c{trap, pair, md, w, {}, 0.0, 0.0, 0.0};
    c.mu = pair.reduced_mass();
    c.langevin_radius = md.langevin_radius_factor * md.contact_radius;
    double w_max = std::max({w[0], w[1], w[2]});
    c.scan_dt_cap = two_pi / w_max / 8.0;
    for (int j = 0; j < 3; ++j)
        c.drive_u[j] = constants::elementary_charge * md.rf_field[j]
                       / (pair.ion_mass * trap.rf_frequency * trap.rf_frequency);

    double mean_wait = 1.0 / atom_entry_rate(md.sphere_radius, bath, pair);
    std::int64_t target_fixed = std::llround(md.mean_langevin_collisions);

    std::vector<MdRecord> records(static_cast<std::size_t>(md.n_realizations));
    parallel_for_indexed(md.n_realizations, workers, [&](std::int64_t i) {
        Rng rng = Rng::for_realization(md.master_seed, static_cast<std::uint64_t>(i));
        std::int64_t target = md.fixed_collision_target
                                  ? target_fixed
                                  : rng.poisson(md.mean_langevin_collisions);

        SecularState init = sample_initial_state(md.initial, trap, pair, rng);
        IonPhase ion;
        ion.u = init.amplitude;
        ion.psi = init.phase;
        ion.theta = 0.0;

        MdRecord rec;
        StepBudget budget{md.max_rk_steps_per_realization,
                          md.max_scan_steps_per_realization};
        std::int64_t visits = 0;
        while (rec.langevin_collisions < target) {
            if (++visits > md.max_total_visits) {
                rec.flagged = true;
                break;
            }
            advance_phases(ion, c.w, trap.rf_frequency, rng.exponential(mean_wait));
            AtomEntry entry = sample_atom_entry(md.sphere_radius, bath, pair, rng);
            VisitStats vs = run_visit(c, ion, entry, rng, budget);
            if (vs.langevin) ++rec.langevin_collisions;
            if (vs.flagged) ++rec.flagged_visits;
            if (vs.exhausted) {
                rec.flagged = true;
                break;
            }
        }
        rec.total_energy = ion_secular_energy(c, ion);
        records[static_cast<std::size_t>(i)] = rec;
    });
    return records;
}

std::vector<EnergyRecord> to_energy_records(std::span<const MdRecord> records) {
    std::vector<EnergyRecord> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        out[i].total_energy = records[i].total_energy;
        out[i].collision_count = static_cast<int>(records[i].langevin_collisions);
        out[i].flagged = records[i].flagged;
    }
    return out;
}

}  // namespace ionbath
