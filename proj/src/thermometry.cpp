#include "ionbath/thermometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "ionbath/constants.hpp"
#include "ionbath/fitting.hpp"

namespace ionbath {

namespace {

// L_n values are cached per mode up to this order; beyond it the coupling
// uses Hilb's limit exp(-x/2) L_n(x) -> J0(2 sqrt((n+1/2) x)).
constexpr std::int64_t laguerre_cache_cap = 20000;
constexpr double prune_floor = 1e-14;
constexpr std::size_t joint_state_cap = 8000000;

class ModeCoupling {
  public:
    explicit ModeCoupling(double eta) : x_(eta * eta), damp_(std::exp(-0.5 * x_)) {
        lag_.push_back(1.0);
        if (x_ > 0.0) lag_.push_back(1.0 - x_);
    }

    // exp(-eta^2/2) L_n(eta^2)
    double factor(std::int64_t n) {
        if (x_ == 0.0) return 1.0;
        if (n >= laguerre_cache_cap)
            return std::cyl_bessel_j(0, 2.0 * std::sqrt((n + 0.5) * x_));
        while (static_cast<std::int64_t>(lag_.size()) <= n) {
            std::int64_t k = static_cast<std::int64_t>(lag_.size()) - 1;
            lag_.push_back(((2.0 * k + 1.0 - x_) * lag_[k] - k * lag_[k - 1]) / (k + 1.0));
        }
        return damp_ * lag_[static_cast<std::size_t>(n)];
    }

  private:
    double x_;
    double damp_;
    std::vector<double> lag_;
};

struct WeightedCoupling {
    double c;  // Omega_n / Omega_0
    double p;
};

struct SynthCore {
    std::array<ModeSpec, 3> modes;
    std::array<ModeCoupling, 3> cpl;

    explicit SynthCore(const std::array<ModeSpec, 3>& m)
        : modes(m), cpl{ModeCoupling(m[0].lamb_dicke), ModeCoupling(m[1].lamb_dicke),
                        ModeCoupling(m[2].lamb_dicke)} {}

    std::vector<WeightedCoupling> thermal_states(double temperature, int forced_cap,
                                                 double tail_target, double* tail_out);
    std::vector<WeightedCoupling> mc_states(const MotionalDistribution& dist, int samples,
                                            std::uint64_t seed);
};

std::vector<WeightedCoupling> SynthCore::thermal_states(double temperature, int forced_cap,
                                                        double tail_target,
                                                        double* tail_out) {
    std::array<double, 3> r{0.0, 0.0, 0.0};
    std::array<std::int64_t, 3> cap{};
    for (int j = 0; j < 3; ++j) {
        // a factor-1 mode contributes sum_n p(n) = 1; collapse its marginal
        if (temperature > 0.0 && modes[j].lamb_dicke > 0.0)
            r[j] = std::exp(-constants::hbar * modes[j].frequency /
                            (constants::k_boltzmann * temperature));
        double nbar = r[j] / (1.0 - r[j]);
        cap[j] = forced_cap > 0
                     ? forced_cap
                     : std::max<std::int64_t>(30, static_cast<std::int64_t>(10.0 * nbar) + 1);
    }

    // geometric tails have a closed form, so the untracked mass is exact
    auto tail_of = [&] {
        double inside = 1.0;
        for (int j = 0; j < 3; ++j)
            inside *= 1.0 - std::pow(r[j], static_cast<double>(cap[j] + 1));
        return 1.0 - inside;
    };
    double tail = tail_of();
    if (forced_cap > 0) {
        if (tail >= 1e-4)
            throw std::runtime_error("rabi_signal: truncation " + std::to_string(forced_cap) +
                                     " leaves " + std::to_string(tail) +
                                     " of the thermal mass untracked (limit 1e-4)");
    } else {
        for (int guard = 0; tail >= tail_target && guard < 40; ++guard) {
            for (auto& c : cap) c *= 2;
            tail = tail_of();
        }
    }
    if (tail_out) *tail_out = tail;
    for (std::int64_t c : cap)
        if (c > 2000000)
            throw std::runtime_error(
                "rabi_signal: temperature too high for Fock-basis synthesis");

    std::array<std::vector<double>, 3> pop;
    for (int j = 0; j < 3; ++j) {
        pop[j].resize(static_cast<std::size_t>(cap[j]) + 1);
        double p = 1.0 - r[j];
        for (auto& v : pop[j]) {
            v = p;
            p *= r[j];
        }
    }

    std::vector<WeightedCoupling> out;
    double top1 = pop[1][0], top2 = pop[2][0];
    for (std::int64_t n0 = 0; n0 <= cap[0]; ++n0) {
        double p0 = pop[0][static_cast<std::size_t>(n0)];
        if (p0 * top1 * top2 < prune_floor) break;
        double c0 = cpl[0].factor(n0);
        for (std::int64_t n1 = 0; n1 <= cap[1]; ++n1) {
            double p01 = p0 * pop[1][static_cast<std::size_t>(n1)];
            if (p01 * top2 < prune_floor) break;
            double c01 = c0 * cpl[1].factor(n1);
            for (std::int64_t n2 = 0; n2 <= cap[2]; ++n2) {
                double p = p01 * pop[2][static_cast<std::size_t>(n2)];
                if (p < prune_floor) break;
                if (out.size() >= joint_state_cap)
                    throw std::runtime_error(
                        "rabi_signal: temperature too high for Fock-basis synthesis");
                out.push_back({c01 * cpl[2].factor(n2), p});
            }
        }
    }
    return out;
}

std::vector<WeightedCoupling> SynthCore::mc_states(const MotionalDistribution& dist,
                                                   int samples, std::uint64_t seed) {
    Rng rng(seed);
    std::map<std::array<std::int64_t, 3>, std::int64_t> counts;
    for (int s = 0; s < samples; ++s) {
        double e;
        if (dist.kind == MotionalDistribution::Kind::tsallis) {
            e = tsallis_sample(rng, dist.tsallis_params);
        } else {
            // three-mode classical thermal energy: Gamma(3, kB T)
            e = -constants::k_boltzmann * dist.temperature *
                std::log(rng.uniform_pos() * rng.uniform_pos() * rng.uniform_pos());
        }
        double u = rng.uniform();
        double v = rng.uniform();
        if (u > v) std::swap(u, v);
        double share[3] = {u, v - u, 1.0 - v};
        std::array<std::int64_t, 3> n;
        for (int j = 0; j < 3; ++j)
            n[j] = modes[j].lamb_dicke > 0.0
                       ? static_cast<std::int64_t>(share[j] * e /
                                                   (constants::hbar * modes[j].frequency))
                       : 0;
        ++counts[n];
    }
    std::vector<WeightedCoupling> out;
    out.reserve(counts.size());
    double w = 1.0 / samples;
    for (const auto& [n, k] : counts)
        out.push_back(
            {cpl[0].factor(n[0]) * cpl[1].factor(n[1]) * cpl[2].factor(n[2]), k * w});
    return out;
}

std::vector<double> evaluate_signal(const std::vector<WeightedCoupling>& states,
                                    double omega0, std::span<const double> times) {
    std::vector<double> p(times.size(), 0.0);
    for (const auto& s : states) {
        double w = 0.5 * omega0 * s.c;
        for (std::size_t i = 0; i < times.size(); ++i) {
            double sn = std::sin(w * times[i]);
            p[i] += s.p * sn * sn;
        }
    }
    return p;
}

void validate_times(std::span<const double> times) {
    if (times.empty()) throw std::invalid_argument("rabi curve: no time points");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]))
            throw std::invalid_argument("rabi curve: non-finite time");
        if (i > 0 && !(times[i] > times[i - 1]))
            throw std::invalid_argument("rabi curve: times must be strictly ascending");
    }
}

}  // namespace

void ModeSpec::validate() const {
    if (!(frequency > 0.0)) throw std::invalid_argument("ModeSpec: frequency must be > 0");
    if (!(lamb_dicke >= 0.0) || lamb_dicke >= 1.0)
        throw std::invalid_argument("ModeSpec: lamb_dicke must be in [0, 1)");
}

void RabiCurve::validate() const {
    validate_times(times);
    if (excitation_probability.size() != times.size())
        throw std::invalid_argument("RabiCurve: size mismatch");
    for (double p : excitation_probability)
        if (!(p >= -1e-12) || !(p <= 1.0 + 1e-12))
            throw std::invalid_argument("RabiCurve: probability outside [0, 1]");
    if (shots_per_point < 0) throw std::invalid_argument("RabiCurve: negative shot count");
}

MotionalDistribution MotionalDistribution::thermal(double kelvin) {
    MotionalDistribution d;
    d.kind = Kind::thermal;
    d.temperature = kelvin;
    return d;
}

MotionalDistribution MotionalDistribution::maxwell_boltzmann(double kelvin) {
    MotionalDistribution d;
    d.kind = Kind::maxwell_boltzmann;
    d.temperature = kelvin;
    return d;
}

MotionalDistribution MotionalDistribution::tsallis(double n, double a) {
    MotionalDistribution d;
    d.kind = Kind::tsallis;
    d.tsallis_params.n = n;
    d.tsallis_params.a = a;
    return d;
}

void MotionalDistribution::validate() const {
    if (kind == Kind::tsallis) {
        if (!(tsallis_params.n > 3.0) || !(tsallis_params.a > 0.0))
            throw std::invalid_argument("MotionalDistribution: tsallis needs n > 3, a > 0");
    } else if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw std::invalid_argument("MotionalDistribution: temperature must be >= 0");
    }
}

double carrier_coupling(const std::array<int, 3>& n, const std::array<ModeSpec, 3>& modes,
                        double omega0) {
    double c = omega0;
    for (int j = 0; j < 3; ++j) {
        modes[j].validate();
        if (n[j] < 0) throw std::invalid_argument("carrier_coupling: negative occupation");
        ModeCoupling mc(modes[j].lamb_dicke);
        c *= mc.factor(n[j]);
    }
    return c;
}

RabiCurve rabi_signal(std::span<const double> times, const std::array<ModeSpec, 3>& modes,
                      double omega0, const MotionalDistribution& dist,
                      const RabiSignalOptions& opts) {
    validate_times(times);
    for (const auto& m : modes) m.validate();
    dist.validate();
    if (!(omega0 > 0.0)) throw std::invalid_argument("rabi_signal: omega0 must be > 0");
    if (opts.mc_samples < 1) throw std::invalid_argument("rabi_signal: mc_samples must be >= 1");

    SynthCore core(modes);
    std::vector<WeightedCoupling> states =
        dist.kind == MotionalDistribution::Kind::thermal
            ? core.thermal_states(dist.temperature, opts.truncation, opts.tail_target,
                                  nullptr)
            : core.mc_states(dist, opts.mc_samples, opts.seed);

    RabiCurve out;
    out.times.assign(times.begin(), times.end());
    out.excitation_probability = evaluate_signal(states, omega0, times);
    out.shots_per_point = 0;
    return out;
}

RabiCurve sample_shots(const RabiCurve& ideal, int shots, Rng& rng) {
    ideal.validate();
    if (shots < 1) throw std::invalid_argument("sample_shots: shots must be >= 1");
    RabiCurve out = ideal;
    out.shots_per_point = shots;
    for (auto& p : out.excitation_probability) {
        int k = 0;
        for (int s = 0; s < shots; ++s)
            if (rng.uniform() < p) ++k;
        p = static_cast<double>(k) / shots;
    }
    return out;
}

RabiFit fit_rabi_curve(const RabiCurve& curve, const std::array<ModeSpec, 3>& modes,
                       RabiModel model, const RabiFitOptions& opts) {
    curve.validate();
    if (curve.times.size() < 10)
        throw std::invalid_argument("fit_rabi_curve: need at least 10 points");
    for (const auto& m : modes) m.validate();

    const int core_dims = model == RabiModel::tsallis ? 3 : 2;
    const int dims =
        core_dims + (opts.fit_time_offset ? 1 : 0) + (opts.fit_detection_error ? 1 : 0);
    const double shots = curve.shots_per_point > 0 ? curve.shots_per_point : 1000.0;
    const double t_span = curve.times.back();

    SynthCore core(modes);

    auto model_curve = [&](std::span<const double> th,
                           std::vector<double>& out) -> bool {
        for (double v : th)
            if (!std::isfinite(v)) return false;
        if (std::abs(th[0]) > 40.0 || std::abs(th[1]) > 40.0) return false;
        if (core_dims == 3 && std::abs(th[2]) > 40.0) return false;
        double omega0 = std::exp(th[0]);
        std::vector<WeightedCoupling> states;
        try {
            if (model == RabiModel::thermal)
                states = core.thermal_states(std::exp(th[1]), 0, 1e-5, nullptr);
            else if (model == RabiModel::maxwell_boltzmann)
                states = core.mc_states(MotionalDistribution::maxwell_boltzmann(std::exp(th[1])),
                                        opts.mc_samples, opts.seed);
            else
                // the tsallis scale is carried in kelvin: in joules its log
                // sits near -64, outside the parameter guard above
                states = core.mc_states(
                    MotionalDistribution::tsallis(
                        3.0 + std::exp(th[1]), constants::k_boltzmann * std::exp(th[2])),
                    opts.mc_samples, opts.seed);
        } catch (const std::runtime_error&) {
            return false;
        }
        int idx = core_dims;
        double t0 = opts.fit_time_offset ? th[idx++] * t_span : 0.0;
        double eps = opts.fit_detection_error ? th[idx] : 0.0;
        if (eps < -1e-12 || eps > 0.4) return false;
        std::vector<double> t(curve.times);
        if (t0 != 0.0)
            for (auto& v : t) v -= t0;
        out = evaluate_signal(states, omega0, t);
        if (eps != 0.0)
            for (auto& p : out) p = eps + (1.0 - 2.0 * eps) * p;
        return true;
    };

    auto nll = [&](std::span<const double> th) -> double {
        std::vector<double> p;
        if (!model_curve(th, p)) return 1e12;
        double acc = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            double pm = std::clamp(p[i], 1e-9, 1.0 - 1e-9);
            double y = curve.excitation_probability[i];
            acc -= shots * (y * std::log(pm) + (1.0 - y) * std::log1p(-pm));
        }
        return acc;
    };

    // first-peak guess for the carrier frequency
    std::size_t imax = 0;
    for (std::size_t i = 1; i < curve.times.size(); ++i)
        if (curve.excitation_probability[i] > curve.excitation_probability[imax]) imax = i;
    double t_peak = curve.times[imax];
    if (!(t_peak > 0.0) || curve.excitation_probability[imax] < 0.1)
        t_peak = 0.25 * t_span;
    double w_base = M_PI / t_peak;

    static constexpr double w_mult[5] = {1.0, 0.7, 1.4, 0.5, 2.0};
    static constexpr double t_grid[5] = {1e-4, 3e-5, 3e-4, 1e-5, 1e-3};
    static constexpr double n_grid[5] = {4.0, 3.5, 5.0, 6.5, 9.0};

    int starts = std::max(1, opts.starts);
    SimplexResult best;
    best.fval = std::numeric_limits<double>::infinity();
    for (int s = 0; s < starts; ++s) {
        int g = s % 5;
        std::vector<double> th0 = {std::log(w_base * w_mult[g])};
        std::vector<double> sc = {0.3};
        if (model == RabiModel::tsallis) {
            th0.push_back(std::log(n_grid[g] - 3.0));
            th0.push_back(std::log(t_grid[g] / 3.0));
            sc.insert(sc.end(), {0.5, 0.7});
        } else {
            th0.push_back(std::log(t_grid[g]));
            sc.push_back(0.7);
        }
        if (opts.fit_time_offset) {
            th0.push_back(0.0);
            sc.push_back(0.05);
        }
        if (opts.fit_detection_error) {
            th0.push_back(0.02);
            sc.push_back(0.02);
        }
        SimplexResult r = nelder_mead(nll, th0, sc, opts.ftol, opts.max_evals);
        if (r.fval < best.fval) best = r;
    }
    if (!std::isfinite(best.fval) || best.fval >= 1e12)
        throw std::runtime_error("fit_rabi_curve: no start converged to a finite likelihood");

    RabiFit fit;
    fit.model = model;
    fit.converged = best.converged;
    fit.log_likelihood = -best.fval;
    fit.omega0 = std::exp(best.x[0]);
    if (model == RabiModel::tsallis) {
        fit.tsallis.n = 3.0 + std::exp(best.x[1]);
        fit.tsallis.a = constants::k_boltzmann * std::exp(best.x[2]);
    } else {
        fit.temperature = std::exp(best.x[1]);
    }
    int idx = core_dims;
    if (opts.fit_time_offset) fit.time_offset = best.x[idx++] * t_span;
    if (opts.fit_detection_error) fit.detection_error = best.x[idx];

    // curvature errors from a finite-difference Hessian over the core block
    {
        std::vector<double> th = best.x;
        double h = 1e-3;
        auto f = [&](int i, double di, int j, double dj) {
            std::vector<double> p = th;
            p[i] += di;
            if (j >= 0) p[j] += dj;
            return nll(p);
        };
        double f0 = nll(th);
        std::array<std::array<double, 3>, 3> hess{};
        for (int i = 0; i < core_dims; ++i)
            hess[i][i] = (f(i, h, -1, 0) - 2.0 * f0 + f(i, -h, -1, 0)) / (h * h);
        for (int i = 0; i < core_dims; ++i)
            for (int j = i + 1; j < core_dims; ++j)
                hess[i][j] = hess[j][i] = (f(i, h, j, h) - f(i, h, j, -h) - f(i, -h, j, h) +
                                           f(i, -h, j, -h)) /
                                          (4.0 * h * h);
        std::array<double, 3> var{};
        bool ok = false;
        if (core_dims == 2) {
            double det = hess[0][0] * hess[1][1] - hess[0][1] * hess[0][1];
            if (det > 0.0 && hess[0][0] > 0.0) {
                var[0] = hess[1][1] / det;
                var[1] = hess[0][0] / det;
                ok = true;
            }
        } else {
            double det = hess[0][0] * (hess[1][1] * hess[2][2] - hess[1][2] * hess[1][2]) -
                         hess[0][1] * (hess[0][1] * hess[2][2] - hess[1][2] * hess[0][2]) +
                         hess[0][2] * (hess[0][1] * hess[1][2] - hess[1][1] * hess[0][2]);
            if (det > 0.0 && hess[0][0] > 0.0) {
                var[0] = (hess[1][1] * hess[2][2] - hess[1][2] * hess[1][2]) / det;
                var[1] = (hess[0][0] * hess[2][2] - hess[0][2] * hess[0][2]) / det;
                var[2] = (hess[0][0] * hess[1][1] - hess[0][1] * hess[0][1]) / det;
                ok = true;
            }
        }
        if (ok) {
            fit.omega0_sigma = std::sqrt(std::max(0.0, var[0])) * fit.omega0;
            if (model == RabiModel::tsallis) {
                fit.tsallis.n_sigma = std::sqrt(std::max(0.0, var[1])) * (fit.tsallis.n - 3.0);
                fit.tsallis.a_sigma = std::sqrt(std::max(0.0, var[2])) * fit.tsallis.a;
            } else {
                fit.temperature_sigma = std::sqrt(std::max(0.0, var[1])) * fit.temperature;
            }
        }
    }

    std::vector<double> p;
    model_curve(best.x, p);
    for (std::size_t i = 0; i < p.size(); ++i) {
        double pm = std::clamp(p[i], 1e-9, 1.0 - 1e-9);
        double resid = curve.excitation_probability[i] - pm;
        fit.chi2 += resid * resid / (pm * (1.0 - pm) / shots);
    }
    fit.dof = static_cast<int>(curve.times.size()) - dims;
    return fit;
}

}  // namespace ionbath
