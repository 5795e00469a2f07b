#include "ionbath/energy_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ionbath/fitting.hpp"

namespace ionbath {

double EnergyHistogram::center(int i) const {
    return std::sqrt(edges[i] * edges[i + 1]);
}

EnergyHistogram build_histogram(std::span<const EnergyRecord> records, int bins,
                                double lo, double hi, double e_scale) {
    if (records.empty()) throw std::invalid_argument("build_histogram: no records");
    if (bins < 2) throw std::invalid_argument("build_histogram: bins < 2");
    if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("build_histogram: need 0 < lo < hi");
    if (!(e_scale > 0.0)) throw std::invalid_argument("build_histogram: e_scale <= 0");

    EnergyHistogram h;
    h.e_scale = e_scale;
    h.edges.resize(bins + 1);
    const double log_lo = std::log(lo), dlog = (std::log(hi) - log_lo) / bins;
    for (int i = 0; i <= bins; ++i) h.edges[i] = std::exp(log_lo + i * dlog);
    h.edges.front() = lo;
    h.edges.back() = hi;
    h.counts.assign(bins, 0);

    const double inv_dlog = 1.0 / dlog;
    for (const auto& r : records) {
        if (r.flagged) {
            ++h.flagged_excluded;
            continue;
        }
        ++h.total_records;
        if (!(r.total_energy >= lo)) {
            ++h.below_range;
            continue;
        }
        if (r.total_energy >= hi) {
            ++h.above_range;
            continue;
        }
        int idx = static_cast<int>((std::log(r.total_energy) - log_lo) * inv_dlog);
        idx = std::clamp(idx, 0, bins - 1);
        ++h.counts[idx];
    }

    h.density.resize(bins);
    const double norm = h.total_records ? 1.0 / static_cast<double>(h.total_records) : 0.0;
    for (int i = 0; i < bins; ++i)
        h.density[i] = static_cast<double>(h.counts[i]) * norm / h.width(i);
    return h;
}

namespace {

void check_params(const TsallisParams& p) {
    if (!(p.n > 3.0) || !(p.a > 0.0))
        throw std::invalid_argument("tsallis: need n > 3 and a > 0");
}

double tsallis_norm(double n) {
    return (n - 3.0) * (n - 2.0) * (n - 1.0) / (2.0 * n * n * n);
}

// Marsaglia-Tsang gamma generator; the shape < 1 case is boosted from
// shape + 1 so the draw stays deterministic per stream.
double gamma_sample(Rng& rng, double shape) {
    if (shape < 1.0) {
        double u = rng.uniform_pos();
        return gamma_sample(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        double u = rng.uniform_pos();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
}

// 5-point Gauss-Legendre nodes/weights on [-1, 1]
constexpr double gl_x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                            0.5384693101056831, 0.9061798459386640};
constexpr double gl_w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                            0.4786286704993665, 0.2369268850561891};

// Integral of the pdf over [lo, hi], Gauss-Legendre in log energy.
double tsallis_bin_mass(double lo, double hi, const TsallisParams& p) {
    const double mid = 0.5 * (std::log(hi) + std::log(lo));
    const double half = 0.5 * (std::log(hi) - std::log(lo));
    double s = 0.0;
    for (int i = 0; i < 5; ++i) {
        double e = std::exp(mid + half * gl_x[i]);
        s += gl_w[i] * tsallis_pdf(e, p) * e;
    }
    return s * half;
}

}  // namespace

double tsallis_pdf(double energy, const TsallisParams& p) {
    check_params(p);
    if (energy < 0.0) return 0.0;
    double x = energy / p.a;
    return tsallis_norm(p.n) * x * x * std::pow(1.0 + x / p.n, -p.n) / p.a;
}

double tsallis_mean(const TsallisParams& p) {
    check_params(p);
    if (p.n <= 4.0) return std::numeric_limits<double>::infinity();
    return 3.0 * p.a * p.n / (p.n - 4.0);
}

double tsallis_sample(Rng& rng, const TsallisParams& p) {
    check_params(p);
    double g1 = gamma_sample(rng, 3.0);
    double g2 = gamma_sample(rng, p.n - 3.0);
    double t = g1 / (g1 + g2);
    return p.a * p.n * t / (1.0 - t);
}

double energy_median(std::span<const EnergyRecord> records) {
    std::vector<double> es;
    es.reserve(records.size());
    for (const auto& r : records)
        if (!r.flagged) es.push_back(r.total_energy);
    if (es.empty()) throw std::invalid_argument("energy_median: no unflagged records");
    size_t mid = es.size() / 2;
    std::nth_element(es.begin(), es.begin() + mid, es.end());
    return es[mid];
}

TailFit fit_tsallis_tail(const EnergyHistogram& hist, std::optional<double> threshold,
                         std::optional<double> upper_bound) {
    double lo_cut;
    if (threshold) {
        lo_cut = *threshold;
    } else {
        // weighted median of the binned distribution, threshold = 10x
        std::uint64_t in_range = 0;
        for (auto c : hist.counts) in_range += c;
        if (in_range == 0) throw std::invalid_argument("fit_tsallis_tail: empty histogram");
        std::uint64_t acc = 0;
        double median = hist.center(hist.bins() - 1);
        for (int i = 0; i < hist.bins(); ++i) {
            acc += hist.counts[i];
            if (2 * acc >= in_range) {
                median = hist.center(i);
                break;
            }
        }
        lo_cut = 10.0 * median;
    }
    double hi_cut = upper_bound.value_or(std::numeric_limits<double>::infinity());

    std::vector<double> xs, ys, ws;
    for (int i = 0; i < hist.bins(); ++i) {
        if (hist.counts[i] == 0) continue;
        double c = hist.center(i);
        if (c < lo_cut || c > hi_cut) continue;
        xs.push_back(std::log(c));
        ys.push_back(std::log(hist.density[i]));
        // var(log density) ~ 1/counts for Poisson bins
        ws.push_back(static_cast<double>(hist.counts[i]));
    }
    if (xs.size() < 5)
        throw std::invalid_argument("fit_tsallis_tail: fewer than 5 nonempty tail bins");

    LineFit line = weighted_line_fit(xs, ys, ws);
    if (line.slope >= 0.0)
        throw std::domain_error("fit_tsallis_tail: tail slope is non-negative, no power law");

    TailFit fit;
    fit.params.n = 2.0 - line.slope;
    fit.params.n_sigma = line.slope_sigma;
    if (fit.params.n > 3.0) {
        // asymptote density = N(n) n^n a^(n-3) E^(2-n)
        double log_amp = line.intercept;
        double log_a = (log_amp - std::log(tsallis_norm(fit.params.n)) -
                        fit.params.n * std::log(fit.params.n)) /
                       (fit.params.n - 3.0);
        fit.params.a = std::exp(log_a);
        fit.params.a_sigma = fit.params.a * line.intercept_sigma / (fit.params.n - 3.0);
    }
    fit.threshold = lo_cut;
    fit.upper_bound = hi_cut;
    fit.bins_used = static_cast<int>(xs.size());
    fit.chi2 = line.chi2;
    fit.dof = line.dof;
    return fit;
}

Chi2Result tsallis_chi2(const EnergyHistogram& hist, const TsallisParams& p,
                        double lo, double hi) {
    Chi2Result r;
    double total = static_cast<double>(hist.total_records);
    for (int i = 0; i < hist.bins(); ++i) {
        if (hist.counts[i] < 5) continue;
        double c = hist.center(i);
        if (c < lo || c > hi) continue;
        double expected = total * tsallis_bin_mass(hist.edges[i], hist.edges[i + 1], p);
        if (expected <= 0.0) continue;
        double d = static_cast<double>(hist.counts[i]) - expected;
        r.chi2 += d * d / expected;
        ++r.dof;
    }
    r.chi2_per_dof = r.dof ? r.chi2 / r.dof : 0.0;
    return r;
}

FullFit full_tsallis_fit(const EnergyHistogram& hist) {
    std::uint64_t in_range = 0;
    for (auto c : hist.counts) in_range += c;
    if (in_range == 0) throw std::invalid_argument("full_tsallis_fit: empty histogram");

    // weighted median as the scale seed
    std::uint64_t acc = 0;
    double median = hist.center(hist.bins() / 2);
    for (int i = 0; i < hist.bins(); ++i) {
        acc += hist.counts[i];
        if (2 * acc >= in_range) {
            median = hist.center(i);
            break;
        }
    }

    const double total = static_cast<double>(hist.total_records);
    auto neg_log_like = [&](std::span<const double> th) {
        TsallisParams p{3.0 + std::exp(th[0]), std::exp(th[1]), 0, 0};
        double ll = 0.0;
        for (int i = 0; i < hist.bins(); ++i) {
            double mass = tsallis_bin_mass(hist.edges[i], hist.edges[i + 1], p);
            double mu = std::max(total * mass, 1e-300);
            ll += static_cast<double>(hist.counts[i]) * std::log(mu) - mu;
        }
        return -ll;
    };

    FullFit best;
    double best_f = std::numeric_limits<double>::infinity();
    const double start_n[5] = {3.3, 3.7, 4.5, 6.0, 9.0};
    for (double n0 : start_n) {
        double a0 = median / 2.0;
        double th0[2] = {std::log(n0 - 3.0), std::log(a0)};
        double sc[2] = {0.4, 0.5};
        SimplexResult r = nelder_mead(neg_log_like, th0, sc, 1e-12, 4000);
        if (r.fval < best_f) {
            best_f = r.fval;
            best.params.n = 3.0 + std::exp(r.x[0]);
            best.params.a = std::exp(r.x[1]);
            best.converged = r.converged;
        }
    }

    // curvature-based errors from a small finite-difference Hessian in theta
    {
        double th[2] = {std::log(best.params.n - 3.0), std::log(best.params.a)};
        double h = 1e-3;
        auto f = [&](double d0, double d1) {
            double p[2] = {th[0] + d0, th[1] + d1};
            return neg_log_like(p);
        };
        double f0 = f(0, 0);
        double h00 = (f(h, 0) - 2 * f0 + f(-h, 0)) / (h * h);
        double h11 = (f(0, h) - 2 * f0 + f(0, -h)) / (h * h);
        double h01 = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
        double det_h = h00 * h11 - h01 * h01;
        if (det_h > 0 && h00 > 0) {
            double var0 = h11 / det_h, var1 = h00 / det_h;
            best.params.n_sigma = std::sqrt(std::max(0.0, var0)) * (best.params.n - 3.0);
            best.params.a_sigma = std::sqrt(std::max(0.0, var1)) * best.params.a;
        }
    }

    Chi2Result c = tsallis_chi2(hist, best.params, 0.0,
                                std::numeric_limits<double>::infinity());
    best.chi2 = c.chi2;
    best.dof = std::max(0, c.dof - 2);
    best.chi2_per_dof = best.dof ? best.chi2 / best.dof : 0.0;
    best.p_value = best.dof ? chi2_survival(best.chi2, best.dof) : 1.0;
    return best;
}

double chen_exponent(double ion_mass, double atom_mass) {
    if (!(ion_mass > 0) || !(atom_mass > 0))
        throw std::invalid_argument("chen_exponent: masses must be positive");
    return 3.34 * (ion_mass / atom_mass - 1.0) + 5.0;
}

ExponentConventions convert_exponent_convention(double n) {
    return {n, 2.0 - n, n - 3.0, 3.0 - n};
}

ExponentTag exponent_tag_from_string(std::string_view name) {
    if (name == "n") return ExponentTag::n;
    if (name == "nu") return ExponentTag::nu;
    if (name == "kappa") return ExponentTag::kappa;
    if (name == "alpha") return ExponentTag::alpha;
    throw std::invalid_argument("unknown exponent convention: " + std::string(name));
}

double convert_exponent_convention(double value, ExponentTag from, ExponentTag to) {
    double n;
    switch (from) {
        case ExponentTag::n: n = value; break;
        case ExponentTag::nu: n = value + 3.0; break;
        case ExponentTag::kappa: n = 2.0 - value; break;
        case ExponentTag::alpha: n = 3.0 - value; break;
        default: throw std::invalid_argument("unknown exponent convention tag");
    }
    switch (to) {
        case ExponentTag::n: return n;
        case ExponentTag::nu: return n - 3.0;
        case ExponentTag::kappa: return 2.0 - n;
        case ExponentTag::alpha: return 3.0 - n;
    }
    throw std::invalid_argument("unknown exponent convention tag");
}

}  // namespace ionbath
