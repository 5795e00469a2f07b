#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ionbath/rng.hpp"

namespace ionbath {

struct EnergyRecord {
    double total_energy = 0.0;  // J, secular energy summed over modes
    int collision_count = 0;
    bool flagged = false;
};

// Log-binned density histogram. density[i] = counts[i] / (bin width * total
// unflagged records), so it estimates the pdf over (0, inf) directly.
struct EnergyHistogram {
    std::vector<double> edges;   // bins + 1 ascending values
    std::vector<std::uint64_t> counts;
    std::vector<double> density;
    std::uint64_t total_records = 0;  // unflagged records, in or out of range
    std::uint64_t below_range = 0;
    std::uint64_t above_range = 0;
    std::uint64_t flagged_excluded = 0;
    double e_scale = 1.0;  // J, reference scale for plotting e/e_scale

    int bins() const { return static_cast<int>(counts.size()); }
    double center(int i) const;  // geometric bin center
    double width(int i) const { return edges[i + 1] - edges[i]; }
};

EnergyHistogram build_histogram(std::span<const EnergyRecord> records, int bins,
                                double lo, double hi, double e_scale = 1.0);

// Power-law-tail energy distribution
//   P(e) de = [(n-3)(n-2)(n-1)/(2 n^3)] (e/a)^2 (1 + e/(a n))^(-n) de/a,
// normalized for n > 3; mean 3 a n/(n-4) for n > 4, divergent otherwise.
struct TsallisParams {
    double n = 0.0;
    double a = 0.0;  // J
    double n_sigma = 0.0;
    double a_sigma = 0.0;
};

double tsallis_pdf(double energy, const TsallisParams& p);
double tsallis_mean(const TsallisParams& p);  // +inf for n <= 4

// Deterministic sample: e = a n t/(1-t) with t ~ Beta(3, n-3).
double tsallis_sample(Rng& rng, const TsallisParams& p);

struct TailFit {
    TsallisParams params;
    double threshold = 0.0;   // lower fit bound actually used, J
    double upper_bound = 0.0; // J, +inf when unbounded
    int bins_used = 0;
    double chi2 = 0.0;
    int dof = 0;
};

// Weighted log-log straight-line fit of the histogram tail; slope s maps to
// n = 2 - s and the amplitude to a. threshold defaults to 10x the weighted
// median of the distribution when not supplied. Needs >= 5 nonempty tail bins.
TailFit fit_tsallis_tail(const EnergyHistogram& hist,
                         std::optional<double> threshold = std::nullopt,
                         std::optional<double> upper_bound = std::nullopt);

struct FullFit {
    TsallisParams params;
    double chi2 = 0.0;        // Pearson chi^2 over bins with >= 5 counts
    int dof = 0;
    double chi2_per_dof = 0.0;
    double p_value = 0.0;
    bool converged = false;
};

// Binned Poisson maximum-likelihood fit of the whole histogram, multi-start
// downhill simplex in (log(n-3), log a).
FullFit full_tsallis_fit(const EnergyHistogram& hist);

// Pearson chi^2 of an arbitrary parameter set against a histogram, restricted
// to [lo, hi] (pass +-inf for open ends); bins under 5 counts are skipped.
struct Chi2Result {
    double chi2 = 0.0;
    int dof = 0;
    double chi2_per_dof = 0.0;
};
Chi2Result tsallis_chi2(const EnergyHistogram& hist, const TsallisParams& p,
                        double lo, double hi);

// Analytic tail exponent for an rf trap with weak static confinement,
// n ~= 3.34 (m_i/m_a - 1) + 5.
double chen_exponent(double ion_mass, double atom_mass);

// The tail P(E) ~ E^(2-n) is quoted under several exponent conventions:
// 2 - n = -(nu + 1) = kappa = alpha - 1.
struct ExponentConventions {
    double n;
    double kappa;
    double nu;
    double alpha;
};
ExponentConventions convert_exponent_convention(double n);

enum class ExponentTag { n, nu, kappa, alpha };
ExponentTag exponent_tag_from_string(std::string_view name);  // throws on unknown tag
double convert_exponent_convention(double value, ExponentTag from, ExponentTag to);

// Median of the unflagged record energies (exact, not binned).
double energy_median(std::span<const EnergyRecord> records);

}  // namespace ionbath
