#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ionbath/energy_stats.hpp"
#include "ionbath/rng.hpp"

namespace ionbath {

struct ModeSpec {
    double frequency = 0.0;   // rad/s
    double lamb_dicke = 0.0;  // eta

    void validate() const;  // frequency > 0, 0 <= eta < 1
};

struct RabiCurve {
    std::vector<double> times;                   // s, strictly ascending
    std::vector<double> excitation_probability;  // [0, 1]
    int shots_per_point = 0;                     // 0 for a noiseless synthetic curve

    void validate() const;
};

// Carrier Rabi frequency of a Fock state |n1 n2 n3>:
// Omega_0 prod_i exp(-eta_i^2/2) L_{n_i}(eta_i^2).
double carrier_coupling(const std::array<int, 3>& n, const std::array<ModeSpec, 3>& modes,
                        double omega0);

// Motional energy distribution feeding the Fock populations. thermal uses the
// exact per-mode geometric occupations; tsallis and maxwell_boltzmann draw
// total energies, split them uniformly over the three modes and floor each
// share to an occupation (Monte-Carlo marginalization, cached per call).
struct MotionalDistribution {
    enum class Kind { thermal, tsallis, maxwell_boltzmann };

    Kind kind = Kind::thermal;
    double temperature = 0.0;  // K (thermal, maxwell_boltzmann)
    TsallisParams tsallis_params;

    static MotionalDistribution thermal(double kelvin);
    static MotionalDistribution maxwell_boltzmann(double kelvin);
    static MotionalDistribution tsallis(double n, double a);
    void validate() const;
};

struct RabiSignalOptions {
    int truncation = 0;         // per-mode Fock cap; 0 = auto, max(30, 10 nbar)
    double tail_target = 1e-7;  // auto mode grows the cap until the untracked
                                // thermal mass drops below this
    int mc_samples = 100000;    // marginalization draws
    std::uint64_t seed = 12345;
};

// P(t) = sum_n p(n) sin^2(Omega_n t / 2). A caller-forced truncation that
// leaves more than 1e-4 of the thermal mass untracked is an error.
RabiCurve rabi_signal(std::span<const double> times, const std::array<ModeSpec, 3>& modes,
                      double omega0, const MotionalDistribution& dist,
                      const RabiSignalOptions& opts = {});

// Binomial projection noise on an ideal curve.
RabiCurve sample_shots(const RabiCurve& ideal, int shots, Rng& rng);

enum class RabiModel { thermal, tsallis, maxwell_boltzmann };

struct RabiFitOptions {
    int starts = 5;
    int mc_samples = 20000;  // per likelihood evaluation, fixed seed
    std::uint64_t seed = 777;
    double ftol = 1e-9;
    int max_evals = 4000;
    bool fit_time_offset = false;     // pulse-time zero as a nuisance parameter
    bool fit_detection_error = false; // bright/dark misidentification fraction
};

struct RabiFit {
    RabiModel model = RabiModel::thermal;
    double omega0 = 0.0;
    double omega0_sigma = 0.0;
    double temperature = 0.0;  // thermal / maxwell_boltzmann
    double temperature_sigma = 0.0;
    TsallisParams tsallis;  // tsallis model
    double time_offset = 0.0;
    double detection_error = 0.0;
    double log_likelihood = 0.0;
    double chi2 = 0.0;
    int dof = 0;
    bool converged = false;
};

// Maximum-likelihood fit of a measured curve: binomial likelihood per point
// given shots_per_point, derivative-free simplex with multiple starts.
RabiFit fit_rabi_curve(const RabiCurve& curve, const std::array<ModeSpec, 3>& modes,
                       RabiModel model, const RabiFitOptions& opts = {});

}  // namespace ionbath
