#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "ionbath/constants.hpp"
#include "ionbath/rng.hpp"
#include "ionbath/thermometry.hpp"

using namespace ionbath;
namespace k = ionbath::constants;

namespace {

std::array<ModeSpec, 3> paper_modes() {
    return {ModeSpec{2.0 * M_PI * 0.82e6, 0.08}, ModeSpec{2.0 * M_PI * 1.28e6, 0.044},
            ModeSpec{2.0 * M_PI * 0.58e6, 0.0928}};
}

std::vector<double> make_times(double t_end, int n) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = t_end * (i + 1) / n;
    return t;
}

// exp(-x/2) L_n(x) by the three-term recurrence, independent of the library
double damped_laguerre(std::int64_t n, double x) {
    double lm = 1.0, l = 1.0 - x;
    if (n == 0) l = 1.0;
    for (std::int64_t j = 1; j < n; ++j) {
        double ln = ((2.0 * j + 1.0 - x) * l - j * lm) / (j + 1.0);
        lm = l;
        l = ln;
    }
    return std::exp(-0.5 * x) * l;
}

RabiFitOptions light_fit_options() {
    RabiFitOptions o;
    o.starts = 3;
    o.mc_samples = 10000;
    o.max_evals = 2500;
    return o;
}

}  // namespace

TEST_CASE("carrier coupling reduces to closed-form laguerre values") {
    std::array<ModeSpec, 3> flat = {ModeSpec{2.0 * M_PI * 1e6, 0.0},
                                    ModeSpec{2.0 * M_PI * 1.3e6, 0.0},
                                    ModeSpec{2.0 * M_PI * 0.7e6, 0.0}};
    CHECK(carrier_coupling({0, 0, 0}, flat, 3.0) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(carrier_coupling({7, 3, 12}, flat, 3.0) == doctest::Approx(3.0).epsilon(1e-14));

    std::array<ModeSpec, 3> modes = {ModeSpec{2.0 * M_PI * 1e6, 0.1},
                                     ModeSpec{2.0 * M_PI * 1.3e6, 0.05},
                                     ModeSpec{2.0 * M_PI * 0.7e6, 0.08}};
    double damp = std::exp(-0.5 * (0.01 + 0.0025 + 0.0064));
    CHECK(carrier_coupling({0, 0, 0}, modes, 1.0) == doctest::Approx(damp).epsilon(1e-12));

    // eta^2 = 0.1, n = 5: L_5(0.1) = 65.80249/120
    std::array<ModeSpec, 3> one = {ModeSpec{2.0 * M_PI * 1e6, std::sqrt(0.1)},
                                   ModeSpec{2.0 * M_PI * 1e6, 0.0},
                                   ModeSpec{2.0 * M_PI * 1e6, 0.0}};
    CHECK(carrier_coupling({5, 0, 0}, one, 1.0) == doctest::Approx(0.5216106).epsilon(1e-6));

    double x = 0.09;
    std::array<ModeSpec, 3> m3 = {ModeSpec{2.0 * M_PI * 1e6, 0.3},
                                  ModeSpec{2.0 * M_PI * 1e6, 0.0},
                                  ModeSpec{2.0 * M_PI * 1e6, 0.0}};
    CHECK(carrier_coupling({1, 0, 0}, m3, 1.0) ==
          doctest::Approx(std::exp(-0.5 * x) * (1.0 - x)).epsilon(1e-12));
    CHECK(carrier_coupling({2, 0, 0}, m3, 1.0) ==
          doctest::Approx(std::exp(-0.5 * x) * (1.0 - 2.0 * x + 0.5 * x * x)).epsilon(1e-12));

    CHECK_THROWS_AS(carrier_coupling({-1, 0, 0}, modes, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(
        carrier_coupling({0, 0, 0},
                         std::array<ModeSpec, 3>{ModeSpec{2.0 * M_PI * 1e6, 1.0},
                                                 ModeSpec{2.0 * M_PI * 1e6, 0.0},
                                                 ModeSpec{2.0 * M_PI * 1e6, 0.0}},
                         1.0),
        std::invalid_argument);
    CHECK_THROWS_AS(carrier_coupling({0, 0, 0},
                                     std::array<ModeSpec, 3>{ModeSpec{0.0, 0.1},
                                                             ModeSpec{2.0 * M_PI * 1e6, 0.0},
                                                             ModeSpec{2.0 * M_PI * 1e6, 0.0}},
                                     1.0),
                    std::invalid_argument);
}

TEST_CASE("high-order couplings hand off smoothly to the bessel limit") {
    double eta = 0.1;  // x = 0.01
    std::array<ModeSpec, 3> modes = {ModeSpec{2.0 * M_PI * 1e6, eta},
                                     ModeSpec{2.0 * M_PI * 1e6, 0.0},
                                     ModeSpec{2.0 * M_PI * 1e6, 0.0}};
    double lib = carrier_coupling({30000, 0, 0}, modes, 1.0);
    double ref = damped_laguerre(30000, eta * eta);
    CHECK(std::abs(lib - ref) < 2e-3);

    double below = carrier_coupling({19999, 0, 0}, modes, 1.0);
    double at = carrier_coupling({20000, 0, 0}, modes, 1.0);
    CHECK(std::abs(at - below) < 2e-3);
    CHECK(std::abs(below - damped_laguerre(19999, eta * eta)) < 1e-9);
}

TEST_CASE("ground-state curve is an undamped carrier rabi oscillation") {
    auto modes = paper_modes();
    double omega0 = 2.0 * M_PI * 55e3;
    auto times = make_times(60e-6, 40);
    RabiCurve c = rabi_signal(times, modes, omega0, MotionalDistribution::thermal(0.0));
    REQUIRE(c.times.size() == times.size());
    double damp = 0.0;
    for (const auto& m : modes) damp += 0.5 * m.lamb_dicke * m.lamb_dicke;
    double w = omega0 * std::exp(-damp);
    for (std::size_t i = 0; i < times.size(); ++i) {
        double s = std::sin(0.5 * w * times[i]);
        CHECK(c.excitation_probability[i] == doctest::Approx(s * s).epsilon(1e-12));
    }
    CHECK(c.shots_per_point == 0);
}

TEST_CASE("zero lamb-dicke factors give a temperature-independent carrier") {
    std::array<ModeSpec, 3> flat = {ModeSpec{2.0 * M_PI * 0.82e6, 0.0},
                                    ModeSpec{2.0 * M_PI * 1.28e6, 0.0},
                                    ModeSpec{2.0 * M_PI * 0.58e6, 0.0}};
    double omega0 = 2.0 * M_PI * 40e3;
    auto times = make_times(80e-6, 25);
    RabiCurve c = rabi_signal(times, flat, omega0, MotionalDistribution::thermal(0.5e-3));
    for (std::size_t i = 0; i < times.size(); ++i) {
        double s = std::sin(0.5 * omega0 * times[i]);
        CHECK(c.excitation_probability[i] == doctest::Approx(s * s).epsilon(1e-6));
    }
}

TEST_CASE("fock truncation is converged and refuses impossible caps") {
    auto modes = paper_modes();
    double omega0 = 2.0 * M_PI * 50e3;
    auto times = make_times(120e-6, 20);
    auto dist = MotionalDistribution::thermal(0.3e-3);

    RabiSignalOptions a;
    a.truncation = 300;
    RabiSignalOptions b;
    b.truncation = 600;
    RabiCurve ca = rabi_signal(times, modes, omega0, dist, a);
    RabiCurve cb = rabi_signal(times, modes, omega0, dist, b);
    RabiCurve cauto = rabi_signal(times, modes, omega0, dist);
    for (std::size_t i = 0; i < times.size(); ++i) {
        CHECK(std::abs(ca.excitation_probability[i] - cb.excitation_probability[i]) < 1e-6);
        CHECK(std::abs(ca.excitation_probability[i] - cauto.excitation_probability[i]) < 1e-6);
    }

    RabiSignalOptions tiny;
    tiny.truncation = 3;
    CHECK_THROWS_AS(rabi_signal(times, modes, omega0, dist, tiny), std::runtime_error);
}

TEST_CASE("thermal contrast decays toward the fully mixed line") {
    auto modes = paper_modes();
    double omega0 = 2.0 * M_PI * 50e3;
    auto times = make_times(300e-6, 600);
    RabiCurve c = rabi_signal(times, modes, omega0, MotionalDistribution::thermal(0.3e-3));

    for (double p : c.excitation_probability) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    // windowed contrast must fall off and end near P = 1/2
    const int windows = 6;
    std::vector<double> peak(windows, 0.0);
    for (std::size_t i = 0; i < times.size(); ++i) {
        int w = std::min<int>(windows - 1, static_cast<int>(windows * i / times.size()));
        peak[w] = std::max(peak[w], std::abs(c.excitation_probability[i] - 0.5));
    }
    for (int w = 1; w < windows; ++w) CHECK(peak[w] <= peak[w - 1] + 0.02);
    CHECK(peak[0] > 0.4);
    CHECK(peak[windows - 1] < 0.1);
}

TEST_CASE("synthesis matches a direct sum over the fock box") {
    std::array<ModeSpec, 3> modes = {ModeSpec{2.0 * M_PI * 1.0e6, 0.12},
                                     ModeSpec{2.0 * M_PI * 1.3e6, 0.07},
                                     ModeSpec{2.0 * M_PI * 0.7e6, 0.15}};
    double omega0 = 2.0 * M_PI * 45e3;
    double temperature = 20e-6;
    auto times = make_times(70e-6, 8);
    RabiCurve c = rabi_signal(times, modes, omega0, MotionalDistribution::thermal(temperature));

    std::array<double, 3> r{};
    for (int j = 0; j < 3; ++j)
        r[j] = std::exp(-k::hbar * modes[j].frequency / (k::k_boltzmann * temperature));
    for (std::size_t i = 0; i < times.size(); ++i) {
        double p = 0.0;
        for (int n0 = 0; n0 <= 25; ++n0)
            for (int n1 = 0; n1 <= 25; ++n1)
                for (int n2 = 0; n2 <= 25; ++n2) {
                    double w = (1.0 - r[0]) * std::pow(r[0], n0) * (1.0 - r[1]) *
                               std::pow(r[1], n1) * (1.0 - r[2]) * std::pow(r[2], n2);
                    double cf = damped_laguerre(n0, modes[0].lamb_dicke * modes[0].lamb_dicke) *
                                damped_laguerre(n1, modes[1].lamb_dicke * modes[1].lamb_dicke) *
                                damped_laguerre(n2, modes[2].lamb_dicke * modes[2].lamb_dicke);
                    double s = std::sin(0.5 * omega0 * cf * times[i]);
                    p += w * s * s;
                }
        CHECK(c.excitation_probability[i] == doctest::Approx(p).epsilon(1e-6));
    }
}

TEST_CASE("classical energy marginalization reproduces thermal occupations") {
    auto modes = paper_modes();
    double omega0 = 2.0 * M_PI * 50e3;
    auto times = make_times(150e-6, 30);
    double temperature = 0.3e-3;

    RabiCurve th = rabi_signal(times, modes, omega0, MotionalDistribution::thermal(temperature));
    RabiCurve mb =
        rabi_signal(times, modes, omega0, MotionalDistribution::maxwell_boltzmann(temperature));
    for (std::size_t i = 0; i < times.size(); ++i)
        CHECK(std::abs(th.excitation_probability[i] - mb.excitation_probability[i]) < 0.02);

    RabiCurve mb2 =
        rabi_signal(times, modes, omega0, MotionalDistribution::maxwell_boltzmann(temperature));
    for (std::size_t i = 0; i < times.size(); ++i)
        CHECK(mb.excitation_probability[i] == mb2.excitation_probability[i]);
}

TEST_CASE("power-law curves sit between coherent and thermal behaviour") {
    auto modes = paper_modes();
    double omega0 = 2.0 * M_PI * 50e3;
    std::vector<double> times = {0.0};
    {
        auto rest = make_times(240e-6, 240);
        times.insert(times.end(), rest.begin(), rest.end());
    }

    // equal mean total energy E/kB = 9e-4 K: the tsallis mean is 3an/(n-4) = 9a,
    // the classical three-mode thermal mean is 3 kB T
    double mean = 9e-4;
    RabiCurve ts = rabi_signal(times, modes, omega0,
                               MotionalDistribution::tsallis(6.0, k::k_boltzmann * mean / 9.0));
    RabiCurve th = rabi_signal(times, modes, omega0, MotionalDistribution::thermal(mean / 3.0));
    CHECK(ts.excitation_probability[0] == 0.0);
    for (double p : ts.excitation_probability) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    // equal mean energy, broader spread: the first-peak contrast must be lower
    double pk_ts = *std::max_element(ts.excitation_probability.begin(),
                                     ts.excitation_probability.begin() + 40);
    double pk_th = *std::max_element(th.excitation_probability.begin(),
                                     th.excitation_probability.begin() + 40);
    CHECK(pk_ts < pk_th - 0.01);

    // n -> inf limit is the classical three-mode thermal curve
    RabiCurve big = rabi_signal(times, modes, omega0,
                                MotionalDistribution::tsallis(500.0, k::k_boltzmann * 1e-4));
    RabiCurve ref = rabi_signal(
        times, modes, omega0,
        MotionalDistribution::maxwell_boltzmann(1e-4 * 500.0 / (500.0 - 4.0) * (3.0 / 3.0)));
    for (std::size_t i = 0; i < times.size(); ++i)
        CHECK(std::abs(big.excitation_probability[i] - ref.excitation_probability[i]) < 0.02);
}

TEST_CASE("thermal fit recovers the synthesis parameters exactly on clean data") {
    auto modes = paper_modes();
    double omega0 = 2.0 * M_PI * 60e3;
    double temperature = 1e-4;
    auto times = make_times(50e-6, 24);
    RabiCurve clean = rabi_signal(times, modes, omega0, MotionalDistribution::thermal(temperature));

    RabiFit fit = fit_rabi_curve(clean, modes, RabiModel::thermal, light_fit_options());
    CHECK(fit.converged);
    CHECK(fit.omega0 == doctest::Approx(omega0).epsilon(1e-3));
    CHECK(fit.temperature == doctest::Approx(temperature).epsilon(1e-2));
    CHECK(fit.chi2 < 1e-3);
    CHECK(fit.dof == 22);
    CHECK(fit.log_likelihood < 0.0);
}

TEST_CASE("thermal fit tracks projection noise and reports an uncertainty") {
    auto modes = paper_modes();
    double omega0 = 2.0 * M_PI * 60e3;
    double temperature = 1e-4;
    auto times = make_times(50e-6, 24);
    RabiCurve clean = rabi_signal(times, modes, omega0, MotionalDistribution::thermal(temperature));
    Rng rng(4242);
    RabiCurve noisy = sample_shots(clean, 170, rng);
    CHECK(noisy.shots_per_point == 170);

    RabiFit fit = fit_rabi_curve(noisy, modes, RabiModel::thermal, light_fit_options());
    CHECK(fit.converged);
    CHECK(fit.temperature == doctest::Approx(temperature).epsilon(0.1));
    CHECK(fit.omega0 == doctest::Approx(omega0).epsilon(0.02));
    CHECK(fit.temperature_sigma > 0.0);
    CHECK(fit.temperature_sigma < 0.3 * temperature);
    CHECK(std::abs(fit.temperature - temperature) <
          std::max(4.0 * fit.temperature_sigma, 0.1 * temperature));
    CHECK(fit.chi2 / fit.dof < 2.0);
}

TEST_CASE("power-law fit round-trips a heavy-tailed curve") {
    auto modes = paper_modes();
    double omega0 = 2.0 * M_PI * 60e3;
    auto dist = MotionalDistribution::tsallis(4.0, k::k_boltzmann * 3e-5);
    std::vector<double> times = make_times(33e-6, 16);
    {
        auto late = make_times(200e-6, 8);
        for (double t : late)
            if (t > times.back()) times.push_back(t);
    }
    RabiCurve clean = rabi_signal(times, modes, omega0, dist);
    Rng rng(777);
    RabiCurve noisy = sample_shots(clean, 170, rng);

    RabiFit fit = fit_rabi_curve(noisy, modes, RabiModel::tsallis, light_fit_options());
    CHECK(fit.converged);
    CHECK(fit.omega0 == doctest::Approx(omega0).epsilon(0.05));
    CHECK(fit.tsallis.n > 3.2);
    CHECK(fit.tsallis.n < 6.5);
    CHECK(fit.chi2 / fit.dof < 3.0);
}

TEST_CASE("model comparison prefers the distribution that generated the data") {
    auto modes = paper_modes();
    double omega0 = 2.0 * M_PI * 60e3;
    auto dist = MotionalDistribution::tsallis(4.0, k::k_boltzmann * 3e-5);
    std::vector<double> times = make_times(33e-6, 16);
    {
        auto late = make_times(200e-6, 8);
        for (double t : late)
            if (t > times.back()) times.push_back(t);
    }
    RabiCurve clean = rabi_signal(times, modes, omega0, dist);
    Rng rng(99);
    RabiCurve noisy = sample_shots(clean, 170, rng);

    RabiFit ts = fit_rabi_curve(noisy, modes, RabiModel::tsallis, light_fit_options());
    RabiFit th = fit_rabi_curve(noisy, modes, RabiModel::thermal, light_fit_options());
    CHECK(ts.log_likelihood > th.log_likelihood + 2.0);
    CHECK(th.chi2 > ts.chi2);
}

TEST_CASE("classical-marginalization fit agrees with the thermal fit") {
    auto modes = paper_modes();
    double omega0 = 2.0 * M_PI * 60e3;
    double temperature = 1e-4;
    auto times = make_times(50e-6, 24);
    RabiCurve clean = rabi_signal(times, modes, omega0, MotionalDistribution::thermal(temperature));

    RabiFit fit = fit_rabi_curve(clean, modes, RabiModel::maxwell_boltzmann, light_fit_options());
    CHECK(fit.converged);
    CHECK(fit.temperature == doctest::Approx(temperature).epsilon(0.1));
}

TEST_CASE("shot sampling is binomial, deterministic, and quantized") {
    auto modes = paper_modes();
    double omega0 = 2.0 * M_PI * 60e3;
    auto times = make_times(50e-6, 24);
    RabiCurve clean = rabi_signal(times, modes, omega0, MotionalDistribution::thermal(1e-4));

    Rng r1(7), r2(7);
    RabiCurve a = sample_shots(clean, 100, r1);
    RabiCurve b = sample_shots(clean, 100, r2);
    for (std::size_t i = 0; i < a.excitation_probability.size(); ++i) {
        CHECK(a.excitation_probability[i] == b.excitation_probability[i]);
        double counts = a.excitation_probability[i] * 100.0;
        CHECK(std::abs(counts - std::round(counts)) < 1e-9);
        CHECK(a.excitation_probability[i] >= 0.0);
        CHECK(a.excitation_probability[i] <= 1.0);
    }

    // many resamples of one point average to the ideal probability
    RabiCurve flatwave;
    flatwave.times = make_times(1e-3, 200);
    flatwave.excitation_probability.assign(200, 0.3);
    Rng r3(515);
    RabiCurve s = sample_shots(flatwave, 100, r3);
    double mean = 0.0;
    for (double p : s.excitation_probability) mean += p;
    mean /= 200.0;
    CHECK(mean == doctest::Approx(0.3).epsilon(0.05));

    CHECK_THROWS_AS(sample_shots(clean, 0, r1), std::invalid_argument);
}

TEST_CASE("curve and option validation rejects malformed input") {
    auto modes = paper_modes();
    double omega0 = 2.0 * M_PI * 50e3;
    auto times = make_times(50e-6, 12);

    CHECK_THROWS_AS(rabi_signal(std::vector<double>{2e-6, 1e-6}, modes, omega0,
                                MotionalDistribution::thermal(1e-4)),
                    std::invalid_argument);
    CHECK_THROWS_AS(rabi_signal(std::vector<double>{}, modes, omega0,
                                MotionalDistribution::thermal(1e-4)),
                    std::invalid_argument);
    CHECK_THROWS_AS(rabi_signal(times, modes, 0.0, MotionalDistribution::thermal(1e-4)),
                    std::invalid_argument);
    CHECK_THROWS_AS(rabi_signal(times, modes, omega0, MotionalDistribution::thermal(-1e-4)),
                    std::invalid_argument);
    CHECK_THROWS_AS(rabi_signal(times, modes, omega0, MotionalDistribution::tsallis(2.9, 1e-27)),
                    std::invalid_argument);
    {
        RabiSignalOptions o;
        o.mc_samples = 0;
        CHECK_THROWS_AS(
            rabi_signal(times, modes, omega0, MotionalDistribution::maxwell_boltzmann(1e-4), o),
            std::invalid_argument);
    }

    RabiCurve curve = rabi_signal(times, modes, omega0, MotionalDistribution::thermal(1e-4));
    RabiCurve short_curve = curve;
    short_curve.times.resize(9);
    short_curve.excitation_probability.resize(9);
    CHECK_THROWS_AS(fit_rabi_curve(short_curve, modes, RabiModel::thermal),
                    std::invalid_argument);

    RabiCurve bad = curve;
    bad.excitation_probability[3] = 1.4;
    CHECK_THROWS_AS(fit_rabi_curve(bad, modes, RabiModel::thermal), std::invalid_argument);

    RabiCurve mismatched = curve;
    mismatched.excitation_probability.pop_back();
    CHECK_THROWS_AS(mismatched.validate(), std::invalid_argument);
}
