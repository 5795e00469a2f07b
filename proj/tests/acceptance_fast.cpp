#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "acceptance_support.hpp"

#include "ionbath/config_io.hpp"
#include "ionbath/constants.hpp"
#include "ionbath/emm.hpp"
#include "ionbath/energy_stats.hpp"
#include "ionbath/rng.hpp"
#include "ionbath/thermometry.hpp"

using namespace ionbath;
using acceptance::fmt;
using acceptance::within;
namespace k = ionbath::constants;

namespace {

constexpr double two_pi = 2.0 * M_PI;

// ---- criterion 4: emm conversion chain -------------------------------------

bool check_emm_numbers(std::string& detail) {
    const double m = k::mass_sr88;
    const double rf = two_pi * 26.51e6;

    double t_37 = emm_temperature_from_amplitude(3.7e-9, m, rf);
    double t_015 = emm_temperature_from_amplitude(0.15e-9, m, rf);
    double f_37 = rf_field_from_amplitude(3.7e-9, m, rf);
    double f_per_nm = rf_field_from_amplitude(1e-9, m, rf);

    bool ok_t37 = within(t_37, 1.0e-3, 0.02);
    bool ok_t015 = within(t_015, 1.5e-6, 0.05);
    bool ok_f37 = within(f_37, 94.0, 0.02);
    bool ok_fnm = within(f_per_nm, 25.0, 0.02);

    detail = fmt(
        "emm_energy(3.7 nm) = %.4f mK (want 1.0 +- 2%%: %s), "
        "emm_energy(0.15 nm) = %.4f uK (want 1.5 +- 5%%: %s), "
        "rf_field(3.7 nm) = %.2f V/m (want 94 +- 2%%: %s), "
        "%.4f V/m per nm (want 25 +- 2%%: %s)",
        t_37 * 1e3, ok_t37 ? "ok" : "OUT", t_015 * 1e6, ok_t015 ? "ok" : "OUT", f_37,
        ok_f37 ? "ok" : "OUT", f_per_nm, ok_fnm ? "ok" : "OUT");
    return ok_t37 && ok_t015 && ok_f37 && ok_fnm;
}

// ---- criterion 5: modulation index chain ------------------------------------

bool check_modulation_chain(std::string& detail) {
    LaserProbe probe;
    probe.wavelength = 674e-9;
    probe.direction = {0.0, 0.0, 1.0};

    EmmVector emm;
    emm.quadrature = {0.0, 0.0, 3.7e-9};
    double beta_37 = modulation_index(probe, emm).beta;
    double amp_035 = 0.035 / probe.wavenumber();

    bool ok_beta = within(beta_37, 0.035, 0.02);
    bool ok_amp = within(amp_035, 3.7e-9, 0.02);

    double worst = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        double beta = i / 2000.0;
        double back = beta_from_coupling_ratio(coupling_ratio_from_beta(beta));
        worst = std::max(worst, std::abs(back - beta));
    }
    bool ok_round = worst <= 1e-9;

    detail = fmt(
        "beta(3.7 nm axial) = %.6f (want 0.035 +- 2%%: %s), "
        "amplitude(beta = 0.035) = %.4f nm (want 3.7 +- 2%%: %s), "
        "bessel round-trip worst |d beta| = %.2e on [0,1] (%s)",
        beta_37, ok_beta ? "ok" : "OUT", amp_035 * 1e9, ok_amp ? "ok" : "OUT", worst,
        ok_round ? "ok" : "OUT");
    return ok_beta && ok_amp && ok_round;
}

// ---- criterion 6: power-law distribution analytics ---------------------------

// Integrates f(e) de over (0, inf) with e = a n (1-u^2)/u^2; the u-weight
// 2 a n / u^3 keeps the integrand polynomial-smooth at both endpoints for
// n > 4.
double tsallis_integral(const TsallisParams& p, bool weight_by_energy) {
    const int intervals = 200000;  // even
    const double h = 1.0 / intervals;
    auto integrand = [&](double u) -> double {
        if (u <= 0.0 || u >= 1.0) return 0.0;
        double t = 1.0 - u * u;
        double e = p.a * p.n * t / (u * u);
        double w = 2.0 * p.a * p.n / (u * u * u);
        double f = tsallis_pdf(e, p) * w;
        return weight_by_energy ? f * e : f;
    };
    double sum = integrand(0.0) + integrand(1.0);
    for (int i = 1; i < intervals; ++i)
        sum += integrand(i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

double log_slope(const TsallisParams& p, double e) {
    const double step = 1e-3;
    double up = std::log(tsallis_pdf(e * (1.0 + step), p));
    double down = std::log(tsallis_pdf(e / (1.0 + step), p));
    return (up - down) / (2.0 * std::log1p(step));
}

bool check_tsallis_analytics(std::string& detail) {
    bool ok = true;
    detail.clear();
    for (double n : {4.5, 5.0, 8.0}) {
        TsallisParams p;
        p.n = n;
        p.a = k::k_boltzmann * 1e-4;

        double norm = tsallis_integral(p, false);
        double mean = tsallis_integral(p, true);
        double mean_ref = 3.0 * p.a * p.n / (p.n - 4.0);
        double slope_low = log_slope(p, p.a * 1e-6);
        double slope_high = log_slope(p, p.a * p.n * 1e6);

        bool ok_norm = std::abs(norm - 1.0) <= 1e-6;
        bool ok_mean = within(mean, mean_ref, 1e-4);
        bool ok_low = std::abs(slope_low - 2.0) <= 0.01;
        bool ok_high = std::abs(slope_high - (2.0 - n)) <= 0.01;
        ok = ok && ok_norm && ok_mean && ok_low && ok_high;

        if (!detail.empty()) detail += "; ";
        detail += fmt("n=%.1f: norm-1 = %.1e (%s), mean rel err = %.1e (%s), "
                      "slopes %.4f / %.4f (%s/%s)",
                      n, norm - 1.0, ok_norm ? "ok" : "OUT",
                      std::abs(mean - mean_ref) / mean_ref, ok_mean ? "ok" : "OUT",
                      slope_low, slope_high, ok_low ? "ok" : "OUT", ok_high ? "ok" : "OUT");
    }
    return ok;
}

// ---- criterion 8: thermometry round trip -------------------------------------

bool check_thermometry_roundtrip(std::string& detail) {
    auto modes = resolve_modes(default_config());
    const double omega0 = two_pi * 60e3;

    // heavy-tailed source: divergent-mean power law
    std::vector<double> times;
    for (int i = 0; i < 16; ++i) times.push_back(33e-6 * (i + 1) / 16.0);
    for (int i = 0; i < 8; ++i) times.push_back(33e-6 + (200e-6 - 33e-6) * (i + 1) / 8.0);

    auto ts_dist = MotionalDistribution::tsallis(4.0, k::k_boltzmann * 3e-5);
    RabiCurve ideal = rabi_signal(times, modes, omega0, ts_dist);
    Rng rng(777);
    RabiCurve measured = sample_shots(ideal, 170, rng);

    RabiFit fit_th = fit_rabi_curve(measured, modes, RabiModel::thermal);
    RabiFit fit_ts = fit_rabi_curve(measured, modes, RabiModel::tsallis);
    double chi_th = fit_th.dof > 0 ? fit_th.chi2 / fit_th.dof : 1e99;
    double chi_ts = fit_ts.dof > 0 ? fit_ts.chi2 / fit_ts.dof : 1e99;
    bool ok_class = chi_ts < chi_th;

    // clean thermal source recovers its temperature
    std::vector<double> t2;
    for (int i = 0; i < 24; ++i) t2.push_back(50e-6 * (i + 1) / 24.0);
    RabiCurve ideal2 =
        rabi_signal(t2, modes, omega0, MotionalDistribution::thermal(3e-4));
    Rng rng2(4242);
    RabiCurve measured2 = sample_shots(ideal2, 170, rng2);
    RabiFit fit2 = fit_rabi_curve(measured2, modes, RabiModel::thermal);
    bool ok_temp = fit2.converged && within(fit2.temperature, 3e-4, 0.10);

    detail = fmt(
        "tsallis(n=4) curve at 170 shots: chi2/dof tsallis %.3f vs thermal %.3f (%s); "
        "thermal 0.3 mK recovered as %.4f mK +- %.4f (%s)",
        chi_ts, chi_th, ok_class ? "tsallis preferred" : "MISCLASSIFIED",
        fit2.temperature * 1e3, fit2.temperature_sigma * 1e3,
        ok_temp ? "ok" : "OUT");
    return ok_class && ok_temp;
}

}  // namespace

int main() {
    return acceptance::run_all({
        {4, "micromotion energy and field conversions", check_emm_numbers},
        {5, "modulation index chain and bessel inversion", check_modulation_chain},
        {6, "power-law distribution analytics", check_tsallis_analytics},
        {8, "thermometry classification and recovery", check_thermometry_roundtrip},
    });
}
