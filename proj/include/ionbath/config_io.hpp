#pragma once

#include <array>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "ionbath/collision_mc.hpp"
#include "ionbath/polarization_md.hpp"
#include "ionbath/thermometry.hpp"
#include "ionbath/trap.hpp"
#include "ionbath/vec.hpp"

namespace ionbath {

struct ProbeSection {
    double wavelength = 674e-9;  // m
    Vec3 direction{std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0, 0.0};
};

struct HistogramSection {
    int bins = 48;
    std::string energy_scale = "bath";  // bath | emm | cetina | joule
    std::optional<double> lo;           // scale units; absent = from data
    std::optional<double> hi;
};

struct TailFitSection {
    std::optional<double> threshold;    // scale units
    std::optional<double> upper_bound;  // scale units
    bool full_fit = true;
};

struct RabiSection {
    double omega0 = 2.0 * std::numbers::pi * 60e3;  // rad/s
    std::optional<std::array<double, 3>> lamb_dicke;  // absent: from probe geometry
    MotionalDistribution distribution = MotionalDistribution::thermal(0.3e-3);
    double time_end = 120e-6;  // s
    int points = 60;
    int shots = 0;  // 0: noiseless curve
};

// Whole-run configuration, SI units internally. The JSON boundary uses
// unit-suffixed keys (rf_frequency_mhz, temperature_uk, c4_au, ...).
struct Config {
    TrapConfig trap;
    bool axial_rf_free = true;  // convention used when solving from frequencies
    SpeciesPair species;
    BathConfig bath;
    McRunConfig hardsphere;
    MdConfig polarization;
    HistogramSection histogram;
    TailFitSection tail_fit;
    ProbeSection probe;
    RabiSection rabi;
};

// Reference trap (omega/2pi = (0.82, 1.28, 0.58) MHz at Omega/2pi = 26.51
// MHz), Sr-88 ion in a Rb-87 bath with the literature C4, 6 uK cloud at
// 1e12 cm^-3.
Config default_config();

// Parse a JSON config; keys overlay default_config(). Unknown keys are
// rejected. Throws std::invalid_argument with a key path on any error.
Config parse_config(const std::string& json_text);
Config load_config(const std::filesystem::path& path);

// Canonical resolved dump: reloadable, plus a "derived" info block that the
// loader ignores.
std::string config_to_json(const Config& cfg);
void save_config(const std::filesystem::path& path, const Config& cfg);

// Energy scale for histogram normalization: "joule" = 1 J, "bath" = kB T_a,
// "emm" = excess-micromotion energy of the trap, "cetina" = the
// trap-collision energy scale at the geometric mean of the radial secular
// frequencies and the largest |q|.
double resolve_energy_scale(const Config& cfg, std::string_view name);

// Lamb-Dicke factors eta_j = k |probe_j| sqrt(hbar / 2 m omega_j) unless the
// rabi section fixes them explicitly.
std::array<double, 3> resolve_lamb_dicke(const Config& cfg);
std::array<ModeSpec, 3> resolve_modes(const Config& cfg);

}  // namespace ionbath
