#include "ionbath/config_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "ionbath/constants.hpp"

namespace ionbath {

namespace {

using Json = nlohmann::ordered_json;
namespace k = ionbath::constants;

constexpr double two_pi = 2.0 * std::numbers::pi;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument("config: " + path + ": " + what);
}

void check_keys(const Json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) {
                known = true;
                break;
            }
        if (!known) fail(path + "." + it.key(), "unknown key");
    }
}

double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

std::int64_t as_integer(const Json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<std::int64_t>();
}

bool as_bool(const Json& v, const std::string& path) {
    if (!v.is_boolean()) fail(path, "expected a boolean");
    return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

std::array<double, 3> as_triple(const Json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3) fail(path, "expected an array of 3 numbers");
    std::array<double, 3> out{};
    for (int j = 0; j < 3; ++j) out[j] = as_number(v[j], path);
    return out;
}

Vec3 as_vec3(const Json& v, const std::string& path) {
    auto t = as_triple(v, path);
    return {t[0], t[1], t[2]};
}

// applies f(value, key_path) when the key is present
template <class F>
void with(const Json& obj, const char* key, const std::string& path, F&& f) {
    auto it = obj.find(key);
    if (it != obj.end()) f(*it, path + "." + key);
}

InitialEnergy parse_initial(const Json& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected an object");
    check_keys(v, path, {"kind", "temperature_uk", "total_energy_uk"});
    if (!v.contains("kind")) fail(path, "missing kind");
    std::string kind = as_string(v.at("kind"), path + ".kind");
    if (kind == "ground") {
        if (v.size() != 1) fail(path, "ground takes no parameters");
        return InitialEnergy::ground();
    }
    if (kind == "maxwell_boltzmann") {
        if (!v.contains("temperature_uk")) fail(path, "missing temperature_uk");
        return InitialEnergy::maxwell_boltzmann(
            1e-6 * as_number(v.at("temperature_uk"), path + ".temperature_uk"));
    }
    if (kind == "delta") {
        if (!v.contains("total_energy_uk")) fail(path, "missing total_energy_uk");
        return InitialEnergy::delta(
            k::k_boltzmann * 1e-6 *
            as_number(v.at("total_energy_uk"), path + ".total_energy_uk"));
    }
    fail(path + ".kind", "expected ground, maxwell_boltzmann or delta");
}

Json dump_initial(const InitialEnergy& e) {
    Json v;
    switch (e.kind) {
        case InitialEnergy::Kind::ground:
            v["kind"] = "ground";
            break;
        case InitialEnergy::Kind::maxwell_boltzmann:
            v["kind"] = "maxwell_boltzmann";
            v["temperature_uk"] = e.value * 1e6;
            break;
        case InitialEnergy::Kind::delta:
            v["kind"] = "delta";
            v["total_energy_uk"] = e.value / k::k_boltzmann * 1e6;
            break;
    }
    return v;
}

MotionalDistribution parse_distribution(const Json& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected an object");
    check_keys(v, path, {"kind", "temperature_uk", "n", "a_uk"});
    if (!v.contains("kind")) fail(path, "missing kind");
    std::string kind = as_string(v.at("kind"), path + ".kind");
    if (kind == "thermal" || kind == "maxwell_boltzmann") {
        if (!v.contains("temperature_uk")) fail(path, "missing temperature_uk");
        double t = 1e-6 * as_number(v.at("temperature_uk"), path + ".temperature_uk");
        return kind == "thermal" ? MotionalDistribution::thermal(t)
                                 : MotionalDistribution::maxwell_boltzmann(t);
    }
    if (kind == "tsallis") {
        if (!v.contains("n") || !v.contains("a_uk")) fail(path, "tsallis needs n and a_uk");
        return MotionalDistribution::tsallis(
            as_number(v.at("n"), path + ".n"),
            k::k_boltzmann * 1e-6 * as_number(v.at("a_uk"), path + ".a_uk"));
    }
    fail(path + ".kind", "expected thermal, tsallis or maxwell_boltzmann");
}

Json dump_distribution(const MotionalDistribution& d) {
    Json v;
    switch (d.kind) {
        case MotionalDistribution::Kind::thermal:
            v["kind"] = "thermal";
            v["temperature_uk"] = d.temperature * 1e6;
            break;
        case MotionalDistribution::Kind::maxwell_boltzmann:
            v["kind"] = "maxwell_boltzmann";
            v["temperature_uk"] = d.temperature * 1e6;
            break;
        case MotionalDistribution::Kind::tsallis:
            v["kind"] = "tsallis";
            v["n"] = d.tsallis_params.n;
            v["a_uk"] = d.tsallis_params.a / k::k_boltzmann * 1e6;
            break;
    }
    return v;
}

void parse_trap(const Json& v, Config& cfg, const std::string& path) {
    check_keys(v, path,
               {"rf_frequency_mhz", "secular_frequencies_mhz", "axial_rf_free", "mathieu_a",
                "mathieu_q", "emm_dc_displacement_nm", "emm_quadrature_amplitude_nm"});

    bool has_freqs = v.contains("secular_frequencies_mhz");
    bool has_a = v.contains("mathieu_a");
    bool has_q = v.contains("mathieu_q");
    if (has_a != has_q) fail(path, "mathieu_a and mathieu_q must come together");
    if (has_a && has_freqs)
        fail(path, "give either secular_frequencies_mhz or mathieu_a/mathieu_q, not both");

    double rf = cfg.trap.rf_frequency;
    with(v, "rf_frequency_mhz", path,
         [&](const Json& x, const std::string& p) { rf = two_pi * 1e6 * as_number(x, p); });
    with(v, "axial_rf_free", path,
         [&](const Json& x, const std::string& p) { cfg.axial_rf_free = as_bool(x, p); });

    if (has_a) {
        cfg.trap.rf_frequency = rf;
        cfg.trap.a = as_triple(v.at("mathieu_a"), path + ".mathieu_a");
        cfg.trap.q = as_triple(v.at("mathieu_q"), path + ".mathieu_q");
    } else if (has_freqs || v.contains("rf_frequency_mhz") || v.contains("axial_rf_free")) {
        std::array<double, 3> w{two_pi * 0.82e6, two_pi * 1.28e6, two_pi * 0.58e6};
        if (has_freqs) {
            w = as_triple(v.at("secular_frequencies_mhz"), path + ".secular_frequencies_mhz");
            for (double& x : w) x *= two_pi * 1e6;
        }
        TrapConfig solved = mathieu_from_frequencies(w, rf, cfg.axial_rf_free);
        solved.emm_dc_displacement = cfg.trap.emm_dc_displacement;
        solved.emm_quadrature_amplitude = cfg.trap.emm_quadrature_amplitude;
        cfg.trap = solved;
    }

    with(v, "emm_dc_displacement_nm", path, [&](const Json& x, const std::string& p) {
        auto t = as_triple(x, p);
        for (int j = 0; j < 3; ++j) cfg.trap.emm_dc_displacement[j] = 1e-9 * t[j];
    });
    with(v, "emm_quadrature_amplitude_nm", path, [&](const Json& x, const std::string& p) {
        auto t = as_triple(x, p);
        for (int j = 0; j < 3; ++j) cfg.trap.emm_quadrature_amplitude[j] = 1e-9 * t[j];
    });
}

void parse_species(const Json& v, Config& cfg, const std::string& path) {
    check_keys(v, path, {"ion_mass_amu", "atom_mass_amu", "c4_au"});
    with(v, "ion_mass_amu", path, [&](const Json& x, const std::string& p) {
        cfg.species.ion_mass = k::atomic_mass_unit * as_number(x, p);
    });
    with(v, "atom_mass_amu", path, [&](const Json& x, const std::string& p) {
        cfg.species.atom_mass = k::atomic_mass_unit * as_number(x, p);
    });
    with(v, "c4_au", path, [&](const Json& x, const std::string& p) {
        cfg.species.c4 = k::c4_atomic_unit * as_number(x, p);
    });
}

void parse_bath(const Json& v, Config& cfg, const std::string& path) {
    check_keys(v, path,
               {"temperature_uk", "density_per_cm3", "cloud_sigma_um", "cloud_center_um"});
    with(v, "temperature_uk", path, [&](const Json& x, const std::string& p) {
        cfg.bath.temperature = 1e-6 * as_number(x, p);
    });
    with(v, "density_per_cm3", path, [&](const Json& x, const std::string& p) {
        cfg.bath.density = 1e6 * as_number(x, p);
    });
    with(v, "cloud_sigma_um", path, [&](const Json& x, const std::string& p) {
        if (x.is_null()) {
            cfg.bath.cloud_sigma.reset();
        } else {
            Vec3 s = as_vec3(x, p);
            cfg.bath.cloud_sigma = Vec3{1e-6 * s.x, 1e-6 * s.y, 1e-6 * s.z};
        }
    });
    with(v, "cloud_center_um", path, [&](const Json& x, const std::string& p) {
        Vec3 c = as_vec3(x, p);
        cfg.bath.cloud_center = Vec3{1e-6 * c.x, 1e-6 * c.y, 1e-6 * c.z};
    });
}

void parse_hardsphere(const Json& v, Config& cfg, const std::string& path) {
    check_keys(v, path,
               {"n_realizations", "collisions_per_realization", "mean_collision_interval_us",
                "initial_energy", "master_seed", "record_mode", "add_emm_energy"});
    McRunConfig& run = cfg.hardsphere;
    with(v, "n_realizations", path,
         [&](const Json& x, const std::string& p) { run.n_realizations = as_integer(x, p); });
    with(v, "collisions_per_realization", path, [&](const Json& x, const std::string& p) {
        run.collisions_per_realization = static_cast<int>(as_integer(x, p));
    });
    with(v, "mean_collision_interval_us", path, [&](const Json& x, const std::string& p) {
        if (x.is_null())
            run.mean_collision_interval = 0.0;  // resolved below from the Langevin rate
        else
            run.mean_collision_interval = 1e-6 * as_number(x, p);
    });
    with(v, "initial_energy", path,
         [&](const Json& x, const std::string& p) { run.initial = parse_initial(x, p); });
    with(v, "master_seed", path, [&](const Json& x, const std::string& p) {
        run.master_seed = static_cast<std::uint64_t>(as_integer(x, p));
    });
    with(v, "record_mode", path, [&](const Json& x, const std::string& p) {
        std::string mode = as_string(x, p);
        if (mode == "final_energy")
            run.record_mode = RecordMode::final_energy;
        else if (mode == "full_trace")
            run.record_mode = RecordMode::full_trace;
        else
            fail(p, "expected final_energy or full_trace");
    });
    with(v, "add_emm_energy", path,
         [&](const Json& x, const std::string& p) { run.add_emm_energy = as_bool(x, p); });
}

void parse_polarization(const Json& v, Config& cfg, const std::string& path) {
    check_keys(v, path,
               {"sphere_radius_um", "contact_radius_nm", "langevin_radius_factor",
                "steps_per_rf", "step_policy", "shrink_radius_nm", "min_step_factor",
                "mean_langevin_collisions", "fixed_collision_target", "n_realizations",
                "master_seed", "initial_energy", "rf_field_v_per_m", "contact_model",
                "event_gating", "trigger_bc_factor", "trigger_exit_factor", "scan_slack_nm",
                "max_steps_per_visit", "max_scan_steps_per_visit", "max_total_visits",
                "max_rk_steps_per_realization", "max_scan_steps_per_realization"});
    MdConfig& md = cfg.polarization;
    with(v, "sphere_radius_um", path,
         [&](const Json& x, const std::string& p) { md.sphere_radius = 1e-6 * as_number(x, p); });
    with(v, "contact_radius_nm", path,
         [&](const Json& x, const std::string& p) { md.contact_radius = 1e-9 * as_number(x, p); });
    with(v, "langevin_radius_factor", path,
         [&](const Json& x, const std::string& p) { md.langevin_radius_factor = as_number(x, p); });
    with(v, "steps_per_rf", path, [&](const Json& x, const std::string& p) {
        md.steps_per_rf = static_cast<int>(as_integer(x, p));
    });
    with(v, "step_policy", path, [&](const Json& x, const std::string& p) {
        std::string policy = as_string(x, p);
        if (policy == "distance_scaled")
            md.step_policy = StepPolicy::distance_scaled;
        else if (policy == "fixed")
            md.step_policy = StepPolicy::fixed;
        else
            fail(p, "expected distance_scaled or fixed");
    });
    with(v, "shrink_radius_nm", path,
         [&](const Json& x, const std::string& p) { md.shrink_radius = 1e-9 * as_number(x, p); });
    with(v, "min_step_factor", path,
         [&](const Json& x, const std::string& p) { md.min_step_factor = as_number(x, p); });
    with(v, "mean_langevin_collisions", path, [&](const Json& x, const std::string& p) {
        md.mean_langevin_collisions = as_number(x, p);
    });
    with(v, "fixed_collision_target", path, [&](const Json& x, const std::string& p) {
        md.fixed_collision_target = as_bool(x, p);
    });
    with(v, "n_realizations", path,
         [&](const Json& x, const std::string& p) { md.n_realizations = as_integer(x, p); });
    with(v, "master_seed", path, [&](const Json& x, const std::string& p) {
        md.master_seed = static_cast<std::uint64_t>(as_integer(x, p));
    });
    with(v, "initial_energy", path,
         [&](const Json& x, const std::string& p) { md.initial = parse_initial(x, p); });
    with(v, "rf_field_v_per_m", path,
         [&](const Json& x, const std::string& p) { md.rf_field = as_vec3(x, p); });
    with(v, "contact_model", path, [&](const Json& x, const std::string& p) {
        std::string model = as_string(x, p);
        if (model == "isotropic")
            md.contact_model = ContactModel::isotropic;
        else if (model == "specular")
            md.contact_model = ContactModel::specular;
        else
            fail(p, "expected isotropic or specular");
    });
    with(v, "event_gating", path,
         [&](const Json& x, const std::string& p) { md.event_gating = as_bool(x, p); });
    with(v, "trigger_bc_factor", path,
         [&](const Json& x, const std::string& p) { md.trigger_bc_factor = as_number(x, p); });
    with(v, "trigger_exit_factor", path,
         [&](const Json& x, const std::string& p) { md.trigger_exit_factor = as_number(x, p); });
    with(v, "scan_slack_nm", path,
         [&](const Json& x, const std::string& p) { md.scan_slack = 1e-9 * as_number(x, p); });
    with(v, "max_steps_per_visit", path,
         [&](const Json& x, const std::string& p) { md.max_steps_per_visit = as_integer(x, p); });
    with(v, "max_scan_steps_per_visit", path, [&](const Json& x, const std::string& p) {
        md.max_scan_steps_per_visit = as_integer(x, p);
    });
    with(v, "max_total_visits", path,
         [&](const Json& x, const std::string& p) { md.max_total_visits = as_integer(x, p); });
    with(v, "max_rk_steps_per_realization", path, [&](const Json& x, const std::string& p) {
        md.max_rk_steps_per_realization = as_integer(x, p);
    });
    with(v, "max_scan_steps_per_realization", path, [&](const Json& x, const std::string& p) {
        md.max_scan_steps_per_realization = as_integer(x, p);
    });
}

void parse_histogram(const Json& v, Config& cfg, const std::string& path) {
    check_keys(v, path, {"bins", "energy_scale", "lo", "hi"});
    with(v, "bins", path, [&](const Json& x, const std::string& p) {
        cfg.histogram.bins = static_cast<int>(as_integer(x, p));
    });
    with(v, "energy_scale", path, [&](const Json& x, const std::string& p) {
        cfg.histogram.energy_scale = as_string(x, p);
    });
    with(v, "lo", path, [&](const Json& x, const std::string& p) {
        cfg.histogram.lo =
            x.is_null() ? std::optional<double>{} : std::optional<double>{as_number(x, p)};
    });
    with(v, "hi", path, [&](const Json& x, const std::string& p) {
        cfg.histogram.hi =
            x.is_null() ? std::optional<double>{} : std::optional<double>{as_number(x, p)};
    });
}

void parse_tail_fit(const Json& v, Config& cfg, const std::string& path) {
    check_keys(v, path, {"threshold", "upper_bound", "full_fit"});
    with(v, "threshold", path, [&](const Json& x, const std::string& p) {
        cfg.tail_fit.threshold =
            x.is_null() ? std::optional<double>{} : std::optional<double>{as_number(x, p)};
    });
    with(v, "upper_bound", path, [&](const Json& x, const std::string& p) {
        cfg.tail_fit.upper_bound =
            x.is_null() ? std::optional<double>{} : std::optional<double>{as_number(x, p)};
    });
    with(v, "full_fit", path,
         [&](const Json& x, const std::string& p) { cfg.tail_fit.full_fit = as_bool(x, p); });
}

void parse_probe(const Json& v, Config& cfg, const std::string& path) {
    check_keys(v, path, {"wavelength_nm", "direction"});
    with(v, "wavelength_nm", path, [&](const Json& x, const std::string& p) {
        cfg.probe.wavelength = 1e-9 * as_number(x, p);
    });
    with(v, "direction", path,
         [&](const Json& x, const std::string& p) { cfg.probe.direction = as_vec3(x, p); });
}

void parse_rabi(const Json& v, Config& cfg, const std::string& path) {
    check_keys(v, path,
               {"omega0_khz", "lamb_dicke", "distribution", "time_end_us", "points", "shots"});
    with(v, "omega0_khz", path, [&](const Json& x, const std::string& p) {
        cfg.rabi.omega0 = two_pi * 1e3 * as_number(x, p);
    });
    with(v, "lamb_dicke", path, [&](const Json& x, const std::string& p) {
        if (x.is_null())
            cfg.rabi.lamb_dicke.reset();
        else
            cfg.rabi.lamb_dicke = as_triple(x, p);
    });
    with(v, "distribution", path, [&](const Json& x, const std::string& p) {
        cfg.rabi.distribution = parse_distribution(x, p);
    });
    with(v, "time_end_us", path,
         [&](const Json& x, const std::string& p) { cfg.rabi.time_end = 1e-6 * as_number(x, p); });
    with(v, "points", path, [&](const Json& x, const std::string& p) {
        cfg.rabi.points = static_cast<int>(as_integer(x, p));
    });
    with(v, "shots", path, [&](const Json& x, const std::string& p) {
        cfg.rabi.shots = static_cast<int>(as_integer(x, p));
    });
}

void validate_config(const Config& cfg) {
    cfg.trap.validate();
    cfg.species.validate();
    cfg.bath.validate();
    cfg.hardsphere.validate();
    cfg.polarization.validate();
    if (cfg.histogram.bins < 4) fail("histogram.bins", "need at least 4 bins");
    const std::string& scale = cfg.histogram.energy_scale;
    if (scale != "joule" && scale != "bath" && scale != "emm" && scale != "cetina")
        fail("histogram.energy_scale", "expected joule, bath, emm or cetina");
    if (cfg.histogram.lo && cfg.histogram.hi && !(*cfg.histogram.lo < *cfg.histogram.hi))
        fail("histogram", "lo must be below hi");
    if (!(cfg.probe.wavelength > 0.0)) fail("probe.wavelength_nm", "must be positive");
    if (!(norm(cfg.probe.direction) > 0.0)) fail("probe.direction", "must be a nonzero vector");
    if (!(cfg.rabi.omega0 > 0.0)) fail("rabi.omega0_khz", "must be positive");
    if (!(cfg.rabi.time_end > 0.0)) fail("rabi.time_end_us", "must be positive");
    if (cfg.rabi.points < 1) fail("rabi.points", "must be at least 1");
    if (cfg.rabi.shots < 0) fail("rabi.shots", "must be non-negative");
    cfg.rabi.distribution.validate();
    if (cfg.rabi.lamb_dicke)
        for (double eta : *cfg.rabi.lamb_dicke)
            if (!(eta >= 0.0) || eta >= 1.0) fail("rabi.lamb_dicke", "entries must be in [0, 1)");
}

}  // namespace

Config default_config() {
    Config cfg;
    std::array<double, 3> w{two_pi * 0.82e6, two_pi * 1.28e6, two_pi * 0.58e6};
    cfg.trap = mathieu_from_frequencies(w, two_pi * 26.51e6, true);
    cfg.species =
        SpeciesPair{k::mass_sr88, k::mass_rb87, 318.8 * k::c4_atomic_unit};
    cfg.bath.temperature = 6e-6;
    cfg.bath.density = 1e18;  // 1e12 cm^-3
    cfg.hardsphere.n_realizations = 100000;
    cfg.hardsphere.master_seed = 1;
    cfg.hardsphere.mean_collision_interval =
        1.0 / (cfg.bath.density * langevin_rate_coefficient(cfg.species));
    cfg.polarization.n_realizations = 5000;
    cfg.polarization.master_seed = 1;
    return cfg;
}

Config parse_config(const std::string& json_text) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");
    check_keys(root, "config",
               {"trap", "species", "bath", "hardsphere", "polarization", "histogram",
                "tail_fit", "probe", "rabi", "derived"});

    Config cfg = default_config();
    with(root, "trap", "config",
         [&](const Json& v, const std::string& p) { parse_trap(v, cfg, p); });
    with(root, "species", "config",
         [&](const Json& v, const std::string& p) { parse_species(v, cfg, p); });
    with(root, "bath", "config",
         [&](const Json& v, const std::string& p) { parse_bath(v, cfg, p); });
    with(root, "hardsphere", "config",
         [&](const Json& v, const std::string& p) { parse_hardsphere(v, cfg, p); });
    with(root, "polarization", "config",
         [&](const Json& v, const std::string& p) { parse_polarization(v, cfg, p); });
    with(root, "histogram", "config",
         [&](const Json& v, const std::string& p) { parse_histogram(v, cfg, p); });
    with(root, "tail_fit", "config",
         [&](const Json& v, const std::string& p) { parse_tail_fit(v, cfg, p); });
    with(root, "probe", "config",
         [&](const Json& v, const std::string& p) { parse_probe(v, cfg, p); });
    with(root, "rabi", "config",
         [&](const Json& v, const std::string& p) { parse_rabi(v, cfg, p); });

    if (cfg.hardsphere.mean_collision_interval <= 0.0)
        cfg.hardsphere.mean_collision_interval =
            1.0 / (cfg.bath.density * langevin_rate_coefficient(cfg.species));

    double d = norm(cfg.probe.direction);
    if (d > 0.0) cfg.probe.direction = (1.0 / d) * cfg.probe.direction;

    validate_config(cfg);
    return cfg;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("config: cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string config_to_json(const Config& cfg) {
    Json j;
    j["trap"] = {
        {"rf_frequency_mhz", cfg.trap.rf_frequency / (two_pi * 1e6)},
        {"axial_rf_free", cfg.axial_rf_free},
        {"mathieu_a", cfg.trap.a},
        {"mathieu_q", cfg.trap.q},
        {"emm_dc_displacement_nm",
         std::array<double, 3>{1e9 * cfg.trap.emm_dc_displacement[0],
                               1e9 * cfg.trap.emm_dc_displacement[1],
                               1e9 * cfg.trap.emm_dc_displacement[2]}},
        {"emm_quadrature_amplitude_nm",
         std::array<double, 3>{1e9 * cfg.trap.emm_quadrature_amplitude[0],
                               1e9 * cfg.trap.emm_quadrature_amplitude[1],
                               1e9 * cfg.trap.emm_quadrature_amplitude[2]}},
    };
    j["species"] = {
        {"ion_mass_amu", cfg.species.ion_mass / k::atomic_mass_unit},
        {"atom_mass_amu", cfg.species.atom_mass / k::atomic_mass_unit},
        {"c4_au", cfg.species.c4 / k::c4_atomic_unit},
    };
    j["bath"] = {
        {"temperature_uk", cfg.bath.temperature * 1e6},
        {"density_per_cm3", cfg.bath.density * 1e-6},
        {"cloud_sigma_um", nullptr},
        {"cloud_center_um",
         std::array<double, 3>{1e6 * cfg.bath.cloud_center.x, 1e6 * cfg.bath.cloud_center.y,
                               1e6 * cfg.bath.cloud_center.z}},
    };
    if (cfg.bath.cloud_sigma)
        j["bath"]["cloud_sigma_um"] =
            std::array<double, 3>{1e6 * cfg.bath.cloud_sigma->x, 1e6 * cfg.bath.cloud_sigma->y,
                                  1e6 * cfg.bath.cloud_sigma->z};
    j["hardsphere"] = {
        {"n_realizations", cfg.hardsphere.n_realizations},
        {"collisions_per_realization", cfg.hardsphere.collisions_per_realization},
        {"mean_collision_interval_us", cfg.hardsphere.mean_collision_interval * 1e6},
        {"initial_energy", dump_initial(cfg.hardsphere.initial)},
        {"master_seed", cfg.hardsphere.master_seed},
        {"record_mode", cfg.hardsphere.record_mode == RecordMode::final_energy
                            ? "final_energy"
                            : "full_trace"},
        {"add_emm_energy", cfg.hardsphere.add_emm_energy},
    };
    const MdConfig& md = cfg.polarization;
    j["polarization"] = {
        {"sphere_radius_um", md.sphere_radius * 1e6},
        {"contact_radius_nm", md.contact_radius * 1e9},
        {"langevin_radius_factor", md.langevin_radius_factor},
        {"steps_per_rf", md.steps_per_rf},
        {"step_policy",
         md.step_policy == StepPolicy::distance_scaled ? "distance_scaled" : "fixed"},
        {"shrink_radius_nm", md.shrink_radius * 1e9},
        {"min_step_factor", md.min_step_factor},
        {"mean_langevin_collisions", md.mean_langevin_collisions},
        {"fixed_collision_target", md.fixed_collision_target},
        {"n_realizations", md.n_realizations},
        {"master_seed", md.master_seed},
        {"initial_energy", dump_initial(md.initial)},
        {"rf_field_v_per_m", std::array<double, 3>{md.rf_field.x, md.rf_field.y, md.rf_field.z}},
        {"contact_model",
         md.contact_model == ContactModel::isotropic ? "isotropic" : "specular"},
        {"event_gating", md.event_gating},
        {"trigger_bc_factor", md.trigger_bc_factor},
        {"trigger_exit_factor", md.trigger_exit_factor},
        {"scan_slack_nm", md.scan_slack * 1e9},
        {"max_steps_per_visit", md.max_steps_per_visit},
        {"max_scan_steps_per_visit", md.max_scan_steps_per_visit},
        {"max_total_visits", md.max_total_visits},
        {"max_rk_steps_per_realization", md.max_rk_steps_per_realization},
        {"max_scan_steps_per_realization", md.max_scan_steps_per_realization},
    };
    j["histogram"] = {
        {"bins", cfg.histogram.bins},
        {"energy_scale", cfg.histogram.energy_scale},
        {"lo", cfg.histogram.lo ? Json(*cfg.histogram.lo) : Json(nullptr)},
        {"hi", cfg.histogram.hi ? Json(*cfg.histogram.hi) : Json(nullptr)},
    };
    j["tail_fit"] = {
        {"threshold", cfg.tail_fit.threshold ? Json(*cfg.tail_fit.threshold) : Json(nullptr)},
        {"upper_bound",
         cfg.tail_fit.upper_bound ? Json(*cfg.tail_fit.upper_bound) : Json(nullptr)},
        {"full_fit", cfg.tail_fit.full_fit},
    };
    j["probe"] = {
        {"wavelength_nm", cfg.probe.wavelength * 1e9},
        {"direction",
         std::array<double, 3>{cfg.probe.direction.x, cfg.probe.direction.y,
                               cfg.probe.direction.z}},
    };
    j["rabi"] = {
        {"omega0_khz", cfg.rabi.omega0 / (two_pi * 1e3)},
        {"lamb_dicke", cfg.rabi.lamb_dicke ? Json(*cfg.rabi.lamb_dicke) : Json(nullptr)},
        {"distribution", dump_distribution(cfg.rabi.distribution)},
        {"time_end_us", cfg.rabi.time_end * 1e6},
        {"points", cfg.rabi.points},
        {"shots", cfg.rabi.shots},
    };

    auto w = secular_frequencies(cfg.trap);
    j["derived"] = {
        {"secular_frequencies_mhz",
         std::array<double, 3>{w[0] / (two_pi * 1e6), w[1] / (two_pi * 1e6),
                               w[2] / (two_pi * 1e6)}},
        {"emm_amplitude_nm", emm_amplitude(cfg.trap) * 1e9},
        {"emm_energy_uk", emm_energy(cfg.trap, cfg.species.ion_mass) / k::k_boltzmann * 1e6},
        {"langevin_rate_per_s", cfg.bath.density * langevin_rate_coefficient(cfg.species)},
    };
    try {
        j["derived"]["lamb_dicke"] = resolve_lamb_dicke(cfg);
    } catch (const std::invalid_argument&) {
        j["derived"]["lamb_dicke"] = nullptr;  // marginal axis: undefined
    }
    return j.dump(2) + "\n";
}

void save_config(const std::filesystem::path& path, const Config& cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("config: cannot write " + path.string());
    out << config_to_json(cfg);
    if (!out) throw std::runtime_error("config: write failed for " + path.string());
}

double resolve_energy_scale(const Config& cfg, std::string_view name) {
    double e = 0.0;
    if (name == "joule") {
        return 1.0;
    } else if (name == "bath") {
        e = k::k_boltzmann * cfg.bath.temperature;
    } else if (name == "emm") {
        e = emm_energy(cfg.trap, cfg.species.ion_mass);
    } else if (name == "cetina") {
        auto w = secular_frequencies(cfg.trap);
        double q = std::max({std::abs(cfg.trap.q[0]), std::abs(cfg.trap.q[1]),
                             std::abs(cfg.trap.q[2])});
        e = cetina_energy_scale(cfg.species, std::sqrt(w[0] * w[1]), q);
    } else {
        throw std::invalid_argument("config: unknown energy scale '" + std::string(name) + "'");
    }
    if (!(e > 0.0))
        throw std::invalid_argument("config: energy scale '" + std::string(name) +
                                    "' is zero for this configuration");
    return e;
}

std::array<double, 3> resolve_lamb_dicke(const Config& cfg) {
    if (cfg.rabi.lamb_dicke) return *cfg.rabi.lamb_dicke;
    double d = norm(cfg.probe.direction);
    if (!(d > 0.0))
        throw std::invalid_argument("config: probe direction must be a nonzero vector");
    Vec3 dir = (1.0 / d) * cfg.probe.direction;
    double wavenumber = two_pi / cfg.probe.wavelength;
    auto w = secular_frequencies(cfg.trap);
    std::array<double, 3> eta{};
    const double comps[3] = {dir.x, dir.y, dir.z};
    for (int j = 0; j < 3; ++j) {
        if (!(w[j] > 0.0))
            throw std::invalid_argument("config: lamb-dicke factors need confinement on all axes");
        eta[j] = wavenumber * std::abs(comps[j]) *
                 std::sqrt(k::hbar / (2.0 * cfg.species.ion_mass * w[j]));
    }
    return eta;
}

std::array<ModeSpec, 3> resolve_modes(const Config& cfg) {
    auto w = secular_frequencies(cfg.trap);
    auto eta = resolve_lamb_dicke(cfg);
    return {ModeSpec{w[0], eta[0]}, ModeSpec{w[1], eta[1]}, ModeSpec{w[2], eta[2]}};
}

}  // namespace ionbath
