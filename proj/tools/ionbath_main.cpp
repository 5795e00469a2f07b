#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ionbath/collision_mc.hpp"
#include "ionbath/config_io.hpp"
#include "ionbath/constants.hpp"
#include "ionbath/csv.hpp"
#include "ionbath/emm.hpp"
#include "ionbath/energy_stats.hpp"
#include "ionbath/manifest.hpp"
#include "ionbath/polarization_md.hpp"
#include "ionbath/rng.hpp"
#include "ionbath/thermometry.hpp"
#include "ionbath/trap.hpp"

#ifndef IONBATH_VERSION
#define IONBATH_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace ionbath;
namespace k = ionbath::constants;

namespace {

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = 1;
    std::string out_dir;
};

int default_workers() {
    unsigned n = std::thread::hardware_concurrency();
    return n ? static_cast<int>(n) : 1;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON configuration file");
    cmd->add_option("--seed", o.seed, "master seed override");
    cmd->add_option("--workers", o.workers, "worker threads");
    cmd->add_option("--out-dir", o.out_dir, "output directory (default runs/<command>-s<seed>)");
}

Config load_or_default(const CommonOpts& o) {
    return o.config_path.empty() ? default_config() : load_config(o.config_path);
}

// Serializes every run's provenance next to its outputs.
struct RunContext {
    fs::path out;
    RunManifest manifest;

    RunContext(const CommonOpts& o, const std::string& command, std::uint64_t seed,
               const Config* cfg) {
        out = o.out_dir.empty()
                  ? fs::path("runs") / (command + "-s" + std::to_string(seed))
                  : fs::path(o.out_dir);
        fs::create_directories(out);
        manifest.command = command;
        manifest.master_seed = seed;
        manifest.workers = o.workers;
        manifest.build_version = IONBATH_VERSION;
        manifest.start_time = iso8601_utc_now();
        if (cfg) manifest.config_json = config_to_json(*cfg);
        if (!o.config_path.empty()) manifest.inputs.push_back(digest_file(o.config_path));
    }

    void add_input(const fs::path& path) { manifest.inputs.push_back(digest_file(path)); }
    void add_output(const fs::path& path) { manifest.outputs.push_back(digest_file(path)); }

    void finish() {
        manifest.end_time = iso8601_utc_now();
        write_manifest(out / "manifest.json", manifest);
    }
};

void write_json(RunContext& ctx, const std::string& name, const Json& j) {
    fs::path path = ctx.out / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << j.dump(2) << "\n";
    if (!os) throw std::runtime_error("write failed for " + path.string());
    ctx.add_output(path);
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

// ---- data.csv round trip ---------------------------------------------------

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_number(const std::string& cell, const fs::path& path) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw std::invalid_argument(path.string() + ": '" + cell + "' is not a number");
    return v;
}

std::vector<EnergyRecord> read_energy_records(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_line(line);
    int e_col = -1, flag_col = -1, count_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "final_energy_J") e_col = static_cast<int>(i);
        else if (header[i] == "flagged") flag_col = static_cast<int>(i);
        else if (header[i] == "collision_count" || header[i] == "langevin_collisions")
            count_col = static_cast<int>(i);
    }
    if (e_col < 0)
        throw std::invalid_argument(path.string() + ": missing final_energy_J column");

    std::vector<EnergyRecord> records;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        EnergyRecord r;
        r.total_energy = parse_number(cells.at(e_col), path);
        if (count_col >= 0)
            r.collision_count = static_cast<int>(parse_number(cells.at(count_col), path));
        if (flag_col >= 0) r.flagged = parse_number(cells.at(flag_col), path) != 0.0;
        records.push_back(r);
    }
    if (records.empty()) throw std::invalid_argument(path.string() + ": no data rows");
    return records;
}

// ---- histogram helpers -----------------------------------------------------

EnergyHistogram histogram_from_config(std::span<const EnergyRecord> records,
                                      const Config& cfg) {
    double scale = resolve_energy_scale(cfg, cfg.histogram.energy_scale);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& r : records) {
        if (r.flagged) continue;
        if (r.total_energy > 0.0 && r.total_energy < lo) lo = r.total_energy;
        if (r.total_energy > hi) hi = r.total_energy;
    }
    if (cfg.histogram.lo) lo = *cfg.histogram.lo * scale;
    if (cfg.histogram.hi)
        hi = *cfg.histogram.hi * scale;
    else
        hi *= 1.0 + 1e-9;  // the top edge is exclusive; keep the max record
    if (!std::isfinite(lo) || !(lo > 0.0))
        throw std::invalid_argument("histogram: no positive unflagged energies in range");
    return build_histogram(records, cfg.histogram.bins, lo, hi, scale);
}

void write_histogram_csv(RunContext& ctx, const EnergyHistogram& hist) {
    fs::path path = ctx.out / "histogram.csv";
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "bin_center,density,poisson_error,count\n";
    for (int i = 0; i < hist.bins(); ++i) {
        double center = hist.center(i) / hist.e_scale;
        double density = hist.density[i] * hist.e_scale;
        double err = hist.counts[i] ? density / std::sqrt(double(hist.counts[i])) : 0.0;
        os << g17(center) << ',' << g17(density) << ',' << g17(err) << ','
           << hist.counts[i] << '\n';
    }
    if (!os) throw std::runtime_error("write failed for " + path.string());
    ctx.add_output(path);
}

Json histogram_meta(const EnergyHistogram& hist, const Config& cfg) {
    return Json{{"energy_scale", cfg.histogram.energy_scale},
                {"energy_scale_J", hist.e_scale},
                {"bins", hist.bins()},
                {"total_records", hist.total_records},
                {"below_range", hist.below_range},
                {"above_range", hist.above_range},
                {"flagged_excluded", hist.flagged_excluded}};
}

// ---- subcommands -----------------------------------------------------------

int cmd_simulate_hardsphere(const CommonOpts& o) {
    Config cfg = load_or_default(o);
    if (o.seed_given) cfg.hardsphere.master_seed = o.seed;
    RunContext ctx(o, "simulate-hardsphere", cfg.hardsphere.master_seed, &cfg);

    auto records =
        run_hard_sphere_mc(cfg.trap, cfg.species, cfg.bath, cfg.hardsphere, o.workers);

    fs::path data = ctx.out / "data.csv";
    {
        std::ofstream os(data, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + data.string());
        os << "realization_index,final_energy_J,collision_count,flagged\n";
        const std::int64_t per =
            cfg.hardsphere.record_mode == RecordMode::full_trace
                ? cfg.hardsphere.collisions_per_realization
                : 1;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            os << static_cast<std::int64_t>(i) / per << ',' << g17(r.total_energy) << ','
               << r.collision_count << ',' << (r.flagged ? 1 : 0) << '\n';
        }
        if (!os) throw std::runtime_error("write failed for " + data.string());
    }
    ctx.add_output(data);
    save_config(ctx.out / "config.json", cfg);
    ctx.add_output(ctx.out / "config.json");
    ctx.finish();
    std::printf("simulate-hardsphere: %zu records (seed %llu, %d workers) -> %s\n",
                records.size(),
                static_cast<unsigned long long>(cfg.hardsphere.master_seed), o.workers,
                ctx.out.string().c_str());
    return 0;
}

int cmd_simulate_polarization(const CommonOpts& o) {
    Config cfg = load_or_default(o);
    if (o.seed_given) cfg.polarization.master_seed = o.seed;
    RunContext ctx(o, "simulate-polarization", cfg.polarization.master_seed, &cfg);

    auto records =
        run_polarization_md(cfg.trap, cfg.species, cfg.bath, cfg.polarization, o.workers);

    fs::path data = ctx.out / "data.csv";
    {
        std::ofstream os(data, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + data.string());
        os << "realization_index,final_energy_J,langevin_collisions,flagged_visits,flagged\n";
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            os << i << ',' << g17(r.total_energy) << ',' << r.langevin_collisions << ','
               << r.flagged_visits << ',' << (r.flagged ? 1 : 0) << '\n';
        }
        if (!os) throw std::runtime_error("write failed for " + data.string());
    }
    ctx.add_output(data);
    save_config(ctx.out / "config.json", cfg);
    ctx.add_output(ctx.out / "config.json");
    ctx.finish();
    std::printf("simulate-polarization: %zu realizations (seed %llu, %d workers) -> %s\n",
                records.size(),
                static_cast<unsigned long long>(cfg.polarization.master_seed), o.workers,
                ctx.out.string().c_str());
    return 0;
}

int cmd_histogram(const CommonOpts& o, const std::string& data_path) {
    Config cfg = load_or_default(o);
    RunContext ctx(o, "histogram", o.seed_given ? o.seed : 0, &cfg);
    ctx.add_input(data_path);
    auto records = read_energy_records(data_path);
    EnergyHistogram hist = histogram_from_config(records, cfg);
    write_histogram_csv(ctx, hist);
    write_json(ctx, "histogram.json", histogram_meta(hist, cfg));
    ctx.finish();
    std::printf("histogram: %llu records in %d bins -> %s\n",
                static_cast<unsigned long long>(hist.total_records), hist.bins(),
                ctx.out.string().c_str());
    return 0;
}

Json tsallis_block(const TsallisParams& p, double scale) {
    return Json{{"n", p.n},
                {"n_sigma", p.n_sigma},
                {"a_J", p.a},
                {"a_scaled", p.a / scale},
                {"a_sigma_J", p.a_sigma},
                {"mean_J", finite_or_null(tsallis_mean(p))}};
}

int cmd_fit_tsallis(const CommonOpts& o, const std::string& data_path) {
    Config cfg = load_or_default(o);
    RunContext ctx(o, "fit-tsallis", o.seed_given ? o.seed : 0, &cfg);
    ctx.add_input(data_path);
    auto records = read_energy_records(data_path);
    EnergyHistogram hist = histogram_from_config(records, cfg);
    double scale = hist.e_scale;

    std::optional<double> threshold, upper;
    if (cfg.tail_fit.threshold) threshold = *cfg.tail_fit.threshold * scale;
    if (cfg.tail_fit.upper_bound) upper = *cfg.tail_fit.upper_bound * scale;
    TailFit tail = fit_tsallis_tail(hist, threshold, upper);

    Json report;
    report["histogram"] = histogram_meta(hist, cfg);
    report["tail"] = tsallis_block(tail.params, scale);
    report["tail"]["threshold_J"] = tail.threshold;
    report["tail"]["threshold_scaled"] = tail.threshold / scale;
    report["tail"]["upper_bound_J"] = finite_or_null(tail.upper_bound);
    report["tail"]["bins_used"] = tail.bins_used;
    report["tail"]["chi2"] = tail.chi2;
    report["tail"]["dof"] = tail.dof;
    report["tail"]["chi2_per_dof"] = tail.dof > 0 ? tail.chi2 / tail.dof : 0.0;

    if (cfg.tail_fit.full_fit) {
        FullFit full = full_tsallis_fit(hist);
        report["full"] = tsallis_block(full.params, scale);
        report["full"]["chi2"] = full.chi2;
        report["full"]["dof"] = full.dof;
        report["full"]["chi2_per_dof"] = full.chi2_per_dof;
        report["full"]["p_value"] = full.p_value;
        report["full"]["converged"] = full.converged;
    } else {
        report["full"] = nullptr;
    }

    ExponentConventions conv = convert_exponent_convention(tail.params.n);
    report["conventions"] =
        Json{{"n", conv.n}, {"nu", conv.nu}, {"kappa", conv.kappa}, {"alpha", conv.alpha}};
    report["mass_ratio_reference_n"] =
        chen_exponent(cfg.species.ion_mass, cfg.species.atom_mass);

    write_json(ctx, "tsallis_fit.json", report);
    write_histogram_csv(ctx, hist);
    ctx.finish();
    std::printf("fit-tsallis: tail n = %.4f +- %.4f over %d bins -> %s\n", tail.params.n,
                tail.params.n_sigma, tail.bins_used, ctx.out.string().c_str());
    return 0;
}

int cmd_emm_budget(const CommonOpts& o, const std::string& entries_path) {
    Config cfg = load_or_default(o);
    RunContext ctx(o, "emm-budget", o.seed_given ? o.seed : 0, &cfg);
    ctx.add_input(entries_path);

    std::ifstream in(entries_path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + entries_path);
    Json list;
    try {
        list = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw std::invalid_argument(entries_path + ": invalid JSON: " + e.what());
    }
    if (!list.is_array()) throw std::invalid_argument(entries_path + ": expected an array");

    std::vector<EmmBudgetEntry> entries;
    for (const auto& item : list) {
        if (!item.is_object() || !item.contains("label"))
            throw std::invalid_argument(entries_path + ": each entry needs a label");
        EmmBudgetEntry e;
        e.label = item.at("label").get<std::string>();
        bool has_u = item.contains("amplitude_nm");
        bool has_t = item.contains("temperature_uk");
        if (has_u == has_t)
            throw std::invalid_argument(entries_path + ": entry '" + e.label +
                                        "' needs exactly one of amplitude_nm, temperature_uk");
        if (has_u) e.amplitude = 1e-9 * item.at("amplitude_nm").get<double>();
        if (has_t) e.temperature = 1e-6 * item.at("temperature_uk").get<double>();
        entries.push_back(e);
    }

    EmmBudget budget = build_emm_budget(entries, cfg.species.ion_mass, cfg.trap.rf_frequency);

    std::printf("%-28s %14s %17s %15s\n", "contribution", "amplitude (nm)",
                "temperature (uK)", "rf field (V/m)");
    Json rows = Json::array();
    for (const auto& row : budget.rows) {
        double field =
            rf_field_from_amplitude(row.amplitude, cfg.species.ion_mass, cfg.trap.rf_frequency);
        std::printf("%-28s %14.4f %17.4f %15.4f\n", row.label.c_str(), row.amplitude * 1e9,
                    row.temperature * 1e6, field);
        rows.push_back(Json{{"label", row.label},
                            {"amplitude_nm", row.amplitude * 1e9},
                            {"temperature_uk", row.temperature * 1e6},
                            {"rf_field_v_per_m", field}});
    }
    double total_field = rf_field_from_amplitude(budget.total_amplitude, cfg.species.ion_mass,
                                                 cfg.trap.rf_frequency);
    std::printf("%-28s %14.4f %17.4f %15.4f\n", "total", budget.total_amplitude * 1e9,
                budget.total_temperature * 1e6, total_field);

    write_json(ctx, "budget.json",
               Json{{"rows", rows},
                    {"total",
                     Json{{"amplitude_nm", budget.total_amplitude * 1e9},
                          {"temperature_uk", budget.total_temperature * 1e6},
                          {"rf_field_v_per_m", total_field}}}});
    ctx.finish();
    return 0;
}

int cmd_emm_beta(const CommonOpts& o, const std::optional<double>& amplitude_nm,
                 const std::optional<double>& ratio, const std::optional<double>& beta_in,
                 bool from_config) {
    Config cfg = load_or_default(o);
    int given = int(amplitude_nm.has_value()) + int(ratio.has_value()) +
                int(beta_in.has_value()) + int(from_config);
    if (given != 1)
        throw std::invalid_argument(
            "emm-beta needs exactly one of --amplitude-nm, --ratio, --beta, --from-config");

    RunContext ctx(o, "emm-beta", o.seed_given ? o.seed : 0, &cfg);
    LaserProbe probe;
    probe.wavelength = cfg.probe.wavelength;
    probe.direction = cfg.probe.direction;
    double wavenumber = probe.wavenumber();

    double beta = 0.0;
    if (amplitude_nm) {
        beta = wavenumber * (*amplitude_nm * 1e-9);
    } else if (ratio) {
        beta = beta_from_coupling_ratio(*ratio);
    } else if (beta_in) {
        beta = *beta_in;
    } else {
        EmmVector emm;
        for (int j = 0; j < 3; ++j)
            emm.quadrature[j] = cfg.trap.emm_quadrature_amplitude[j];
        emm.in_phase = Vec3{cfg.trap.emm_dc_displacement[0] * cfg.trap.q[0] / 2.0,
                            cfg.trap.emm_dc_displacement[1] * cfg.trap.q[1] / 2.0,
                            cfg.trap.emm_dc_displacement[2] * cfg.trap.q[2] / 2.0};
        beta = modulation_index(probe, emm).beta;
    }

    double amplitude = beta / wavenumber;  // projected on the probe axis
    double coupling = coupling_ratio_from_beta(beta);
    double field =
        rf_field_from_amplitude(amplitude, cfg.species.ion_mass, cfg.trap.rf_frequency);
    double temperature = emm_temperature_from_amplitude(amplitude, cfg.species.ion_mass,
                                                        cfg.trap.rf_frequency);

    write_json(ctx, "beta.json",
               Json{{"beta", beta},
                    {"coupling_ratio", coupling},
                    {"amplitude_nm", amplitude * 1e9},
                    {"wavelength_nm", probe.wavelength * 1e9},
                    {"rf_field_v_per_m", field},
                    {"emm_temperature_uk", temperature * 1e6}});
    ctx.finish();
    std::printf("emm-beta: beta = %.6g, J1/J0 = %.6g, amplitude = %.6g nm\n", beta, coupling,
                amplitude * 1e9);
    return 0;
}

int cmd_rabi_signal(const CommonOpts& o) {
    Config cfg = load_or_default(o);
    RunContext ctx(o, "rabi-signal", o.seed_given ? o.seed : RabiSignalOptions{}.seed, &cfg);
    auto modes = resolve_modes(cfg);

    std::vector<double> times(cfg.rabi.points);
    for (int i = 0; i < cfg.rabi.points; ++i)
        times[i] = cfg.rabi.time_end * (i + 1) / cfg.rabi.points;

    RabiSignalOptions sopts;
    if (o.seed_given) sopts.seed = o.seed;
    RabiCurve curve =
        rabi_signal(times, modes, cfg.rabi.omega0, cfg.rabi.distribution, sopts);
    if (cfg.rabi.shots > 0) {
        Rng rng(sopts.seed);
        curve = sample_shots(curve, cfg.rabi.shots, rng);
    }

    fs::path path = ctx.out / "curve.csv";
    {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + path.string());
        os << "time_us,p_excited,shots\n";
        for (std::size_t i = 0; i < curve.times.size(); ++i)
            os << g17(curve.times[i] * 1e6) << ',' << g17(curve.excitation_probability[i])
               << ',' << curve.shots_per_point << '\n';
        if (!os) throw std::runtime_error("write failed for " + path.string());
    }
    ctx.add_output(path);
    save_config(ctx.out / "config.json", cfg);
    ctx.add_output(ctx.out / "config.json");
    ctx.finish();
    std::printf("rabi-signal: %d points to %.3g us -> %s\n", cfg.rabi.points,
                cfg.rabi.time_end * 1e6, ctx.out.string().c_str());
    return 0;
}

RabiCurve read_rabi_curve(const fs::path& path) {
    Csv table = read_csv(path);
    std::size_t t_col = table.column("time_us");
    std::size_t p_col = table.column("p_excited");
    std::size_t s_col = table.column("shots");
    if (table.rows.empty()) throw std::invalid_argument(path.string() + ": no data rows");
    RabiCurve curve;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        curve.times.push_back(table.number(i, t_col) * 1e-6);
        curve.excitation_probability.push_back(table.number(i, p_col));
        int shots = static_cast<int>(table.number(i, s_col));
        if (i == 0)
            curve.shots_per_point = shots;
        else if (shots != curve.shots_per_point)
            throw std::invalid_argument(path.string() +
                                        ": the fit needs a uniform shot count per point");
    }
    return curve;
}

RabiModel model_from_string(const std::string& name) {
    if (name == "thermal") return RabiModel::thermal;
    if (name == "tsallis") return RabiModel::tsallis;
    if (name == "maxwell_boltzmann") return RabiModel::maxwell_boltzmann;
    throw std::invalid_argument("unknown model '" + name +
                                "' (thermal, tsallis, maxwell_boltzmann)");
}

Json rabi_fit_block(const RabiFit& fit) {
    Json j;
    switch (fit.model) {
        case RabiModel::thermal: j["model"] = "thermal"; break;
        case RabiModel::tsallis: j["model"] = "tsallis"; break;
        case RabiModel::maxwell_boltzmann: j["model"] = "maxwell_boltzmann"; break;
    }
    j["converged"] = fit.converged;
    j["omega0_rad_per_s"] = fit.omega0;
    j["omega0_khz"] = fit.omega0 / (2.0 * M_PI * 1e3);
    j["omega0_sigma_rad_per_s"] = fit.omega0_sigma;
    if (fit.model == RabiModel::tsallis) {
        j["tsallis"] = Json{{"n", fit.tsallis.n},
                            {"n_sigma", fit.tsallis.n_sigma},
                            {"a_uk", fit.tsallis.a / k::k_boltzmann * 1e6},
                            {"a_sigma_uk", fit.tsallis.a_sigma / k::k_boltzmann * 1e6},
                            {"mean_uk", finite_or_null(tsallis_mean(fit.tsallis) /
                                                       k::k_boltzmann * 1e6)}};
    } else {
        j["temperature_uk"] = fit.temperature * 1e6;
        j["temperature_sigma_uk"] = fit.temperature_sigma * 1e6;
    }
    j["time_offset_us"] = fit.time_offset * 1e6;
    j["detection_error"] = fit.detection_error;
    j["log_likelihood"] = fit.log_likelihood;
    j["chi2"] = fit.chi2;
    j["dof"] = fit.dof;
    j["chi2_per_dof"] = fit.dof > 0 ? fit.chi2 / fit.dof : 0.0;
    return j;
}

int cmd_rabi_fit(const CommonOpts& o, const std::string& curve_path,
                 const std::string& model_name, bool compare, bool fit_time_offset,
                 bool fit_detection_error) {
    Config cfg = load_or_default(o);
    RunContext ctx(o, "rabi-fit", o.seed_given ? o.seed : RabiFitOptions{}.seed, &cfg);
    ctx.add_input(curve_path);
    RabiCurve curve = read_rabi_curve(curve_path);
    auto modes = resolve_modes(cfg);

    RabiFitOptions fopts;
    if (o.seed_given) fopts.seed = o.seed;
    fopts.fit_time_offset = fit_time_offset;
    fopts.fit_detection_error = fit_detection_error;

    Json report;
    if (compare) {
        RabiFit thermal = fit_rabi_curve(curve, modes, RabiModel::thermal, fopts);
        RabiFit tsallis = fit_rabi_curve(curve, modes, RabiModel::tsallis, fopts);
        report["thermal"] = rabi_fit_block(thermal);
        report["tsallis"] = rabi_fit_block(tsallis);
        double chi_th = thermal.dof > 0 ? thermal.chi2 / thermal.dof
                                        : std::numeric_limits<double>::infinity();
        double chi_ts = tsallis.dof > 0 ? tsallis.chi2 / tsallis.dof
                                        : std::numeric_limits<double>::infinity();
        report["preferred"] = chi_ts < chi_th ? "tsallis" : "thermal";
        write_json(ctx, "rabi_fit.json", report);
        ctx.finish();
        std::printf("rabi-fit: chi2/dof thermal %.3f vs tsallis %.3f -> %s\n", chi_th, chi_ts,
                    report["preferred"].get<std::string>().c_str());
        return 0;
    }

    RabiFit fit = fit_rabi_curve(curve, modes, model_from_string(model_name), fopts);
    report = rabi_fit_block(fit);
    write_json(ctx, "rabi_fit.json", report);
    ctx.finish();
    if (fit.model == RabiModel::tsallis)
        std::printf("rabi-fit: tsallis n = %.3f +- %.3f, chi2/dof = %.3f\n", fit.tsallis.n,
                    fit.tsallis.n_sigma, fit.dof > 0 ? fit.chi2 / fit.dof : 0.0);
    else
        std::printf("rabi-fit: T = %.4g uK +- %.2g, chi2/dof = %.3f\n",
                    fit.temperature * 1e6, fit.temperature_sigma * 1e6,
                    fit.dof > 0 ? fit.chi2 / fit.dof : 0.0);
    return 0;
}

int cmd_paper_defaults(const CommonOpts& o) {
    Config cfg = default_config();
    RunContext ctx(o, "paper-defaults", o.seed_given ? o.seed : 0, &cfg);
    fs::path path = ctx.out / "paper_defaults.json";
    save_config(path, cfg);
    ctx.add_output(path);
    ctx.finish();
    std::printf("%s\n", path.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trapped-ion / ultracold-atom collision and thermometry toolkit"};
    app.set_version_flag("--version", IONBATH_VERSION);
    app.require_subcommand(1);

    CommonOpts common;
    common.workers = default_workers();

    auto* sim_hs = app.add_subcommand("simulate-hardsphere",
                                      "hard-sphere collision monte carlo over many realizations");
    add_common(sim_hs, common);

    auto* sim_md = app.add_subcommand("simulate-polarization",
                                      "molecular dynamics in the polarization potential");
    add_common(sim_md, common);

    std::string data_path;
    auto* hist_cmd = app.add_subcommand("histogram", "log-binned energy density from a data file");
    add_common(hist_cmd, common);
    hist_cmd->add_option("--data", data_path, "data.csv from a simulate command")->required();

    auto* fit_cmd = app.add_subcommand("fit-tsallis", "power-law tail and full distribution fit");
    add_common(fit_cmd, common);
    fit_cmd->add_option("--data", data_path, "data.csv from a simulate command")->required();

    std::string entries_path;
    auto* budget_cmd = app.add_subcommand("emm-budget",
                                          "micromotion contribution table from an entries file");
    add_common(budget_cmd, common);
    budget_cmd->add_option("--entries", entries_path, "JSON array of budget entries")->required();

    double amplitude_nm = 0.0, ratio = 0.0, beta_in = 0.0;
    bool from_config = false;
    auto* beta_cmd = app.add_subcommand("emm-beta",
                                        "modulation index conversions for the probe geometry");
    add_common(beta_cmd, common);
    beta_cmd->add_option("--amplitude-nm", amplitude_nm, "motion amplitude along the probe");
    beta_cmd->add_option("--ratio", ratio, "measured sideband-to-carrier coupling ratio");
    beta_cmd->add_option("--beta", beta_in, "modulation index");
    beta_cmd->add_flag("--from-config", from_config,
                       "project the configured trap emm vector on the probe");

    auto* signal_cmd = app.add_subcommand("rabi-signal", "synthesize a carrier rabi curve");
    add_common(signal_cmd, common);

    std::string curve_path, model_name = "thermal";
    bool compare = false, fit_time_offset = false, fit_detection_error = false;
    auto* rfit_cmd = app.add_subcommand("rabi-fit", "fit a measured carrier rabi curve");
    add_common(rfit_cmd, common);
    rfit_cmd->add_option("--curve", curve_path, "curve.csv to fit")->required();
    rfit_cmd->add_option("--model", model_name, "thermal, tsallis or maxwell_boltzmann");
    rfit_cmd->add_flag("--compare", compare, "fit thermal and tsallis, report the preferred one");
    rfit_cmd->add_flag("--fit-time-offset", fit_time_offset, "float the pulse-time zero");
    rfit_cmd->add_flag("--fit-detection-error", fit_detection_error,
                       "float a detection-error floor");

    auto* defaults_cmd = app.add_subcommand("paper-defaults",
                                            "write the reference configuration file");
    add_common(defaults_cmd, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    CLI::App* active = nullptr;
    for (CLI::App* sub : app.get_subcommands()) active = sub;
    common.seed_given = active && active->count("--seed") > 0;

    try {
        if (sim_hs->parsed()) return cmd_simulate_hardsphere(common);
        if (sim_md->parsed()) return cmd_simulate_polarization(common);
        if (hist_cmd->parsed()) return cmd_histogram(common, data_path);
        if (fit_cmd->parsed()) return cmd_fit_tsallis(common, data_path);
        if (budget_cmd->parsed()) return cmd_emm_budget(common, entries_path);
        if (beta_cmd->parsed())
            return cmd_emm_beta(common,
                                beta_cmd->count("--amplitude-nm")
                                    ? std::optional<double>{amplitude_nm}
                                    : std::nullopt,
                                beta_cmd->count("--ratio") ? std::optional<double>{ratio}
                                                           : std::nullopt,
                                beta_cmd->count("--beta") ? std::optional<double>{beta_in}
                                                          : std::nullopt,
                                from_config);
        if (signal_cmd->parsed()) return cmd_rabi_signal(common);
        if (rfit_cmd->parsed())
            return cmd_rabi_fit(common, curve_path, model_name, compare, fit_time_offset,
                                fit_detection_error);
        if (defaults_cmd->parsed()) return cmd_paper_defaults(common);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
