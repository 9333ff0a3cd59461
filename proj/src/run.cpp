// run.cpp — Command execution for the sgcsim front end

#include "sgc/run.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <fftw3.h>
#include <fmt/format.h>
#include <json.hpp>

#include "sgc/errors.hpp"
#include "sgc/io.hpp"

namespace sgc {

using nlohmann::json;

namespace {

using cd = std::complex<double>;

json versions()
{
    return {{"sgcsim", sgcsim_version},
            {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
            {"fftw", std::string(fftw_version)},
            {"fmt", fmt::format("{}.{}.{}", FMT_VERSION / 10000, FMT_VERSION / 100 % 100, FMT_VERSION % 100)},
            {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                          NLOHMANN_JSON_VERSION_PATCH)}};
}

json dip_json(const Dip& d)
{
    return {{"position", d.position},     {"value", d.value},
            {"depth", d.depth},           {"width", d.width},
            {"prominence", d.prominence}, {"relative_depth", d.relative_depth},
            {"reaches_baseline", d.reaches_baseline}};
}

json peak_json(const Peak& p) { return {{"position", p.position}, {"height", p.height}, {"prominence", p.prominence}}; }

json complex_json(cd z) { return json::array({z.real(), z.imag()}); }

// Dips (baseline-reaching minima), all prominent minima and peaks of one channel.
json feature_summary(const Spectrum& spectrum, const std::string& channel, const DipOptions& options)
{
    const auto minima = find_dips(spectrum, channel, options);
    const auto peaks = find_peaks(spectrum.detunings, spectrum.channel(channel), options.prominence_fraction);
    json dips = json::array();
    json all = json::array();
    for (const Dip& d : minima) {
        all.push_back(dip_json(d));
        if (d.reaches_baseline) dips.push_back(dip_json(d));
    }
    json pk = json::array();
    for (const Peak& p : peaks) pk.push_back(peak_json(p));
    return {{"channel", channel},
            {"baseline", spectrum.baseline(channel)},
            {"dip_count", dips.size()},
            {"dips", dips},
            {"minima", all},
            {"peak_count", pk.size()},
            {"peaks", pk}};
}

json run_params(const RunConfig& c)
{
    return {{"preset", std::string(to_string(c.geometry.preset))},
            {"b_hat_effective", {{"k0", c.geometry.effective_b_hat()(0)},
                                 {"pi", c.geometry.effective_b_hat()(1)},
                                 {"sigma", c.geometry.effective_b_hat()(2)}}},
            {"b_tesla", c.geometry.b_tesla},
            {"gamma_s", c.cavity.gamma_s},
            {"delta_ls", c.cavity.delta_ls},
            {"amplitude_scale", c.cavity.amplitude()},
            {"detection", std::string(to_string(c.detection.mode))},
            {"toggles",
             {{"sgc_dissipative", c.toggles.sgc_dissipative},
              {"sgc_hamiltonian", c.toggles.sgc_hamiltonian},
              {"sr", c.toggles.sr}}}};
}

GeometryConfig effective_geometry(const GeometryConfig& g)
{
    GeometryConfig out = g;
    out.b_hat = g.effective_b_hat();
    out.misalignment.reset();
    return out;
}

LevelScheme scheme_for(const RunConfig& c) { return build_level_scheme(c.species, effective_geometry(c.geometry)); }

class Context {
public:
    Context(const RunConfig& config, Command command, std::filesystem::path out_dir)
        : config_(config), dir_(std::move(out_dir))
    {
        provenance_ = {config_hash(config_), std::string(to_string(command))};
    }

    const Provenance& provenance() const { return provenance_; }

    void warn(std::string message) { result_.warnings.push_back(std::move(message)); }

    void write(const std::string& name, std::string_view content)
    {
        const auto path = dir_ / name;
        write_text_file(path, content);
        result_.files.push_back(path);
    }

    void plot(const std::string& name, std::span<const Curve> curves, const PlotStyle& style)
    {
        if (config_.outputs.svg) write(name, render_svg(curves, style));
    }

    RunResult finish(json summary)
    {
        write("config.json", dump_config(config_));
        summary["version"] = versions();
        summary["config_sha256"] = provenance_.config_hash;
        summary["command"] = provenance_.command;
        summary["warnings"] = result_.warnings;
        summary["files"] = json::array();
        for (const auto& f : result_.files) summary["files"].push_back(f.filename().string());
        summary["files"].push_back("summary.json");
        result_.summary = summary.dump(2) + "\n";
        write("summary.json", result_.summary);
        return result_;
    }

private:
    const RunConfig& config_;
    std::filesystem::path dir_;
    Provenance provenance_;
    RunResult result_;
};

json run_levels(const RunConfig& c, Context& ctx)
{
    const LevelScheme scheme = scheme_for(c);
    std::vector<std::string> cols{"index",      "m_g",        "m_e",     "q",       "cg",     "delta_gamma",
                                  "re_c_sigma", "im_c_sigma", "re_c_pi", "im_c_pi", "bright"};
    std::vector<std::vector<double>> data(cols.size());
    json transitions = json::array();
    for (std::size_t t = 0; t < scheme.size(); ++t) {
        const Transition& tr = scheme.transitions[t];
        const double row[] = {static_cast<double>(t), tr.m_g.value(),        tr.m_e.value(),
                              static_cast<double>(tr.q), tr.cg,               tr.detuning,
                              tr.coupling(0).real(),     tr.coupling(0).imag(), tr.coupling(1).real(),
                              tr.coupling(1).imag(),     tr.is_dark() ? 0.0 : 1.0};
        for (std::size_t k = 0; k < cols.size(); ++k) data[k].push_back(row[k]);
        transitions.push_back({{"m_g", tr.m_g.value()},
                               {"m_e", tr.m_e.value()},
                               {"q", tr.q},
                               {"cg", tr.cg},
                               {"detuning", tr.detuning},
                               {"coupling", {{"sigma", complex_json(tr.coupling(0))}, {"pi", complex_json(tr.coupling(1))}}},
                               {"dark", tr.is_dark()}});
    }
    if (c.outputs.csv) ctx.write("levels.csv", table_csv(cols, data, ctx.provenance()));

    const Eigen::MatrixXcd g = g_matrix(scheme, c.cavity);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(g, Eigen::EigenvaluesOnly);
    json ev = json::array();
    int rank = 0;
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        ev.push_back(eig.eigenvalues()(i));
        if (eig.eigenvalues()(i) > 1e-12 * scale) ++rank;
    }
    double lo = scheme.transitions.front().detuning, hi = scheme.transitions.back().detuning;
    return {{"params", run_params(c)},
            {"transitions", transitions},
            {"span_gamma", hi - lo},
            {"g_eigenvalues", ev},
            {"g_rank", rank}};
}

Spectrum configured_spectrum(const RunConfig& c, std::span<const double> grid, const Toggles& toggles)
{
    return spectrum_sweep(scheme_for(c), c.cavity, c.detection, grid, toggles);
}

json run_spectrum(const RunConfig& c, Context& ctx)
{
    const auto grid = c.grid.values();
    const Spectrum s = configured_spectrum(c, grid, c.toggles);
    const std::string channel = channel_name(c.detection.mode);
    if (c.outputs.csv) ctx.write("spectrum.csv", spectrum_csv(s, ctx.provenance()));

    // Overlay: the configured model (solid) against the same model with SGC removed (dashed).
    Toggles off = c.toggles;
    off.sgc_dissipative = off.sgc_hamiltonian = false;
    const bool already_off = !c.toggles.sgc_dissipative && !c.toggles.sgc_hamiltonian;
    std::vector<Curve> curves{{already_off ? "SGC off" : "SGC on", s.detunings, s.channel(channel), false}};
    if (!already_off) {
        const Spectrum ref = configured_spectrum(c, grid, off);
        curves.push_back({"SGC off", ref.detunings, ref.channel(channel), true});
    }
    ctx.plot("spectrum.svg", curves,
             {fmt::format("{} geometry, {}", to_string(c.geometry.preset), channel), "detuning / gamma",
              channel + " (arb. units)", false});

    json summary = feature_summary(s, channel, c.dips);
    summary["params"] = run_params(c);
    summary["grid"] = {{"min", c.grid.min}, {"max", c.grid.max}, {"points", c.grid.points}};
    return summary;
}

json run_time(const RunConfig& c, Context& ctx)
{
    const auto grid = fft_grid(c.time_grid.half_width, c.time_grid.points);
    const Spectrum s = configured_spectrum(c, grid, c.toggles);
    const TimeResponse tr = time_response(s, c.detection, {c.time_grid.tail_correction});
    if (c.outputs.csv) ctx.write("time.csv", time_csv(tr, ctx.provenance()));

    // Plot the first 2/gamma, where the superradiant decay and quantum beats live.
    Curve curve{channel_name(c.detection.mode), {}, {}, false};
    for (std::size_t k = 0; k < tr.t.size() && tr.t[k] <= 2.0; ++k) {
        curve.x.push_back(tr.t[k]);
        curve.y.push_back(tr.intensity[k]);
    }
    ctx.plot("time.svg", std::span(&curve, 1), {"time response", "t * gamma", "intensity (arb. units)", true});

    double total = 0.0;
    for (double v : tr.intensity) total += v;
    const double dt = tr.t.size() > 1 ? tr.t[1] - tr.t[0] : 0.0;
    return {{"params", run_params(c)},
            {"time_step", dt},
            {"time_span", dt * static_cast<double>(tr.t.size())},
            {"integrated_intensity", total * dt},
            {"edge_residual", tr.edge_residual},
            {"tail_correction", c.time_grid.tail_correction}};
}

json run_measure(const RunConfig& c, Context& ctx)
{
    if (!c.detection.analyzer) throw ValidationError("config key 'detection.analyzer' is required for measure");
    const auto grid = fft_grid(c.time_grid.half_width, c.time_grid.points);
    const Spectrum s = configured_spectrum(c, grid, c.toggles);
    const auto positions = c.measure.analyzer.values();
    const MeasuredSpectrum m = simulate_measurement(s, c.detection, positions);
    if (c.outputs.csv) {
        const std::vector<std::string> cols{"analyzer_delta_gamma", "intensity", "absorption"};
        const std::vector<std::vector<double>> data{m.analyzer_detunings, m.intensity, m.absorption};
        ctx.write("measure.csv", table_csv(cols, data, ctx.provenance()));
    }
    const Curve curve{"absorption", m.analyzer_detunings, m.absorption, false};
    ctx.plot("measure.svg", std::span(&curve, 1),
             {"simulated analyzer scan", "analyzer detuning / gamma", "absorbed counts (arb. units)", false});

    const auto peaks = find_peaks(m.analyzer_detunings, m.absorption, c.dips.prominence_fraction);
    json pk = json::array();
    for (const Peak& p : peaks) pk.push_back(peak_json(p));
    return {{"params", run_params(c)}, {"reference", m.reference}, {"peak_count", pk.size()}, {"peaks", pk}};
}

struct OracleScan {
    double angle{};
    bool scanned{};
    double reflectivity{};
    std::vector<double> detunings;
    std::vector<cd> r;
};

OracleScan oracle_scan(const RunConfig& c)
{
    OracleScan scan;
    if (c.oracle.angle_mrad) {
        scan.angle = *c.oracle.angle_mrad;
        scan.reflectivity = std::norm(parratt_reflectivity(oracle::without_resonances(c.oracle.stack), scan.angle, 0.0));
    } else {
        const auto m = oracle::find_mode_angle(c.oracle.stack, c.oracle.scan_min_mrad, c.oracle.scan_max_mrad,
                                               c.oracle.scan_points);
        scan.angle = m.angle_mrad;
        scan.reflectivity = m.reflectivity;
        scan.scanned = true;
    }
    scan.detunings = c.oracle.detuning.values();
    for (double d : scan.detunings) scan.r.push_back(oracle::parratt_reflectivity(c.oracle.stack, scan.angle, d));
    return scan;
}

json run_oracle(const RunConfig& c, Context& ctx)
{
    const OracleScan scan = oracle_scan(c);
    const oracle::LayerStack electronic = oracle::without_resonances(c.oracle.stack);
    std::vector<double> angles, refl;
    for (int i = 0; i < c.oracle.scan_points; ++i) {
        const double a = c.oracle.scan_min_mrad
                         + (c.oracle.scan_max_mrad - c.oracle.scan_min_mrad) * i / (c.oracle.scan_points - 1);
        angles.push_back(a);
        refl.push_back(std::norm(oracle::parratt_reflectivity(electronic, a, 0.0)));
    }

    // The scalar oracle has no polarization mixing: r is isotropic over (sigma, pi).
    Spectrum s;
    s.detunings = scan.detunings;
    s.in_polarization = c.geometry.in_polarization;
    s.extinction = c.detection.extinction;
    auto& crossed = s.channels[channel_crossed];
    auto& direct = s.channels[channel_direct];
    for (const cd& r : scan.r) {
        const Matrix2c m = r * Matrix2c::Identity();
        s.matrices.push_back(m);
        const ChannelIntensity ci = channel_intensity(m, c.detection, s.in_polarization);
        crossed.push_back(ci.crossed);
        direct.push_back(ci.direct);
    }

    if (c.outputs.csv) {
        const std::vector<std::string> cols{"angle_mrad", "reflectivity"};
        const std::vector<std::vector<double>> data{angles, refl};
        ctx.write("angle_scan.csv", table_csv(cols, data, ctx.provenance()));
        ctx.write("oracle_spectrum.csv", spectrum_csv(s, ctx.provenance()));
    }
    const Curve angle_curve{"|r|^2 off resonance", angles, refl, false};
    ctx.plot("angle_scan.svg", std::span(&angle_curve, 1),
             {"electronic reflectivity", "grazing angle / mrad", "reflectivity", true});
    const Curve spec_curve{"|r|^2", s.detunings, direct, false};
    ctx.plot("oracle_spectrum.svg", std::span(&spec_curve, 1),
             {fmt::format("layer-stack reflectivity at {:.4f} mrad", scan.angle), "detuning / gamma",
              "reflectivity", false});

    return {{"mode_angle_mrad", scan.angle},
            {"mode_angle_scanned", scan.scanned},
            {"off_resonance_reflectivity", scan.reflectivity},
            {"wavelength_nm", c.oracle.stack.wavelength_nm}};
}

json run_fit(const RunConfig& c, Context& ctx)
{
    const OracleScan scan = oracle_scan(c);
    const oracle::CavityFit fit = oracle::fit_cavity_params(scan.detunings, scan.r);
    if (c.outputs.csv) {
        std::vector<std::vector<double>> data(5);
        for (std::size_t k = 0; k < scan.detunings.size(); ++k) {
            const cd model = fit.params(scan.detunings[k]);
            data[0].push_back(scan.detunings[k]);
            data[1].push_back(scan.r[k].real());
            data[2].push_back(scan.r[k].imag());
            data[3].push_back(model.real());
            data[4].push_back(model.imag());
        }
        const std::vector<std::string> cols{"delta_gamma", "re_r_oracle", "im_r_oracle", "re_r_fit", "im_r_fit"};
        ctx.write("fit.csv", table_csv(cols, data, ctx.provenance()));
    }
    std::vector<double> data_i, fit_i;
    for (std::size_t k = 0; k < scan.detunings.size(); ++k) {
        data_i.push_back(std::norm(scan.r[k]));
        fit_i.push_back(std::norm(fit.params(scan.detunings[k])));
    }
    const std::vector<Curve> curves{{"layer-stack oracle", scan.detunings, data_i, false},
                                    {"effective line fit", scan.detunings, fit_i, true}};
    ctx.plot("fit.svg", curves, {"effective cavity parameters", "detuning / gamma", "reflectivity", false});

    return {{"mode_angle_mrad", scan.angle},
            {"gamma_s", fit.params.gamma_s},
            {"delta_ls", fit.params.delta_ls},
            {"r_c", complex_json(fit.params.r_c)},
            {"amplitude", complex_json(fit.params.amplitude)},
            {"amplitude_scale", std::abs(fit.params.amplitude)},
            {"relative_residual", fit.relative_residual},
            {"iterations", fit.iterations}};
}

} // namespace

std::string_view to_string(Command command)
{
    switch (command) {
    case Command::levels: return "levels";
    case Command::spectrum: return "spectrum";
    case Command::time: return "time";
    case Command::measure: return "measure";
    case Command::oracle: return "oracle";
    case Command::fit: return "fit";
    }
    return "unknown";
}

Command command_from_string(std::string_view name)
{
    for (Command c : {Command::levels, Command::spectrum, Command::time, Command::measure, Command::oracle,
                      Command::fit}) {
        if (to_string(c) == name) return c;
    }
    throw ValidationError(fmt::format("unknown command '{}' (levels|spectrum|time|measure|oracle|fit)", name));
}

RunResult run(const RunConfig& config, Command command, const std::filesystem::path& out_dir)
{
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw ValidationError(fmt::format("cannot create output directory '{}': {}", out_dir.string(), ec.message()));

    Context ctx(config, command, out_dir);
    if (!DriveConfig{config.drive.rabi, config.geometry.in_polarization}.validate()) {
        ctx.warn(fmt::format("drive.rabi = {} exceeds the weak-probe range (<= 0.01); the Liouvillian route "
                             "will deviate from linear response", config.drive.rabi));
    }
    json summary;
    switch (command) {
    case Command::levels: summary = run_levels(config, ctx); break;
    case Command::spectrum: summary = run_spectrum(config, ctx); break;
    case Command::time: summary = run_time(config, ctx); break;
    case Command::measure: summary = run_measure(config, ctx); break;
    case Command::oracle: summary = run_oracle(config, ctx); break;
    case Command::fit: summary = run_fit(config, ctx); break;
    }
    return ctx.finish(std::move(summary));
}

std::vector<RunResult> run_preset_batch(const RunConfig& config, Command command,
                                        const std::filesystem::path& out_dir)
{
    std::vector<RunResult> results;
    for (auto preset : {GeometryPreset::faraday, GeometryPreset::half_faraday, GeometryPreset::voigt45}) {
        RunConfig c = config;
        apply_preset(c, to_string(preset));
        results.push_back(run(c, command, out_dir / std::string(to_string(preset))));
    }
    return results;
}

} // namespace sgc
