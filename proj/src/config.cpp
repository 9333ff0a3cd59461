// config.cpp — JSON run configuration with strict key checking

#include "sgc/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "sgc/errors.hpp"

namespace sgc {

using nlohmann::json;

namespace {

using cd = std::complex<double>;

std::string join(const std::string& path, std::string_view key)
{
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

// Walks one JSON object, converting fields and remembering which keys were
// consumed so that leftovers can be reported as unknown.
class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object()) fail(path_, "must be an object");
    }

    [[noreturn]] static void fail(const std::string& path, std::string_view what)
    {
        throw ValidationError(fmt::format("config key '{}' {}", path.empty() ? "<root>" : path, what));
    }

    const json* find(std::string_view key)
    {
        auto it = node_.find(std::string(key));
        if (it == node_.end()) return nullptr;
        used_.insert(std::string(key));
        return &*it;
    }

    std::string path(std::string_view key) const { return join(path_, key); }

    void number(std::string_view key, double& out)
    {
        if (const json* v = find(key)) out = as_number(*v, path(key));
    }

    void integer(std::string_view key, int& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) fail(path(key), "must be an integer");
            const auto value = v->get<long long>();
            if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max()) {
                fail(path(key), "is out of range");
            }
            out = static_cast<int>(value);
        }
    }

    void boolean(std::string_view key, bool& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) fail(path(key), "must be true or false");
            out = v->get<bool>();
        }
    }

    void string(std::string_view key, std::string& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_string()) fail(path(key), "must be a string");
            out = v->get<std::string>();
        }
    }

    // Optional number where null means "unset".
    void optional_number(std::string_view key, std::optional<double>& out)
    {
        if (const json* v = find(key)) {
            if (v->is_null()) {
                out.reset();
            } else {
                out = as_number(*v, path(key));
            }
        }
    }

    void finish() const
    {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!used_.contains(it.key())) fail(join(path_, it.key()), "is not a recognized key");
        }
    }

    static double as_number(const json& v, const std::string& path)
    {
        if (!v.is_number()) fail(path, "must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(path, "must be finite");
        return x;
    }

    static cd as_complex(const json& v, const std::string& path)
    {
        if (v.is_number()) return {as_number(v, path), 0.0};
        if (!v.is_array() || v.size() != 2) fail(path, "must be a number or a [re, im] pair");
        return {as_number(v[0], path + "[0]"), as_number(v[1], path + "[1]")};
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> used_;
};

json complex_json(cd z) { return json::array({z.real(), z.imag()}); }

json vec3_json(const Vec3& v) { return {{"k0", v(0)}, {"pi", v(1)}, {"sigma", v(2)}}; }

Vec3 read_vec3(const json& node, const std::string& path)
{
    Reader r(node, path);
    double k0 = 0.0, pi = 0.0, sigma = 0.0;
    r.number("k0", k0);
    r.number("pi", pi);
    r.number("sigma", sigma);
    r.finish();
    return frame::make(k0, sigma, pi);
}

json cvec2_json(const CVec2& v) { return {{"sigma", complex_json(v(0))}, {"pi", complex_json(v(1))}}; }

CVec2 read_cvec2(const json& node, const std::string& path)
{
    Reader r(node, path);
    CVec2 v = CVec2::Zero();
    if (const json* s = r.find("sigma")) v(0) = Reader::as_complex(*s, r.path("sigma"));
    if (const json* p = r.find("pi")) v(1) = Reader::as_complex(*p, r.path("pi"));
    r.finish();
    return v;
}

// Matrix entries keyed by (output, input): "ps" is pi out, sigma in.
constexpr std::array<std::pair<const char*, std::pair<int, int>>, 4> matrix_keys{{
    {"ss", {0, 0}}, {"ps", {1, 0}}, {"sp", {0, 1}}, {"pp", {1, 1}}}};

json matrix_json(const Matrix2c& m)
{
    json j = json::object();
    for (const auto& [key, idx] : matrix_keys) j[key] = complex_json(m(idx.first, idx.second));
    return j;
}

Matrix2c read_matrix(const json& node, const std::string& path)
{
    Reader r(node, path);
    Matrix2c m = Matrix2c::Zero();
    for (const auto& [key, idx] : matrix_keys) {
        if (const json* v = r.find(key)) m(idx.first, idx.second) = Reader::as_complex(*v, r.path(key));
    }
    r.finish();
    return m;
}

json grid_json(const Grid& g) { return {{"min", g.min}, {"max", g.max}, {"points", g.points}}; }

void read_grid(const json& node, const std::string& path, Grid& g)
{
    Reader r(node, path);
    r.number("min", g.min);
    r.number("max", g.max);
    r.integer("points", g.points);
    r.finish();
}

// Infinite values (semi-infinite substrate, open-ended gate) serialize as null.
json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void read_finite_or_inf(Reader& r, std::string_view key, double& out)
{
    if (const json* v = r.find(key)) {
        out = v->is_null() ? std::numeric_limits<double>::infinity() : Reader::as_number(*v, r.path(key));
    }
}

// ---- sections ------------------------------------------------------------

json species_json(const NuclearSpecies& s)
{
    return {{"g_ground", s.g_ground},           {"g_excited", s.g_excited},
            {"gamma_ev", s.gamma_ev},           {"transition_kev", s.transition_kev},
            {"magneton_ev_per_t", s.magneton_ev_per_t}};
}

void read_species(const json& node, NuclearSpecies& s)
{
    Reader r(node, "species");
    r.number("g_ground", s.g_ground);
    r.number("g_excited", s.g_excited);
    r.number("gamma_ev", s.gamma_ev);
    r.number("transition_kev", s.transition_kev);
    r.number("magneton_ev_per_t", s.magneton_ev_per_t);
    r.finish();
}

json geometry_json(const GeometryConfig& g)
{
    json j = {{"preset", std::string(to_string(g.preset))},
              {"b_hat", vec3_json(g.b_hat)},
              {"b_tesla", g.b_tesla},
              {"in_polarization", cvec2_json(g.in_polarization)}};
    if (g.misalignment) {
        j["misalignment"] = {{"axis", vec3_json(g.misalignment->axis)}, {"angle_deg", g.misalignment->angle_deg}};
    } else {
        j["misalignment"] = nullptr;
    }
    return j;
}

void read_geometry(const json& node, GeometryConfig& g)
{
    Reader r(node, "geometry");
    std::string preset_name;
    r.string("preset", preset_name);
    std::optional<Vec3> b_hat;
    if (const json* v = r.find("b_hat")) b_hat = read_vec3(*v, r.path("b_hat"));
    double b_tesla = g.b_tesla;
    r.number("b_tesla", b_tesla);

    if (!preset_name.empty()) {
        GeometryPreset preset{};
        try {
            preset = preset_from_string(preset_name);
        } catch (const ValidationError&) {
            Reader::fail(r.path("preset"), fmt::format("has unknown value '{}'", preset_name));
        }
        const CVec2 pol = g.in_polarization;
        g = GeometryConfig::from_preset(preset, b_tesla);
        g.in_polarization = pol;
        if (preset == GeometryPreset::custom) {
            if (!b_hat) Reader::fail(r.path("b_hat"), "is required for the custom preset");
            g.b_hat = *b_hat;
        } else if (b_hat && (*b_hat - g.b_hat).norm() > 1e-12) {
            Reader::fail(r.path("b_hat"), fmt::format("contradicts preset '{}'", preset_name));
        }
    } else if (b_hat) {
        g.preset = GeometryPreset::custom;
        g.b_hat = *b_hat;
    }
    g.b_tesla = b_tesla;

    if (const json* v = r.find("in_polarization")) g.in_polarization = read_cvec2(*v, r.path("in_polarization"));
    if (const json* v = r.find("misalignment")) {
        if (v->is_null()) {
            g.misalignment.reset();
        } else {
            Reader m(*v, r.path("misalignment"));
            Misalignment mis;
            if (const json* a = m.find("axis")) mis.axis = read_vec3(*a, m.path("axis"));
            m.number("angle_deg", mis.angle_deg);
            m.finish();
            g.misalignment = mis;
        }
    }
    r.finish();

    if (std::abs(g.b_hat.norm() - 1.0) > 1e-12) Reader::fail("geometry.b_hat", "must be a unit vector");
    if (std::abs(g.in_polarization.norm() - 1.0) > 1e-12) {
        Reader::fail("geometry.in_polarization", "must have unit norm");
    }
    if (g.misalignment && g.misalignment->axis.norm() == 0.0) {
        Reader::fail("geometry.misalignment.axis", "must be nonzero");
    }
    // A zero tilt is the same geometry as no tilt; normalize so both echo identically.
    if (g.misalignment && g.misalignment->angle_deg == 0.0) g.misalignment.reset();
}

json cavity_json(const CavityParams& c)
{
    return {{"gamma_s", c.gamma_s},
            {"delta_ls", c.delta_ls},
            {"r_c", matrix_json(c.r_c)},
            {"amplitude_scale", c.amplitude_scale ? json(*c.amplitude_scale) : json(nullptr)},
            {"couple_sigma", c.couple_sigma},
            {"couple_pi", c.couple_pi}};
}

void read_cavity(const json& node, CavityParams& c)
{
    Reader r(node, "cavity");
    r.number("gamma_s", c.gamma_s);
    r.number("delta_ls", c.delta_ls);
    if (const json* v = r.find("r_c")) c.r_c = read_matrix(*v, r.path("r_c"));
    r.optional_number("amplitude_scale", c.amplitude_scale);
    r.boolean("couple_sigma", c.couple_sigma);
    r.boolean("couple_pi", c.couple_pi);
    r.finish();
}

json detection_json(const DetectionConfig& d)
{
    json j = {{"mode", std::string(to_string(d.mode))}, {"extinction", d.extinction}};
    j["analyzer"] = d.analyzer ? json{{"width", d.analyzer->width}, {"depth", d.analyzer->depth}} : json(nullptr);
    j["time_gate"] = d.time_gate ? json{{"start", d.time_gate->start}, {"stop", finite_or_null(d.time_gate->stop)}}
                                 : json(nullptr);
    return j;
}

void read_detection(const json& node, DetectionConfig& d)
{
    Reader r(node, "detection");
    std::string mode;
    r.string("mode", mode);
    if (!mode.empty()) {
        try {
            d.mode = detection_mode_from_string(mode);
        } catch (const ValidationError&) {
            Reader::fail(r.path("mode"), fmt::format("has unknown value '{}'", mode));
        }
    }
    r.number("extinction", d.extinction);
    if (const json* v = r.find("analyzer")) {
        if (v->is_null()) {
            d.analyzer.reset();
        } else {
            Reader a(*v, r.path("analyzer"));
            AnalyzerLine line;
            a.number("width", line.width);
            a.number("depth", line.depth);
            a.finish();
            d.analyzer = line;
        }
    }
    if (const json* v = r.find("time_gate")) {
        if (v->is_null()) {
            d.time_gate.reset();
        } else {
            Reader t(*v, r.path("time_gate"));
            TimeGate gate;
            t.number("start", gate.start);
            read_finite_or_inf(t, "stop", gate.stop);
            t.finish();
            d.time_gate = gate;
        }
    }
    r.finish();
}

json layer_json(const oracle::Layer& l)
{
    json j = {{"name", l.name}, {"thickness_nm", finite_or_null(l.thickness_nm)}, {"delta", l.delta}, {"beta", l.beta}};
    j["nuclear"] = l.nuclear ? json{{"strength", l.nuclear->strength}, {"width", l.nuclear->width}} : json(nullptr);
    return j;
}

oracle::Layer read_layer(const json& node, const std::string& path)
{
    Reader r(node, path);
    oracle::Layer l;
    r.string("name", l.name);
    read_finite_or_inf(r, "thickness_nm", l.thickness_nm);
    r.number("delta", l.delta);
    r.number("beta", l.beta);
    if (const json* v = r.find("nuclear"); v && !v->is_null()) {
        Reader n(*v, r.path("nuclear"));
        oracle::NuclearLine line;
        n.number("strength", line.strength);
        n.number("width", line.width);
        n.finish();
        l.nuclear = line;
    }
    r.finish();
    return l;
}

json oracle_json(const OracleConfig& o)
{
    json layers = json::array();
    for (const auto& l : o.stack.layers) layers.push_back(layer_json(l));
    return {{"layers", layers},
            {"wavelength_nm", o.stack.wavelength_nm},
            {"angle_mrad", o.angle_mrad ? json(*o.angle_mrad) : json(nullptr)},
            {"scan_min_mrad", o.scan_min_mrad},
            {"scan_max_mrad", o.scan_max_mrad},
            {"scan_points", o.scan_points},
            {"detuning", grid_json(o.detuning)}};
}

void read_oracle(const json& node, OracleConfig& o)
{
    Reader r(node, "oracle");
    if (const json* v = r.find("layers")) {
        if (!v->is_array()) Reader::fail(r.path("layers"), "must be an array");
        o.stack.layers.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            o.stack.layers.push_back(read_layer((*v)[i], fmt::format("oracle.layers[{}]", i)));
        }
    }
    r.number("wavelength_nm", o.stack.wavelength_nm);
    r.optional_number("angle_mrad", o.angle_mrad);
    r.number("scan_min_mrad", o.scan_min_mrad);
    r.number("scan_max_mrad", o.scan_max_mrad);
    r.integer("scan_points", o.scan_points);
    if (const json* v = r.find("detuning")) read_grid(*v, r.path("detuning"), o.detuning);
    r.finish();
}

json to_json(const RunConfig& c)
{
    return {
        {"species", species_json(c.species)},
        {"geometry", geometry_json(c.geometry)},
        {"cavity", cavity_json(c.cavity)},
        {"drive", {{"rabi", c.drive.rabi}}},
        {"detection", detection_json(c.detection)},
        {"grid", grid_json(c.grid)},
        {"time_grid",
         {{"half_width", c.time_grid.half_width},
          {"points", c.time_grid.points},
          {"tail_correction", c.time_grid.tail_correction}}},
        {"measure", {{"analyzer", grid_json(c.measure.analyzer)}}},
        {"toggles",
         {{"sgc_dissipative", c.toggles.sgc_dissipative},
          {"sgc_hamiltonian", c.toggles.sgc_hamiltonian},
          {"sr", c.toggles.sr}}},
        {"dips",
         {{"prominence_fraction", c.dips.prominence_fraction}, {"baseline_fraction", c.dips.baseline_fraction}}},
        {"oracle", oracle_json(c.oracle)},
        {"outputs", {{"directory", c.outputs.directory}, {"csv", c.outputs.csv}, {"svg", c.outputs.svg}}},
    };
}

// Re-wraps a schema violation from a module validator with the config prefix.
template <class F>
void checked(F&& f)
{
    try {
        f();
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("invalid config: {}", e.what()));
    }
}

} // namespace

void TimeGridConfig::validate() const
{
    if (!(half_width > 0.0)) throw ValidationError("time_grid.half_width must be > 0");
    if (points < 16) throw ValidationError("time_grid.points must be >= 16");
}

void OracleConfig::validate() const
{
    stack.validate();
    if (angle_mrad && !(*angle_mrad > 0.0)) throw ValidationError("oracle.angle_mrad must be > 0");
    if (!(scan_max_mrad > scan_min_mrad && scan_min_mrad > 0.0)) {
        throw ValidationError("oracle scan range must satisfy 0 < scan_min_mrad < scan_max_mrad");
    }
    if (scan_points < 3) throw ValidationError("oracle.scan_points must be >= 3");
    detuning.validate();
    if (detuning.points < 7) throw ValidationError("oracle.detuning.points must be >= 7");
}

void RunConfig::validate() const
{
    checked([&] {
        species.validate();
        geometry.validate();
        cavity.validate();
        DriveConfig{drive.rabi, geometry.in_polarization}.validate();
        detection.validate();
        grid.validate();
        time_grid.validate();
        measure.analyzer.validate();
        oracle.validate();
        if (!(dips.prominence_fraction > 0.0 && dips.prominence_fraction < 1.0)) {
            throw ValidationError("dips.prominence_fraction must lie in (0, 1)");
        }
        if (!(dips.baseline_fraction > 0.0 && dips.baseline_fraction < 1.0)) {
            throw ValidationError("dips.baseline_fraction must lie in (0, 1)");
        }
        if (outputs.directory.empty()) throw ValidationError("outputs.directory must not be empty");
    });
}

RunConfig parse_config(std::string_view text)
{
    json root;
    std::string trimmed(text);
    if (trimmed.find_first_not_of(" \t\r\n") == std::string::npos) {
        root = json::object();
    } else {
        try {
            root = json::parse(trimmed);
        } catch (const json::parse_error& e) {
            throw ValidationError(fmt::format("config is not valid JSON: {}", e.what()));
        }
    }

    RunConfig c;
    Reader r(root, "");
    if (const json* v = r.find("species")) read_species(*v, c.species);
    if (const json* v = r.find("geometry")) read_geometry(*v, c.geometry);
    if (const json* v = r.find("cavity")) read_cavity(*v, c.cavity);
    if (const json* v = r.find("drive")) {
        Reader d(*v, "drive");
        d.number("rabi", c.drive.rabi);
        d.finish();
    }
    if (const json* v = r.find("detection")) read_detection(*v, c.detection);
    if (const json* v = r.find("grid")) read_grid(*v, "grid", c.grid);
    if (const json* v = r.find("time_grid")) {
        Reader t(*v, "time_grid");
        t.number("half_width", c.time_grid.half_width);
        t.integer("points", c.time_grid.points);
        t.boolean("tail_correction", c.time_grid.tail_correction);
        t.finish();
    }
    if (const json* v = r.find("measure")) {
        Reader m(*v, "measure");
        if (const json* a = m.find("analyzer")) read_grid(*a, "measure.analyzer", c.measure.analyzer);
        m.finish();
    }
    if (const json* v = r.find("toggles")) {
        Reader t(*v, "toggles");
        t.boolean("sgc_dissipative", c.toggles.sgc_dissipative);
        t.boolean("sgc_hamiltonian", c.toggles.sgc_hamiltonian);
        t.boolean("sr", c.toggles.sr);
        t.finish();
    }
    if (const json* v = r.find("dips")) {
        Reader d(*v, "dips");
        d.number("prominence_fraction", c.dips.prominence_fraction);
        d.number("baseline_fraction", c.dips.baseline_fraction);
        d.finish();
    }
    if (const json* v = r.find("oracle")) read_oracle(*v, c.oracle);
    if (const json* v = r.find("outputs")) {
        Reader o(*v, "outputs");
        o.string("directory", c.outputs.directory);
        o.boolean("csv", c.outputs.csv);
        o.boolean("svg", c.outputs.svg);
        o.finish();
    }
    r.finish();

    c.drive.polarization = c.geometry.in_polarization;
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(fmt::format("cannot read config file '{}'", path.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string dump_config(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

std::string config_hash(const RunConfig& config)
{
    // Output locations do not influence any computed number, so they are left
    // out: the same physics written to a different directory hashes the same.
    json j = to_json(config);
    j.erase("outputs");
    const std::string text = j.dump();
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(text.data(), text.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
        throw NumericalError("SHA-256 digest failed");
    }
    std::string hex;
    hex.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

void apply_preset(RunConfig& config, std::string_view preset)
{
    GeometryPreset p{};
    try {
        p = preset_from_string(preset);
    } catch (const ValidationError&) {
        throw ValidationError(fmt::format("--preset has unknown value '{}'", preset));
    }
    if (p == GeometryPreset::custom) throw ValidationError("--preset custom needs geometry.b_hat in the config");
    GeometryConfig g = GeometryConfig::from_preset(p, config.geometry.b_tesla);
    g.in_polarization = config.geometry.in_polarization;
    g.misalignment = config.geometry.misalignment;
    config.geometry = g;
}

void apply_sgc_switch(RunConfig& config, std::string_view on_off)
{
    if (on_off == "on") {
        config.toggles.sgc_dissipative = config.toggles.sgc_hamiltonian = true;
    } else if (on_off == "off") {
        config.toggles.sgc_dissipative = config.toggles.sgc_hamiltonian = false;
    } else {
        throw ValidationError(fmt::format("--sgc expects 'on' or 'off', got '{}'", on_off));
    }
}

Grid parse_grid_spec(std::string_view spec)
{
    std::array<std::string_view, 3> parts;
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
        const std::size_t colon = spec.find(':', start);
        if ((i < 2) != (colon != std::string_view::npos)) {
            throw ValidationError(fmt::format("--grid expects min:max:n, got '{}'", spec));
        }
        parts[static_cast<std::size_t>(i)] = spec.substr(start, i < 2 ? colon - start : std::string_view::npos);
        start = colon + 1;
    }
    auto to_double = [&](std::string_view s) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw ValidationError(fmt::format("--grid has a malformed number '{}'", s));
        }
        return v;
    };
    Grid g{to_double(parts[0]), to_double(parts[1]), 0};
    const auto [ptr, ec] = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), g.points);
    if (ec != std::errc{} || ptr != parts[2].data() + parts[2].size()) {
        throw ValidationError(fmt::format("--grid has a malformed point count '{}'", parts[2]));
    }
    g.validate();
    return g;
}

} // namespace sgc
