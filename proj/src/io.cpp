// io.cpp — CSV and SVG writers

#include "sgc/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "sgc/config.hpp"
#include "sgc/errors.hpp"

namespace sgc {

namespace {

void append_provenance(std::string& out, const Provenance& p)
{
    out += fmt::format("# sgcsim {}\n", sgcsim_version);
    out += fmt::format("# command: {}\n", p.command);
    out += fmt::format("# config_sha256: {}\n", p.config_hash);
}

// Shortest representation that round-trips; deterministic across runs.
std::string num(double x) { return fmt::format("{}", x); }

std::string escape_xml(std::string_view s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// Round step (1, 2 or 5 times a power of ten) giving about `target` ticks.
double tick_step(double span, int target)
{
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) return m * mag;
    }
    return 10.0 * mag;
}

constexpr const char* palette[] = {"#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d68910", "#34495e"};

} // namespace

std::string spectrum_csv(const Spectrum& spectrum, const Provenance& provenance)
{
    std::string out;
    append_provenance(out, provenance);
    out += spectrum_csv_header;
    out += '\n';
    const auto& crossed = spectrum.channel(channel_crossed);
    const auto& direct = spectrum.channel(channel_direct);
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        const Matrix2c& r = spectrum.matrices[k];
        out += fmt::format("{}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}\n", num(spectrum.detunings[k]),
                           num(r(0, 0).real()), num(r(0, 0).imag()), num(r(1, 0).real()), num(r(1, 0).imag()),
                           num(r(0, 1).real()), num(r(0, 1).imag()), num(r(1, 1).real()), num(r(1, 1).imag()),
                           num(crossed[k]), num(direct[k]));
    }
    return out;
}

std::string time_csv(const TimeResponse& response, const Provenance& provenance)
{
    std::string out;
    append_provenance(out, provenance);
    out += time_csv_header;
    out += '\n';
    for (std::size_t k = 0; k < response.t.size(); ++k) {
        out += fmt::format("{}, {}\n", num(response.t[k]), num(response.intensity[k]));
    }
    return out;
}

std::string table_csv(std::span<const std::string> columns, std::span<const std::vector<double>> data,
                      const Provenance& provenance)
{
    if (columns.size() != data.size() || columns.empty()) {
        throw ValidationError("table needs one data vector per column");
    }
    const std::size_t rows = data[0].size();
    for (const auto& col : data) {
        if (col.size() != rows) throw ValidationError("table columns must have equal length");
    }
    std::string out;
    append_provenance(out, provenance);
    for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? ", " : "") + columns[c];
    out += '\n';
    for (std::size_t k = 0; k < rows; ++k) {
        for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? ", " : "") + num(data[c][k]);
        out += '\n';
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError(fmt::format("cannot write '{}'", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ValidationError(fmt::format("failed writing '{}'", path.string()));
}

std::string render_svg(std::span<const Curve> curves, const PlotStyle& style)
{
    if (curves.empty()) throw ValidationError("plot needs at least one curve");
    for (const Curve& c : curves) {
        if (c.x.empty() || c.x.size() != c.y.size()) {
            throw ValidationError(fmt::format("curve '{}' is empty or has mismatched x/y", c.label));
        }
    }

    auto transform_y = [&](double y) { return style.log_y ? std::log10(std::max(y, 1e-300)) : y; };
    double x0 = curves[0].x.front(), x1 = x0, y0 = transform_y(curves[0].y.front()), y1 = y0;
    for (const Curve& c : curves) {
        for (double x : c.x) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
        }
        for (double y : c.y) {
            y0 = std::min(y0, transform_y(y));
            y1 = std::max(y1, transform_y(y));
        }
    }
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;
    const double pad = 0.05 * (y1 - y0);
    y1 += pad;
    if (!style.log_y && y0 >= 0.0) {
        y0 = 0.0;
    } else {
        y0 -= pad;
    }

    const double width = 720.0, height = 440.0;
    const double left = 80.0, right = 20.0, top = 40.0, bottom = 60.0;
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (transform_y(y) - y0) / (y1 - y0)) * ph; };
    auto py_raw = [&](double ty) { return top + (1.0 - (ty - y0) / (y1 - y0)) * ph; };

    std::string svg;
    svg += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        width, height, width, height);
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", left + pw / 2,
                       escape_xml(style.title));
    svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left,
                       top, pw, ph);

    const double xs = tick_step(x1 - x0, 8);
    for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-9 * xs; t += xs) {
        svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n",
                           px(t), top + ph, top + ph + 5);
        svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:g}</text>\n", px(t),
                           top + ph + 18, std::abs(t) < 1e-12 * xs ? 0.0 : t);
    }
    const double ys = tick_step(y1 - y0, 6);
    for (double t = std::ceil(y0 / ys) * ys; t <= y1 + 1e-9 * ys; t += ys) {
        const double v = std::abs(t) < 1e-12 * ys ? 0.0 : t;
        svg += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\"/>\n",
                           left - 5, py_raw(t), left, py_raw(t));
        svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", left - 8,
                           py_raw(t) + 4, style.log_y ? fmt::format("1e{:g}", v) : fmt::format("{:.3g}", v));
    }
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2,
                       height - 15, escape_xml(style.x_label));
    svg += fmt::format(
        "<text x=\"18\" y=\"{0:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0:.2f})\">{1}</text>\n",
        top + ph / 2, escape_xml(style.y_label));

    for (std::size_t i = 0; i < curves.size(); ++i) {
        const Curve& c = curves[i];
        const char* color = palette[i % std::size(palette)];
        std::string points;
        for (std::size_t k = 0; k < c.x.size(); ++k) {
            points += fmt::format("{}{:.2f},{:.2f}", k ? " " : "", px(c.x[k]), py(c.y[k]));
        }
        svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"{}\"/>\n", color,
                           c.dashed ? " stroke-dasharray=\"6,4\"" : "", points);
        const double ly = top + 16.0 + 16.0 * static_cast<double>(i);
        svg += fmt::format(
            "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"1.5\"{}/>\n",
            left + pw - 150, ly, left + pw - 120, ly, color, c.dashed ? " stroke-dasharray=\"6,4\"" : "");
        svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", left + pw - 114, ly + 4,
                           escape_xml(c.label));
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace sgc
