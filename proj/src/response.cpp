// response.cpp — Reflection matrices, detection channels, dip search and Fourier-domain signals

#include "sgc/response.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include <fftw3.h>
#include <fmt/format.h>

#include "sgc/errors.hpp"

namespace sgc {

namespace {

using cd = std::complex<double>;
constexpr cd I{0.0, 1.0};

CVec2 orthogonal_polarization(const CVec2& e)
{
    return {-std::conj(e(1)), std::conj(e(0))};
}

// FFTW planning is not thread-safe; execution on a finished plan is.
std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

class ForwardFft {
public:
    explicit ForwardFft(int n)
        : n_(n),
          buffer_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n))))
    {
        if (!buffer_) throw NumericalError("fftw_malloc failed");
        std::lock_guard lock(fftw_planner_mutex());
        plan_ = fftw_plan_dft_1d(n_, buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
        if (!plan_) {
            fftw_free(buffer_);
            throw NumericalError("fftw plan creation failed");
        }
    }
    ForwardFft(const ForwardFft&) = delete;
    ForwardFft& operator=(const ForwardFft&) = delete;
    ~ForwardFft()
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(buffer_);
    }

    // In-place forward transform of `data` (length n).
    void run(std::vector<cd>& data)
    {
        std::copy(data.begin(), data.end(), reinterpret_cast<cd*>(buffer_));
        fftw_execute(plan_);
        std::copy_n(reinterpret_cast<const cd*>(buffer_), n_, data.begin());
    }

private:
    int n_;
    fftw_complex* buffer_;
    fftw_plan plan_{};
};

double require_uniform(std::span<const double> omega)
{
    if (omega.size() < 2) throw ValidationError("Fourier grid needs at least two points");
    const double step = omega[1] - omega[0];
    if (!(step > 0.0)) throw ValidationError("Fourier grid must be increasing");
    for (std::size_t k = 1; k < omega.size(); ++k) {
        if (std::abs((omega[k] - omega[k - 1]) - step) > 1e-9 * step) {
            throw ValidationError("time-domain transforms need a uniform detuning grid");
        }
    }
    return step;
}

std::vector<double> time_axis(std::size_t n, double step)
{
    std::vector<double> t(n);
    const double dt = 2.0 * std::numbers::pi / (static_cast<double>(n) * step);
    for (std::size_t i = 0; i < n; ++i) t[i] = dt * static_cast<double>(i);
    return t;
}

struct TailPole {
    cd amplitude;
    cd pole;
};

// Single-pole asymptote i a / (ω − z) matched to both grid edges.
std::optional<TailPole> fit_tail(std::span<const double> omega, std::span<const cd> f)
{
    const cd fa = f.front();
    const cd fb = f.back();
    const double wa = omega.front();
    const double wb = omega.back();
    if (std::abs(fa) == 0.0 || std::abs(fb) == 0.0 || std::abs(fa - fb) < 1e-300) return std::nullopt;
    const cd z = (fa * wa - fb * wb) / (fa - fb);
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || !(z.imag() < 0.0)) return std::nullopt;
    return TailPole{-I * fb * (wb - z), z};
}

struct FieldTransform {
    std::vector<double> t;
    std::vector<cd> sigma;
    std::vector<cd> pi;
};

// ∫ over the gate of a sampled non-negative signal, interpolating each sample
// interval exponentially (exact for a single decaying line) and linearly where a
// sample vanishes. Gate edges between samples are clipped inside the interval.
double gated_integral(std::span<const double> t, std::span<const double> v, const TimeGate& gate)
{
    double sum = 0.0;
    for (std::size_t n = 0; n + 1 < t.size(); ++n) {
        const double a = std::max(t[n], gate.start);
        const double b = std::min(t[n + 1], gate.stop);
        if (!(b > a)) continue;
        const double dt = t[n + 1] - t[n];
        const double u0 = (a - t[n]) / dt;
        const double u1 = (b - t[n]) / dt;
        const double v0 = v[n];
        const double v1 = v[n + 1];
        const double ratio = v0 > 0.0 && v1 > 0.0 ? std::log(v1 / v0) : 0.0;
        if (v0 > 0.0 && v1 > 0.0 && std::abs(ratio) > 1e-8) {
            sum += v0 * dt * (std::exp(ratio * u1) - std::exp(ratio * u0)) / ratio;
        } else {
            sum += dt * (u1 - u0) * (v0 + 0.5 * (v1 - v0) * (u0 + u1));
        }
    }
    return sum;
}

double gated_channel_sum(const FieldTransform& ft, const CVec2& e_in, DetectionMode mode, double extinction,
                         const TimeGate& gate)
{
    const CVec2 e_perp = orthogonal_polarization(e_in);
    std::vector<double> v(ft.t.size());
    for (std::size_t n = 0; n < ft.t.size(); ++n) {
        const CVec2 field(ft.sigma[n], ft.pi[n]);
        v[n] = mode == DetectionMode::crossed_polarimeter
                   ? std::norm(e_perp.dot(field)) + extinction * std::norm(e_in.dot(field))
                   : field.squaredNorm();
    }
    return gated_integral(ft.t, v, gate);
}

} // namespace

std::string_view to_string(DetectionMode mode)
{
    return mode == DetectionMode::crossed_polarimeter ? "crossed_polarimeter" : "direct_monochromator";
}

DetectionMode detection_mode_from_string(std::string_view name)
{
    if (name == "crossed_polarimeter") return DetectionMode::crossed_polarimeter;
    if (name == "direct_monochromator") return DetectionMode::direct_monochromator;
    throw ValidationError("unknown detection mode '" + std::string(name) + "'");
}

const char* channel_name(DetectionMode mode)
{
    return mode == DetectionMode::crossed_polarimeter ? channel_crossed : channel_direct;
}

void DetectionConfig::validate() const
{
    if (!(extinction >= 0.0 && extinction <= 1.0)) throw ValidationError("detection.extinction must lie in [0, 1]");
    if (analyzer) {
        if (!(analyzer->width > 0.0)) throw ValidationError("detection.analyzer.width must be > 0");
        if (!(analyzer->depth >= 0.0)) throw ValidationError("detection.analyzer.depth must be >= 0");
    }
    if (time_gate && !(time_gate->start >= 0.0 && time_gate->stop > time_gate->start)) {
        throw ValidationError("detection.time_gate must satisfy stop > start >= 0");
    }
}

Matrix2c reflection_matrix(const LevelScheme& scheme, const CavityParams& cavity, double delta,
                           const Toggles& toggles)
{
    const Eigen::MatrixX2cd c = coupling_matrix(scheme, cavity);
    const MatrixXcd m = response_kernel(scheme, cavity, toggles, delta);
    Eigen::PartialPivLU<MatrixXcd> lu(m);
    if (lu.rcond() < 1e-14) {
        throw NumericalError(fmt::format("response kernel is singular at delta = {} (rcond {:.3e})",
                                         delta, lu.rcond()));
    }
    const Eigen::MatrixX2cd x = lu.solve(c);
    return cavity.r_c + I * cavity.amplitude() * (c.adjoint() * x);
}

Matrix2c reflection_from_coherences(const LevelScheme& scheme, const CavityParams& cavity, double delta,
                                    const Toggles& toggles)
{
    const Eigen::MatrixX2cd c = coupling_matrix(scheme, cavity);
    Matrix2c r = cavity.r_c;
    for (int p = 0; p < 2; ++p) {
        DriveConfig drive;
        drive.rabi = 1.0;
        drive.polarization = CVec2::Unit(p);
        const VectorXcd rho = linear_response(scheme, cavity, drive, delta, toggles);
        r.col(p) -= (I * cavity.amplitude() / drive.rabi) * (c.adjoint() * rho);
    }
    return r;
}

ChannelIntensity channel_intensity(const Matrix2c& r, const DetectionConfig& detection,
                                   const CVec2& in_polarization)
{
    const CVec2 out = r * in_polarization;
    const CVec2 e_perp = orthogonal_polarization(in_polarization);
    ChannelIntensity ci;
    ci.crossed = std::norm(e_perp.dot(out)) + detection.extinction * std::norm(in_polarization.dot(out));
    ci.direct = out.squaredNorm();
    return ci;
}

std::vector<double> Grid::values() const
{
    validate();
    std::vector<double> v(static_cast<std::size_t>(points));
    if (points == 1) {
        v[0] = min;
        return v;
    }
    const double step = (max - min) / (points - 1);
    for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = min + step * i;
    return v;
}

void Grid::validate() const
{
    if (points < 1) throw ValidationError("grid must contain at least one point");
    if (points > 1 && !(max > min)) throw ValidationError("grid max must exceed min");
}

std::vector<double> fft_grid(double half_width, int points)
{
    if (!(half_width > 0.0) || points < 2) throw ValidationError("fft grid needs half_width > 0 and >= 2 points");
    std::vector<double> v(static_cast<std::size_t>(points));
    const double step = 2.0 * half_width / points;
    for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = -half_width + step * i;
    return v;
}

double Spectrum::baseline(const std::string& name) const
{
    DetectionConfig det;
    det.extinction = extinction;
    const ChannelIntensity ci = channel_intensity(r_c, det, in_polarization);
    if (name == channel_crossed) return ci.crossed;
    if (name == channel_direct) return ci.direct;
    throw ValidationError("unknown channel '" + name + "'");
}

const std::vector<double>& Spectrum::channel(const std::string& name) const
{
    const auto it = channels.find(name);
    if (it == channels.end()) throw ValidationError("unknown channel '" + name + "'");
    return it->second;
}

Spectrum spectrum_sweep(const LevelScheme& scheme, const CavityParams& cavity, const DetectionConfig& detection,
                        std::span<const double> grid, const Toggles& toggles)
{
    if (grid.empty()) throw ValidationError("spectrum grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw ValidationError("spectrum grid must be strictly increasing");
    }
    cavity.validate();
    detection.validate();

    Spectrum s;
    s.detunings.assign(grid.begin(), grid.end());
    s.in_polarization = scheme.geometry.in_polarization;
    s.r_c = cavity.r_c;
    s.extinction = detection.extinction;
    s.matrices.resize(grid.size());
    auto& crossed = s.channels[channel_crossed];
    auto& direct = s.channels[channel_direct];
    crossed.resize(grid.size());
    direct.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        s.matrices[i] = reflection_matrix(scheme, cavity, grid[i], toggles);
        const ChannelIntensity ci = channel_intensity(s.matrices[i], detection, s.in_polarization);
        crossed[i] = ci.crossed;
        direct[i] = ci.direct;
    }
    return s;
}

std::vector<std::pair<std::size_t, double>> local_minima(std::span<const double> y)
{
    std::vector<std::pair<std::size_t, double>> out;
    const std::size_t n = y.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (y[i] < y[i - 1]) {
            // Extend over a plateau.
            std::size_t j = i;
            while (j + 1 < n && y[j + 1] == y[i]) ++j;
            if (j + 1 < n && y[j + 1] > y[i]) {
                const std::size_t centre = (i + j) / 2;
                double left = y[i];
                for (std::size_t k = i; k-- > 0;) {
                    if (y[k] < y[i]) break;
                    left = std::max(left, y[k]);
                }
                double right = y[i];
                for (std::size_t k = j + 1; k < n; ++k) {
                    if (y[k] < y[i]) break;
                    right = std::max(right, y[k]);
                }
                out.emplace_back(centre, std::min(left, right) - y[i]);
            }
            i = j + 1;
        } else {
            ++i;
        }
    }
    return out;
}

std::vector<Dip> find_dips(std::span<const double> x, std::span<const double> y, double baseline,
                           const DipOptions& options)
{
    if (x.size() != y.size()) throw ValidationError("x and y must have equal length");
    std::vector<Dip> dips;
    if (y.size() < 3) return dips;
    const double gmax = *std::max_element(y.begin(), y.end());
    const double threshold = options.prominence_fraction * (gmax - baseline);

    for (const auto& [idx, prominence] : local_minima(y)) {
        if (!(prominence >= threshold) || prominence <= 0.0) continue;
        Dip d;
        d.position = x[idx];
        d.value = y[idx];
        d.depth = y[idx] - baseline;
        d.prominence = prominence;
        const double ref = y[idx] + prominence;  // lower adjacent peak
        d.relative_depth = (ref - baseline) > 0.0 ? d.depth / (ref - baseline) : 0.0;
        d.reaches_baseline = d.relative_depth <= options.baseline_fraction;

        const double half_level = y[idx] + 0.5 * prominence;
        auto crossing = [&](std::size_t a, std::size_t b) {
            const double t = (half_level - y[a]) / (y[b] - y[a]);
            return x[a] + t * (x[b] - x[a]);
        };
        double left = x.front();
        for (std::size_t k = idx; k > 0; --k) {
            if (y[k - 1] >= half_level) {
                left = crossing(k, k - 1);
                break;
            }
        }
        double right = x.back();
        for (std::size_t k = idx; k + 1 < y.size(); ++k) {
            if (y[k + 1] >= half_level) {
                right = crossing(k, k + 1);
                break;
            }
        }
        d.width = right - left;
        dips.push_back(d);
    }
    return dips;
}

std::vector<Dip> find_dips(const Spectrum& spectrum, const std::string& channel, const DipOptions& options)
{
    return find_dips(spectrum.detunings, spectrum.channel(channel), spectrum.baseline(channel), options);
}

std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y, double prominence_fraction)
{
    if (x.size() != y.size()) throw ValidationError("x and y must have equal length");
    std::vector<Peak> peaks;
    if (y.size() < 3) return peaks;
    std::vector<double> neg(y.size());
    std::transform(y.begin(), y.end(), neg.begin(), [](double v) { return -v; });
    const double gmax = *std::max_element(y.begin(), y.end());
    const double gmin = *std::min_element(y.begin(), y.end());
    const double threshold = prominence_fraction * (gmax - std::min(gmin, 0.0));
    for (const auto& [idx, prominence] : local_minima(neg)) {
        if (prominence >= threshold && prominence > 0.0) peaks.push_back({x[idx], y[idx], prominence});
    }
    return peaks;
}

std::vector<cd> causal_transform(std::span<const double> omega, std::span<const cd> f, bool tail_correction)
{
    if (omega.size() != f.size()) throw ValidationError("omega and f must have equal length");
    const double step = require_uniform(omega);
    const std::size_t n = f.size();
    const std::vector<double> t = time_axis(n, step);

    std::vector<cd> work(f.begin(), f.end());
    const std::optional<TailPole> tail = tail_correction ? fit_tail(omega, f) : std::nullopt;
    if (tail) {
        for (std::size_t k = 0; k < n; ++k) work[k] -= I * tail->amplitude / (omega[k] - tail->pole);
    }

    ForwardFft fft(static_cast<int>(n));
    fft.run(work);

    const double scale = step / (2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) {
        work[i] *= scale * std::exp(-I * omega.front() * t[i]);
        if (tail) work[i] += tail->amplitude * std::exp(-I * tail->pole * t[i]);
    }
    return work;
}

TimeResponse time_response(const Spectrum& spectrum, const DetectionConfig& detection,
                           const TimeResponseOptions& options)
{
    detection.validate();
    const std::size_t n = spectrum.size();
    const double step = require_uniform(spectrum.detunings);

    std::vector<cd> fs(n), fp(n);
    for (std::size_t k = 0; k < n; ++k) {
        const CVec2 out = (spectrum.matrices[k] - spectrum.r_c) * spectrum.in_polarization;
        fs[k] = out(0);
        fp[k] = out(1);
    }

    TimeResponse tr;
    tr.edge_residual = std::max(std::hypot(std::abs(fs.front()), std::abs(fp.front())),
                                std::hypot(std::abs(fs.back()), std::abs(fp.back())));
    FieldTransform ft{time_axis(n, step), causal_transform(spectrum.detunings, fs, options.tail_correction),
                      causal_transform(spectrum.detunings, fp, options.tail_correction)};

    const CVec2 e_in = spectrum.in_polarization;
    const CVec2 e_perp = orthogonal_polarization(e_in);
    const TimeGate gate = detection.time_gate.value_or(TimeGate{});
    tr.t = ft.t;
    tr.intensity.resize(n);
    tr.sigma.resize(n);
    tr.pi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const CVec2 field(ft.sigma[i], ft.pi[i]);
        tr.sigma[i] = std::norm(ft.sigma[i]);
        tr.pi[i] = std::norm(ft.pi[i]);
        double v = detection.mode == DetectionMode::crossed_polarimeter
                       ? std::norm(e_perp.dot(field)) + detection.extinction * std::norm(e_in.dot(field))
                       : field.squaredNorm();
        tr.intensity[i] = gate.contains(tr.t[i]) ? v : 0.0;
    }
    return tr;
}

cd analyzer_transmission(const AnalyzerLine& line, double omega, double delta)
{
    const double half_width = 0.5 * line.width;
    return std::exp(-I * (0.5 * line.depth * half_width) / (omega - delta + I * half_width));
}

MeasuredSpectrum simulate_measurement(const Spectrum& spectrum, const DetectionConfig& detection,
                                      std::span<const double> analyzer_detunings)
{
    detection.validate();
    if (!detection.analyzer) throw ValidationError("simulate_measurement needs detection.analyzer");
    if (analyzer_detunings.empty()) throw ValidationError("analyzer detuning grid is empty");
    const std::size_t n = spectrum.size();
    const double step = require_uniform(spectrum.detunings);
    const TimeGate gate = detection.time_gate.value_or(TimeGate{});
    const CVec2 e_in = spectrum.in_polarization;

    std::vector<CVec2> resonant(n);
    for (std::size_t k = 0; k < n; ++k) resonant[k] = (spectrum.matrices[k] - spectrum.r_c) * e_in;
    const CVec2 prompt = spectrum.r_c * e_in;

    auto counts = [&](const std::vector<cd>& ts) {
        std::vector<cd> fs(n), fp(n);
        for (std::size_t k = 0; k < n; ++k) {
            const CVec2 field = resonant[k] * ts[k] + prompt * (ts[k] - 1.0);
            fs[k] = field(0);
            fp[k] = field(1);
        }
        FieldTransform ft{time_axis(n, step), causal_transform(spectrum.detunings, fs, true),
                          causal_transform(spectrum.detunings, fp, true)};
        return gated_channel_sum(ft, e_in, detection.mode, detection.extinction, gate);
    };

    MeasuredSpectrum out;
    out.analyzer_detunings.assign(analyzer_detunings.begin(), analyzer_detunings.end());
    out.reference = counts(std::vector<cd>(n, cd{1.0, 0.0}));
    std::vector<cd> ts(n);
    for (const double delta : analyzer_detunings) {
        for (std::size_t k = 0; k < n; ++k) ts[k] = analyzer_transmission(*detection.analyzer, spectrum.detunings[k], delta);
        const double c = counts(ts);
        out.intensity.push_back(c);
        out.absorption.push_back(out.reference - c);
    }
    return out;
}

} // namespace sgc
