// test_response.cpp — Reflectivity, detection channels, dips, time response and measurement

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "sgc/errors.hpp"
#include "sgc/response.hpp"

using namespace sgc;
using cd = std::complex<double>;

namespace {

constexpr cd I{0.0, 1.0};

LevelScheme preset_scheme(GeometryPreset preset)
{
    return build_level_scheme(NuclearSpecies::fe57(), GeometryConfig::from_preset(preset));
}

LevelScheme only_transitions(LevelScheme scheme, const std::vector<std::size_t>& keep)
{
    std::vector<Transition> kept;
    for (auto k : keep) kept.push_back(scheme.transitions.at(k));
    scheme.transitions = kept;
    return scheme;
}

std::size_t first_bright(const LevelScheme& scheme)
{
    for (std::size_t k = 0; k < scheme.size(); ++k) {
        if (!scheme.transitions[k].is_dark()) return k;
    }
    return 0;
}

double max_singular_value(const Matrix2c& r)
{
    return Eigen::JacobiSVD<Matrix2c>(r).singularValues()(0);
}

DetectionConfig direct_detection()
{
    DetectionConfig d;
    d.mode = DetectionMode::direct_monochromator;
    return d;
}

double direct_intensity(const LevelScheme& scheme, const CavityParams& cav, double delta)
{
    return channel_intensity(reflection_matrix(scheme, cav, delta), direct_detection(),
                             scheme.geometry.in_polarization)
        .direct;
}

Vec3 random_unit(std::mt19937& rng)
{
    std::normal_distribution<double> g;
    Vec3 v(g(rng), g(rng), g(rng));
    return v.normalized();
}

// Closed-form time integral of |Σ_j a_j e^{−i z_j t}|² over [t1, ∞).
double pole_sum_energy(const std::vector<cd>& a, const std::vector<cd>& z, double t1)
{
    cd sum = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        for (std::size_t k = 0; k < a.size(); ++k) {
            const cd c = z[j] - std::conj(z[k]);
            sum += a[j] * std::conj(a[k]) * std::exp(-I * c * t1) / (I * c);
        }
    }
    return sum.real();
}

} // namespace

TEST_CASE("reflection matrix agrees with the coherence route")
{
    for (auto preset : {GeometryPreset::faraday, GeometryPreset::half_faraday, GeometryPreset::voigt45}) {
        const auto scheme = preset_scheme(preset);
        CavityParams cav;
        cav.r_c << cd(0.1, -0.2), cd(0.03, 0.01), cd(-0.02, 0.04), cd(0.2, 0.1);
        for (auto toggles : {Toggles::all_on(), Toggles::sgc_off(), Toggles{true, false, true}}) {
            double worst = 0.0;
            for (int i = 0; i <= 200; ++i) {
                const double delta = -80.0 + 0.8 * i;
                const Matrix2c a = reflection_matrix(scheme, cav, delta, toggles);
                const Matrix2c b = reflection_from_coherences(scheme, cav, delta, toggles);
                worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
            }
            CHECK(worst < 1e-12);
        }
    }
}

TEST_CASE("uncoupled nucleus reflects the background only")
{
    const auto scheme = preset_scheme(GeometryPreset::half_faraday);
    CavityParams cav;
    cav.couple_sigma = false;
    cav.couple_pi = false;
    cav.r_c << cd(0.3, 0.1), 0.0, 0.0, cd(-0.2, 0.4);
    for (double delta : {-40.0, 0.0, 12.5}) {
        CHECK((reflection_matrix(scheme, cav, delta) - cav.r_c).norm() == doctest::Approx(0.0));
    }
}

TEST_CASE("single resonant line reaches the superradiant reflection maximum")
{
    const auto full = preset_scheme(GeometryPreset::half_faraday);
    for (auto gamma_s : {5.0, 27.0, 100.0}) {
        for (std::size_t k = 0; k < full.size(); ++k) {
            if (full.transitions[k].is_dark()) continue;
            const auto scheme = only_transitions(full, {k});
            CavityParams cav;
            cav.gamma_s = gamma_s;
            const double g = scheme.transitions[0].weighted_coupling().squaredNorm();
            const double resonance = scheme.transitions[0].detuning - cav.delta_ls * g;
            const double expected = gamma_s * g / (1.0 + gamma_s * g);
            CHECK(max_singular_value(reflection_matrix(scheme, cav, resonance)) ==
                  doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("channel intensity examples")
{
    DetectionConfig det;
    det.extinction = 1e-3;
    Matrix2c r;
    r << cd(0.4, 0.2), cd(0.1, -0.3), cd(-0.05, 0.2), cd(0.7, 0.0);
    const CVec2 sigma(1.0, 0.0);
    const auto ci = channel_intensity(r, det, sigma);
    CHECK(ci.crossed == doctest::Approx(std::norm(r(1, 0)) + 1e-3 * std::norm(r(0, 0))));
    CHECK(ci.direct == doctest::Approx(std::norm(r(0, 0)) + std::norm(r(1, 0))));

    SUBCASE("diagonal reflection with perfect extinction is dark in the polarimeter")
    {
        det.extinction = 0.0;
        Matrix2c diag = Matrix2c::Zero();
        diag(0, 0) = cd(0.5, 0.5);
        diag(1, 1) = cd(-0.3, 0.1);
        CHECK(channel_intensity(diag, det, sigma).crossed == 0.0);
    }
    SUBCASE("field along pi leaves only the extinction leak")
    {
        auto geo = GeometryConfig::from_preset(GeometryPreset::custom);
        geo.b_hat = frame::pi();
        geo.preset = GeometryPreset::custom;
        const auto scheme = build_level_scheme(NuclearSpecies::fe57(), geo);
        CavityParams cav;
        for (double delta : {-32.0, -5.0, 0.0, 20.0}) {
            const Matrix2c rr = reflection_matrix(scheme, cav, delta);
            const auto c = channel_intensity(rr, det, sigma);
            CHECK(c.crossed == doctest::Approx(det.extinction * std::norm(rr(0, 0))).epsilon(1e-9));
        }
    }
    SUBCASE("Faraday rotation leaks into the crossed channel")
    {
        const auto scheme = preset_scheme(GeometryPreset::faraday);
        CavityParams cav;
        CHECK(channel_intensity(reflection_matrix(scheme, cav, 9.0), det, sigma).crossed > 1e-3);
    }
}

TEST_CASE("grid validation")
{
    CHECK_NOTHROW(Grid{}.validate());
    CHECK(Grid{}.values().size() == 4000);
    CHECK_THROWS_AS((Grid{1.0, 0.0, 10}.validate()), ValidationError);
    CHECK_THROWS_AS((Grid{0.0, 1.0, 0}.validate()), ValidationError);
    CHECK_THROWS_AS((Grid{0.0, 0.0, 10}.validate()), ValidationError);

    const auto scheme = preset_scheme(GeometryPreset::half_faraday);
    CHECK_THROWS_AS(spectrum_sweep(scheme, CavityParams{}, DetectionConfig{}, std::vector<double>{}),
                    ValidationError);
    CHECK_THROWS_AS(spectrum_sweep(scheme, CavityParams{}, DetectionConfig{}, std::vector<double>{0.0, 1.0, 0.5}),
                    ValidationError);
}

TEST_CASE("degenerate levels give a single superradiant line of width 1 + gamma_s * g")
{
    auto geo = GeometryConfig::from_preset(GeometryPreset::half_faraday);
    geo.b_tesla = 0.0;
    const auto scheme = build_level_scheme(NuclearSpecies::fe57(), geo);
    CavityParams cav;
    cav.couple_pi = false;
    const auto c = coupling_matrix(scheme, cav);
    const double g = c.col(0).squaredNorm();
    const double expected_width = 1.0 + cav.gamma_s * g;

    const auto x = Grid{-60.0, 60.0, 240001}.values();
    std::vector<double> y;
    for (double d : x) y.push_back(direct_intensity(scheme, cav, d));
    const auto peak = std::max_element(y.begin(), y.end());
    CHECK(x[peak - y.begin()] == doctest::Approx(-cav.delta_ls * g).epsilon(1e-3));
    const double half = 0.5 * *peak;
    const auto left = std::find_if(y.begin(), peak, [&](double v) { return v >= half; });
    const auto right = std::find_if(peak, y.end(), [&](double v) { return v < half; });
    const double fwhm = x[right - y.begin()] - x[left - y.begin()];
    CHECK(fwhm == doctest::Approx(expected_width).epsilon(1e-3));
}

TEST_CASE("Voigt sigma spectrum is mirror symmetric without a collective Lamb shift")
{
    const auto scheme = preset_scheme(GeometryPreset::voigt45);
    CavityParams cav;
    cav.delta_ls = 0.0;
    double worst = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double d = 0.2 * i;
        worst = std::max(worst, std::abs(direct_intensity(scheme, cav, d) - direct_intensity(scheme, cav, -d)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("reversing the field transposes the reflection matrix")
{
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto geo = GeometryConfig::from_preset(GeometryPreset::custom);
        geo.b_hat = random_unit(rng);
        auto flipped = geo;
        flipped.b_hat = -geo.b_hat;
        const auto a = build_level_scheme(NuclearSpecies::fe57(), geo);
        const auto b = build_level_scheme(NuclearSpecies::fe57(), flipped);
        CavityParams cav;
        cav.r_c << cd(0.1, 0.2), cd(0.05, -0.1), cd(0.05, -0.1), cd(-0.3, 0.1);
        double worst = 0.0;
        for (int i = 0; i <= 160; ++i) {
            const double d = -80.0 + i;
            worst = std::max(worst, (reflection_matrix(b, cav, d) - reflection_matrix(a, cav, d).transpose()).cwiseAbs().maxCoeff());
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("direct spectra are symmetric under (delta, delta_ls) -> (-delta, -delta_ls)")
{
    std::mt19937 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        auto geo = GeometryConfig::from_preset(GeometryPreset::custom);
        geo.b_hat = random_unit(rng);
        const auto scheme = build_level_scheme(NuclearSpecies::fe57(), geo);
        CavityParams cav;
        CavityParams mirrored = cav;
        mirrored.delta_ls = -cav.delta_ls;
        double worst = 0.0;
        for (int i = 0; i <= 160; ++i) {
            const double d = -80.0 + i;
            worst = std::max(worst, std::abs(direct_intensity(scheme, cav, d) - direct_intensity(scheme, mirrored, -d)));
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("preset direct spectra are invariant under (delta, b) -> (-delta, -b) without Lamb shift")
{
    for (auto preset : {GeometryPreset::faraday, GeometryPreset::half_faraday, GeometryPreset::voigt45}) {
        auto geo = GeometryConfig::from_preset(preset);
        auto flipped = GeometryConfig::from_preset(GeometryPreset::custom);
        flipped.b_hat = -geo.b_hat;
        const auto a = build_level_scheme(NuclearSpecies::fe57(), geo);
        const auto b = build_level_scheme(NuclearSpecies::fe57(), flipped);
        CavityParams cav;
        cav.delta_ls = 0.0;
        double worst = 0.0;
        for (int i = 0; i <= 1600; ++i) {
            const double d = -80.0 + 0.1 * i;
            worst = std::max(worst, std::abs(direct_intensity(a, cav, d) - direct_intensity(b, cav, -d)));
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("far-detuned channels approach the background value within 1e-6")
{
    // The resonant amplitude falls off only as A tr(G) / delta, about 2e-2 at
    // 500 gamma for the default coupling, so this bound is not reached there.
    for (auto preset : {GeometryPreset::faraday, GeometryPreset::half_faraday, GeometryPreset::voigt45}) {
        const auto scheme = preset_scheme(preset);
        CavityParams cav;
        cav.r_c << cd(0.2, 0.1), 0.0, 0.0, cd(0.2, 0.1);
        DetectionConfig det;
        const CVec2 e = scheme.geometry.in_polarization;
        const auto background = channel_intensity(cav.r_c, det, e);
        for (double d : {-500.0, 500.0}) {
            const auto ci = channel_intensity(reflection_matrix(scheme, cav, d), det, e);
            CHECK(std::abs(ci.crossed - background.crossed) <= 1e-6);
            CHECK(std::abs(ci.direct - background.direct) <= 1e-6);
        }
    }
}

TEST_CASE("far-detuned resonant reflection decays as i A C^H C / delta")
{
    const auto scheme = preset_scheme(GeometryPreset::half_faraday);
    CavityParams cav;
    const Matrix2c ctc = coupling_matrix(scheme, cav).adjoint() * coupling_matrix(scheme, cav);
    for (double d : {500.0, 5000.0, -5000.0}) {
        const Matrix2c asymptote = I * cav.amplitude() * ctc / d;
        const Matrix2c r = reflection_matrix(scheme, cav, d);
        CHECK((r - asymptote).norm() <= asymptote.norm() * 100.0 / std::abs(d));
    }
}

TEST_CASE("reflection is passive with SGC on")
{
    std::mt19937 rng(5);
    std::vector<GeometryConfig> geometries;
    for (auto p : {GeometryPreset::faraday, GeometryPreset::half_faraday, GeometryPreset::voigt45}) {
        geometries.push_back(GeometryConfig::from_preset(p));
    }
    for (int i = 0; i < 30; ++i) {
        auto geo = GeometryConfig::from_preset(GeometryPreset::custom);
        geo.b_hat = random_unit(rng);
        geo.preset = GeometryPreset::custom;
        geometries.push_back(geo);
    }
    for (const auto& geo : geometries) {
        const auto scheme = build_level_scheme(NuclearSpecies::fe57(), geo);
        for (double gamma_s : {5.0, 27.0, 100.0, 1000.0}) {
            CavityParams cav;
            cav.gamma_s = gamma_s;
            double smax = 0.0;
            for (int i = 0; i <= 800; ++i) smax = std::max(smax, max_singular_value(reflection_matrix(scheme, cav, -80.0 + 0.2 * i)));
            CHECK(smax <= 1.0 + 1e-9);
        }
    }
}

TEST_CASE("dropping the SGC terms breaks passivity at strong coupling")
{
    // Characterizes the reduced model: without cross terms the effective
    // radiative damping no longer matches the collective emission channel.
    const auto scheme = preset_scheme(GeometryPreset::half_faraday);
    CavityParams cav;
    cav.gamma_s = 81.0;
    double smax = 0.0;
    for (int i = 0; i <= 1600; ++i) {
        smax = std::max(smax, max_singular_value(reflection_matrix(scheme, cav, -80.0 + 0.1 * i, Toggles::sgc_off())));
    }
    CHECK(smax > 1.0);
}

TEST_CASE("Voigt line centre is suppressed by SGC")
{
    const auto scheme = preset_scheme(GeometryPreset::voigt45);
    CavityParams cav;
    const auto det = direct_detection();
    const CVec2 e = scheme.geometry.in_polarization;
    const double on = channel_intensity(reflection_matrix(scheme, cav, 0.0, Toggles::all_on()), det, e).direct;
    const double off = channel_intensity(reflection_matrix(scheme, cav, 0.0, Toggles::sgc_off()), det, e).direct;
    CHECK(off / on >= 10.0);
}

TEST_CASE("local minima and peaks")
{
    const std::vector<double> monotone{0.0, 1.0, 2.0, 3.0, 4.0};
    CHECK(local_minima(monotone).empty());
    CHECK(find_dips(Grid{0.0, 4.0, 5}.values(), monotone, 0.0).empty());

    const std::vector<double> plateau{3.0, 1.0, 1.0, 1.0, 2.0, 0.5, 4.0};
    const auto minima = local_minima(plateau);
    REQUIRE(minima.size() == 2);
    CHECK(minima[0].second == doctest::Approx(1.0));  // bounded by the 2.0 shoulder
    CHECK(minima[1].second == doctest::Approx(2.5));  // bounded by the 3.0 edge
}

TEST_CASE("dips between synthetic Lorentzian peaks")
{
    auto lorentz = [](double x, double x0, double w) { return 0.25 * w * w / ((x - x0) * (x - x0) + 0.25 * w * w); };
    const auto x = Grid{-40.0, 40.0, 8001}.values();
    std::vector<double> y;
    for (double v : x) {
        y.push_back(lorentz(v, -20.0, 1.0) + lorentz(v, -5.0, 1.0) + lorentz(v, 5.0, 1.0) + 0.9 * lorentz(v, 7.0, 1.0) +
                    0.02 * lorentz(v, 25.0, 1.0));
    }
    auto argmin_between = [&](double a, double b) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] > a && x[i] < b && (best == 0 || y[i] < y[best])) best = i;
        }
        return best;
    };
    const auto dips = find_dips(x, y, 0.0);
    // Deep dips between −20/−5 and −5/5, a shallow one between 5/7 that stays far above the baseline.
    REQUIRE(dips.size() == 3);
    const std::size_t m0 = argmin_between(-20.0, -5.0);
    const std::size_t m1 = argmin_between(-5.0, 5.0);
    CHECK(dips[0].position == x[m0]);
    CHECK(dips[0].reaches_baseline);
    CHECK(dips[1].position == x[m1]);
    CHECK(dips[1].reaches_baseline);
    auto max_between = [&](double a, double b) {
        double best = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] > a && x[i] < b) best = std::max(best, y[i]);
        }
        return best;
    };
    const double lower_peak = std::min(max_between(-6.0, -4.0), max_between(4.0, 6.0));
    CHECK(dips[1].relative_depth == doctest::Approx(y[m1] / lower_peak).epsilon(1e-12));
    CHECK_FALSE(dips[2].reaches_baseline);
    for (const auto& d : dips) CHECK(d.prominence >= 0.05 * *std::max_element(y.begin(), y.end()));

    const auto peaks = find_peaks(x, y);
    CHECK(peaks.size() == 4);  // the 0.02 bump is below the prominence threshold
}

TEST_CASE("single-line time response decays at the superradiant rate")
{
    const auto full = preset_scheme(GeometryPreset::half_faraday);
    const auto scheme = only_transitions(full, {first_bright(full)});
    const auto omega = fft_grid(512.0, 65536);
    const double g = scheme.transitions[0].weighted_coupling().squaredNorm();
    for (double gamma_s : {5.0, 27.0, 100.0}) {
        CavityParams cav;
        cav.gamma_s = gamma_s;
        const auto spec = spectrum_sweep(scheme, cav, direct_detection(), omega);
        const auto tr = time_response(spec, direct_detection());

        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int count = 0;
        for (std::size_t i = 0; i < tr.t.size() && tr.t[i] <= 0.1; ++i) {
            if (tr.t[i] < 0.01) continue;
            const double ly = std::log(tr.intensity[i]);
            sx += tr.t[i];
            sy += ly;
            sxx += tr.t[i] * tr.t[i];
            sxy += tr.t[i] * ly;
            ++count;
        }
        const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
        CHECK(-slope == doctest::Approx(1.0 + gamma_s * g).epsilon(0.01));

        // Closed form |E(t)|² = A² g |c̃·e|² e^{−Γ t}.
        const cd source = scheme.transitions[0].weighted_coupling().dot(scheme.geometry.in_polarization.conjugate());
        const double a0 = std::pow(cav.amplitude(), 2) * g * std::norm(source);
        for (double t : {0.02, 0.1, 0.5}) {
            const std::size_t i = static_cast<std::size_t>(std::lround(t / tr.t[1]));
            const double expected = a0 * std::exp(-(1.0 + gamma_s * g) * tr.t[i]);
            CHECK(tr.intensity[i] == doctest::Approx(expected).epsilon(1e-6));
        }
    }
}

TEST_CASE("two independent lines beat at their splitting in the sigma projection")
{
    const auto full = preset_scheme(GeometryPreset::faraday);
    std::vector<std::size_t> inner;
    for (std::size_t k = 0; k < full.size(); ++k) {
        const auto& t = full.transitions[k];
        if (!t.is_dark() && std::abs(t.detuning) < 20.0) inner.push_back(k);
    }
    REQUIRE(inner.size() == 2);
    const auto scheme = only_transitions(full, inner);
    CHECK(std::abs(g_matrix(scheme, CavityParams{})(0, 1)) < 1e-14);
    const double split = std::abs(scheme.transitions[0].detuning - scheme.transitions[1].detuning);

    const auto omega = fft_grid(512.0, 65536);
    const auto spec = spectrum_sweep(scheme, CavityParams{}, direct_detection(), omega);
    const auto tr = time_response(spec, direct_detection());
    std::vector<double> zeros;
    for (std::size_t i = 1; tr.t[i] < 1.5; ++i) {
        // The pair radiates into orthogonal circular polarizations, so the beat
        // shows in a linear projection and not in the total intensity.
        const double a = tr.sigma[i - 1], b = tr.sigma[i], c = tr.sigma[i + 1];
        if (b < a && b <= c) zeros.push_back(tr.t[i] + tr.t[1] * 0.5 * (a - c) / (a - 2.0 * b + c));
    }
    REQUIRE(zeros.size() >= 3);
    const double period = (zeros.back() - zeros.front()) / static_cast<double>(zeros.size() - 1);
    CHECK(period == doctest::Approx(2.0 * std::numbers::pi / split).epsilon(0.01));
}

TEST_CASE("time response obeys Parseval without tail correction")
{
    const auto scheme = preset_scheme(GeometryPreset::half_faraday);
    const auto omega = fft_grid(512.0, 65536);
    const auto spec = spectrum_sweep(scheme, CavityParams{}, direct_detection(), omega);
    const auto tr = time_response(spec, direct_detection(), TimeResponseOptions{false});
    double time_energy = 0.0;
    for (double v : tr.intensity) time_energy += v * tr.t[1];
    double freq_energy = 0.0;
    const double dw = omega[1] - omega[0];
    for (std::size_t k = 0; k < omega.size(); ++k) {
        freq_energy += ((spec.matrices[k] - spec.r_c) * spec.in_polarization).squaredNorm() * dw / (2.0 * std::numbers::pi);
    }
    CHECK(time_energy == doctest::Approx(freq_energy).epsilon(1e-6));
    CHECK(tr.edge_residual > 0.0);
}

TEST_CASE("causal transform rejects non-uniform grids")
{
    const std::vector<double> w{0.0, 1.0, 2.5, 3.0};
    const std::vector<cd> f(4, cd{1.0, 0.0});
    CHECK_THROWS_AS(causal_transform(w, f, false), ValidationError);
    CHECK_THROWS_AS(causal_transform(std::vector<double>{0.0, 1.0}, f, false), ValidationError);
}

TEST_CASE("analyzer transmission")
{
    const AnalyzerLine line{1.0, 2.0};
    CHECK(std::norm(analyzer_transmission(line, 3.0, 3.0)) == doctest::Approx(std::exp(-2.0)));
    CHECK(std::abs(analyzer_transmission(line, 1e6, 0.0)) == doctest::Approx(1.0));
    CHECK(std::norm(analyzer_transmission(line, 3.5, 3.0)) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("measurement requires an analyzer")
{
    const auto scheme = preset_scheme(GeometryPreset::half_faraday);
    const auto omega = fft_grid(64.0, 1024);
    const auto spec = spectrum_sweep(scheme, CavityParams{}, DetectionConfig{}, omega);
    const std::vector<double> positions{0.0};
    CHECK_THROWS_AS(simulate_measurement(spec, DetectionConfig{}, positions), ValidationError);
}

TEST_CASE("analyzer scan equals the Lorentzian-weighted spectrum")
{
    // Ungated and causal: counts = ∫ |E(ω) T(ω)|² dω/2π, so the absorption is the
    // spectrum weighted by 1 − |T|² = 1 − exp(−d L(ω − δ)).
    const auto scheme = preset_scheme(GeometryPreset::half_faraday);
    const auto omega = fft_grid(512.0, 65536);
    DetectionConfig det = direct_detection();
    det.analyzer = AnalyzerLine{2.0, 0.5};
    const auto spec = spectrum_sweep(scheme, CavityParams{}, det, omega);
    const std::vector<double> positions{-40.0, -31.0, -20.0, -9.0, 0.0, 9.0, 20.0, 31.0, 40.0};
    const auto m = simulate_measurement(spec, det, positions);

    const double dw = omega[1] - omega[0];
    double peak = 0.0;
    std::vector<double> oracle;
    for (double delta : positions) {
        double sum = 0.0;
        for (std::size_t k = 0; k < omega.size(); ++k) {
            const double x = omega[k] - delta;
            const double lorentz = 1.0 / (x * x + 1.0);
            sum += ((spec.matrices[k] - spec.r_c) * spec.in_polarization).squaredNorm() *
                   (1.0 - std::exp(-det.analyzer->depth * lorentz));
        }
        oracle.push_back(sum * dw / (2.0 * std::numbers::pi));
        peak = std::max(peak, oracle.back());
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        CHECK(std::abs(m.absorption[i] - oracle[i]) <= 0.02 * peak);
    }
}

TEST_CASE("narrow weak analyzer reproduces the ideal direct spectrum")
{
    const auto scheme = preset_scheme(GeometryPreset::half_faraday);
    const auto omega = fft_grid(512.0, 65536);
    DetectionConfig det = direct_detection();
    det.analyzer = AnalyzerLine{0.01, 1e-3};
    const auto spec = spectrum_sweep(scheme, CavityParams{}, det, omega);
    std::vector<double> positions;
    std::vector<double> ideal;
    for (std::size_t k = 0; k < omega.size(); k += 128) {  // analyzer on grid points, 2 gamma apart
        if (std::abs(omega[k]) > 60.0) continue;
        positions.push_back(omega[k]);
        ideal.push_back(spec.channel(channel_direct)[k]);
    }
    const auto m = simulate_measurement(spec, det, positions);
    const double ideal_max = *std::max_element(ideal.begin(), ideal.end());
    const double meas_max = *std::max_element(m.absorption.begin(), m.absorption.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        worst = std::max(worst, std::abs(m.absorption[i] / meas_max - ideal[i] / ideal_max));
    }
    CHECK(worst <= 0.01);
}

TEST_CASE("time gate on a single line matches the closed-form delayed counts")
{
    const auto full = preset_scheme(GeometryPreset::half_faraday);
    const auto scheme = only_transitions(full, {first_bright(full)});
    CavityParams cav;
    const auto omega = fft_grid(512.0, 65536);
    const auto& tr0 = scheme.transitions[0];
    const CVec2 ct = tr0.weighted_coupling();
    const double g = ct.squaredNorm();
    const cd z = tr0.detuning - cav.delta_ls * g - 0.5 * I * (1.0 + cav.gamma_s * g);
    const cd source = ct.dot(scheme.geometry.in_polarization.conjugate());
    // E_p(t) = A conj(c̃_p) (c̃·e) e^{−i z t}; only |E|² summed over p enters the direct channel.
    const double field_norm = cav.amplitude() * std::sqrt(g) * std::abs(source);

    const AnalyzerLine line{1.0, 1e-3};
    const double kappa = 0.5 * line.depth * 0.5 * line.width;
    for (double t1 : {0.0, 0.05, 0.2}) {
        DetectionConfig det = direct_detection();
        det.analyzer = line;
        det.time_gate = TimeGate{t1};
        const auto spec = spectrum_sweep(scheme, cav, det, omega);
        const std::vector<double> positions{z.real() - 4.0, z.real(), z.real() + 1.5};
        const auto m = simulate_measurement(spec, det, positions);

        const double reference = pole_sum_energy({field_norm}, {z}, t1);
        CHECK(m.reference == doctest::Approx(reference).epsilon(1e-6));
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const cd za = positions[i] - 0.5 * I * line.width;
            const cd mix = I * kappa / (z - za);
            const double counts = pole_sum_energy({field_norm * (1.0 - mix), field_norm * mix}, {z, za}, t1);
            CHECK(m.absorption[i] == doctest::Approx(reference - counts).epsilon(0.01));
        }
    }
}
