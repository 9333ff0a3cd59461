// layer_oracle.cpp — Parratt recursion, mode search and effective-line fitting

#include "sgc/layer_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <unsupported/Eigen/NonLinearOptimization>

#include "sgc/constants.hpp"
#include "sgc/errors.hpp"

namespace sgc::oracle {

namespace {

constexpr cd I{0.0, 1.0};

cd vertical_wavenumber(double k, double sin2, const Layer& layer, double detuning)
{
    cd arg = sin2 - 2.0 * layer.delta + 2.0 * I * layer.beta;
    if (layer.nuclear) arg += nuclear_susceptibility(detuning, *layer.nuclear);
    // Principal root: Im(arg) >= 0 keeps the branch in the upper half plane.
    return k * std::sqrt(arg);
}

struct LineResidual {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    std::span<const double> detunings;
    std::span<const cd> data;

    int inputs() const { return 6; }
    int values() const { return static_cast<int>(2 * detunings.size()); }

    static EffectiveLine unpack(const Eigen::VectorXd& x)
    {
        return {x(0), x(1), {x(2), x(3)}, {x(4), x(5)}};
    }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const
    {
        const EffectiveLine line = unpack(x);
        const auto n = detunings.size();
        for (std::size_t k = 0; k < n; ++k) {
            const cd diff = line(detunings[k]) - data[k];
            f(static_cast<Eigen::Index>(k)) = diff.real();
            f(static_cast<Eigen::Index>(k + n)) = diff.imag();
        }
        return 0;
    }

    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const
    {
        const EffectiveLine line = unpack(x);
        const auto n = detunings.size();
        for (std::size_t k = 0; k < n; ++k) {
            const cd w = detunings[k] + line.delta_ls + 0.5 * I * (1.0 + line.gamma_s);
            const cd d_gs = line.amplitude / (2.0 * w * w);
            const cd d_ls = -I * line.amplitude / (w * w);
            const cd d_ar = I / w;
            const cd d_ai = -1.0 / w;
            const cd cols[6] = {d_gs, d_ls, {1.0, 0.0}, I, d_ar, d_ai};
            for (int c = 0; c < 6; ++c) {
                jac(static_cast<Eigen::Index>(k), c) = cols[c].real();
                jac(static_cast<Eigen::Index>(k + n), c) = cols[c].imag();
            }
        }
        return 0;
    }
};

// For fixed (γ_S, Δ_LS) the model is linear in (r_c, a); solve that part exactly.
std::pair<EffectiveLine, double> project_linear(double gamma_s, double delta_ls,
                                                std::span<const double> detunings, std::span<const cd> r)
{
    const auto n = static_cast<Eigen::Index>(detunings.size());
    Eigen::MatrixX2cd a(n, 2);
    Eigen::VectorXcd b(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double d = detunings[static_cast<std::size_t>(k)];
        a(k, 0) = 1.0;
        a(k, 1) = I / (d + delta_ls + 0.5 * I * (1.0 + gamma_s));
        b(k) = r[static_cast<std::size_t>(k)];
    }
    const Eigen::Vector2cd coef = a.colPivHouseholderQr().solve(b);
    EffectiveLine line{gamma_s, delta_ls, coef(0), coef(1)};
    return {line, (a * coef - b).squaredNorm()};
}

} // namespace

void LayerStack::validate() const
{
    if (layers.empty()) throw ValidationError("layer stack needs at least a substrate");
    if (!(wavelength_nm > 0.0)) throw ValidationError("layer stack wavelength must be > 0");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        const bool substrate = i + 1 == layers.size();
        if (!substrate && !(l.thickness_nm > 0.0 && std::isfinite(l.thickness_nm))) {
            throw ValidationError(fmt::format("layer {} ('{}') needs a finite positive thickness", i, l.name));
        }
        if (!substrate && std::isinf(l.thickness_nm)) {
            throw ValidationError("only the bottom layer may be semi-infinite");
        }
        if (l.beta < 0.0) throw ValidationError(fmt::format("layer {} ('{}') has beta < 0", i, l.name));
        if (l.nuclear && !(l.nuclear->width > 0.0)) {
            throw ValidationError(fmt::format("layer {} ('{}') nuclear width must be > 0", i, l.name));
        }
    }
}

cd nuclear_susceptibility(double detuning, const NuclearLine& line)
{
    return -line.strength / (detuning + 0.5 * I * line.width);
}

cd parratt_reflectivity(const LayerStack& stack, double angle_mrad, double detuning)
{
    stack.validate();
    if (!(angle_mrad > 0.0)) throw ValidationError("grazing angle must be > 0");

    const double k = 2.0 * std::numbers::pi / stack.wavelength_nm;
    const double s = std::sin(angle_mrad * 1e-3);
    const double sin2 = s * s;

    const Layer vacuum{"vacuum", 0.0, 0.0, 0.0, std::nullopt};
    std::vector<cd> kz;
    kz.reserve(stack.layers.size() + 1);
    kz.push_back(vertical_wavenumber(k, sin2, vacuum, detuning));
    for (const Layer& l : stack.layers) kz.push_back(vertical_wavenumber(k, sin2, l, detuning));

    // X_j: reflection amplitude at the top of medium j+1 seen from medium j.
    cd x{0.0, 0.0};
    for (std::size_t j = kz.size() - 1; j-- > 0;) {
        const cd fresnel = (kz[j] - kz[j + 1]) / (kz[j] + kz[j + 1]);
        const bool below_is_substrate = j + 1 == kz.size() - 1;
        const cd phase = below_is_substrate
                             ? cd{1.0, 0.0}
                             : std::exp(2.0 * I * kz[j + 1] * stack.layers[j].thickness_nm);
        x = (fresnel + x * phase) / (1.0 + fresnel * x * phase);
    }
    return x;
}

Material palladium() { return {1.02e-5, 5.3e-7}; }
Material carbon() { return {2.0e-6, 5.5e-10}; }
Material iron() { return {7.33e-6, 3.2e-7}; }
Material silicon() { return {2.33e-6, 1.75e-8}; }

LayerStack reference_cavity(double fe57_strength)
{
    const double fe_block = 0.6 + 2.5 + 0.6;
    const double guide = 0.5 * (40.0 - fe_block);
    auto layer = [](std::string name, double t, Material m) { return Layer{std::move(name), t, m.delta, m.beta, std::nullopt}; };

    LayerStack s;
    s.wavelength_nm = constants::hc_kev_nm / constants::fe57_transition_kev;
    s.layers = {
        layer("Pd", 5.0, palladium()),
        layer("C", guide, carbon()),
        layer("56Fe", 0.6, iron()),
        layer("57Fe", 2.5, iron()),
        layer("56Fe", 0.6, iron()),
        layer("C", guide, carbon()),
        layer("Pd", 20.0, palladium()),
        layer("Si", std::numeric_limits<double>::infinity(), silicon()),
    };
    s.layers[3].nuclear = NuclearLine{fe57_strength, 1.0};
    return s;
}

LayerStack without_resonances(LayerStack stack)
{
    for (Layer& l : stack.layers) l.nuclear.reset();
    return stack;
}

AngleScanMinimum find_mode_angle(const LayerStack& stack, double lo_mrad, double hi_mrad, int points)
{
    if (!(hi_mrad > lo_mrad) || lo_mrad <= 0.0 || points < 3) throw ValidationError("invalid angle scan range");
    const LayerStack electronic = without_resonances(stack);
    auto refl = [&](double a) { return std::norm(parratt_reflectivity(electronic, a, 0.0)); };

    std::vector<double> angles(static_cast<std::size_t>(points));
    std::vector<double> r(angles.size());
    for (int i = 0; i < points; ++i) {
        angles[static_cast<std::size_t>(i)] = lo_mrad + (hi_mrad - lo_mrad) * i / (points - 1);
        r[static_cast<std::size_t>(i)] = refl(angles[static_cast<std::size_t>(i)]);
    }
    // Lowest-angle minimum that dips by at least 10% of the local reflectivity.
    std::size_t best = 0;
    for (std::size_t i = 1; i + 1 < r.size(); ++i) {
        if (r[i] < r[i - 1] && r[i] <= r[i + 1]) {
            const double shoulder = std::min(*std::max_element(r.begin(), r.begin() + static_cast<long>(i)),
                                             *std::max_element(r.begin() + static_cast<long>(i), r.end()));
            if (shoulder - r[i] > 0.1 * shoulder) {
                best = i;
                break;
            }
        }
    }
    if (best == 0) throw NumericalError("no guided-mode minimum found in the angle scan");

    // Golden-section refinement on the bracketing interval.
    double a = angles[best - 1];
    double b = angles[best + 1];
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = refl(c);
    double fd = refl(d);
    for (int it = 0; it < 100 && b - a > 1e-12; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = refl(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = refl(d);
        }
    }
    const double angle = 0.5 * (a + b);
    return {angle, refl(angle)};
}

cd EffectiveLine::operator()(double detuning) const
{
    return r_c + I * amplitude / (detuning + delta_ls + 0.5 * I * (1.0 + gamma_s));
}

CavityFit fit_cavity_params(std::span<const double> detunings, std::span<const cd> r)
{
    if (detunings.size() != r.size() || detunings.size() < 4) {
        throw ValidationError("fit needs matching detuning and reflectivity arrays with >= 4 points");
    }

    // Coarse start: grid over the two nonlinear parameters with the linear ones projected out.
    const double span = detunings.back() - detunings.front();
    EffectiveLine start;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 60; ++i) {
        const double gs = std::pow(10.0, -1.0 + 4.0 * i / 60.0);
        for (int j = 0; j <= 40; ++j) {
            const double ls = -0.5 * span + span * j / 40.0;
            const auto [line, cost] = project_linear(gs, ls, detunings, r);
            if (cost < best) {
                best = cost;
                start = line;
            }
        }
    }

    LineResidual functor{detunings, r};
    Eigen::VectorXd x(6);
    x << start.gamma_s, start.delta_ls, start.r_c.real(), start.r_c.imag(), start.amplitude.real(),
        start.amplitude.imag();
    Eigen::LevenbergMarquardt<LineResidual> lm(functor);
    lm.parameters.xtol = 1e-15;
    lm.parameters.ftol = 1e-15;
    lm.parameters.gtol = 0.0;
    lm.parameters.maxfev = 20000;
    const auto status = lm.minimize(x);
    if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters
        || status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation) {
        throw NumericalError(fmt::format("cavity fit did not converge (status {}, gamma_s = {}, delta_ls = {})",
                                         static_cast<int>(status), x(0), x(1)));
    }

    CavityFit fit;
    fit.params = LineResidual::unpack(x);
    fit.iterations = static_cast<int>(lm.iter);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        num += std::norm(fit.params(detunings[k]) - r[k]);
        den += std::norm(r[k] - fit.params.r_c);
    }
    fit.relative_residual = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    return fit;
}

} // namespace sgc::oracle
