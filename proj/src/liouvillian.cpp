// liouvillian.cpp — Superoperator assembly, perturbative steady state and time evolution

#include "sgc/liouvillian.hpp"

#include <cmath>
#include <complex>
#include <string>

#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>
#include <unsupported/Eigen/KroneckerProduct>

#include "sgc/errors.hpp"

namespace sgc {

namespace {

using cd = std::complex<double>;
constexpr cd I{0.0, 1.0};

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b)
{
    return Eigen::kroneckerProduct(a, b).eval();
}

// -i[H, .] for column-stacked ρ.
MatrixXcd commutator_superop(const MatrixXcd& h)
{
    const auto n = h.rows();
    const MatrixXcd id = MatrixXcd::Identity(n, n);
    return -I * (kron(id, h) - kron(h.transpose(), id));
}

MatrixXcd off_diagonal(const MatrixXcd& g)
{
    MatrixXcd out = g;
    out.diagonal().setZero();
    return out;
}

MatrixXcd diagonal_part(const MatrixXcd& g)
{
    return MatrixXcd(g.diagonal().asDiagonal());
}

// σ_t = |G><e_t| in the (1 + n)-level effective basis.
std::vector<MatrixXcd> lowering_operators(int n)
{
    std::vector<MatrixXcd> ops;
    ops.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        MatrixXcd s = MatrixXcd::Zero(n + 1, n + 1);
        s(0, t + 1) = 1.0;
        ops.push_back(std::move(s));
    }
    return ops;
}

} // namespace

void CavityParams::validate() const
{
    if (!(gamma_s >= 0.0) || !std::isfinite(gamma_s)) throw ValidationError("cavity.gamma_s must be >= 0");
    if (!std::isfinite(delta_ls)) throw ValidationError("cavity.delta_ls must be finite");
    if (amplitude_scale && !(*amplitude_scale > 0.0)) {
        throw ValidationError("cavity.amplitude_scale must be > 0");
    }
    if (!couple_sigma && !couple_pi) {
        throw ValidationError("cavity.coupled_polarizations must not be empty");
    }
    if (!r_c.allFinite()) throw ValidationError("cavity.r_c must be finite");
}

bool DriveConfig::validate() const
{
    if (!(rabi > 0.0) || !std::isfinite(rabi)) throw ValidationError("drive.rabi must be > 0");
    if (std::abs(polarization.norm() - 1.0) > 1e-12) {
        throw ValidationError("drive.polarization must have unit norm");
    }
    return rabi <= 0.01;
}

Eigen::MatrixX2cd coupling_matrix(const LevelScheme& scheme, const CavityParams& cavity)
{
    const auto n = static_cast<Eigen::Index>(scheme.size());
    Eigen::MatrixX2cd c(n, 2);
    for (Eigen::Index t = 0; t < n; ++t) {
        c.row(t) = scheme.transitions[static_cast<std::size_t>(t)].weighted_coupling().transpose();
    }
    if (!cavity.couple_sigma) c.col(0).setZero();
    if (!cavity.couple_pi) c.col(1).setZero();
    return c;
}

MatrixXcd g_matrix(const LevelScheme& scheme, const CavityParams& cavity)
{
    const Eigen::MatrixX2cd c = coupling_matrix(scheme, cavity);
    return c * c.adjoint();
}

MatrixXcd response_kernel(const LevelScheme& scheme, const CavityParams& cavity,
                          const Toggles& toggles, double delta)
{
    const MatrixXcd g = g_matrix(scheme, cavity);
    const auto n = g.rows();

    MatrixXcd g_shift = MatrixXcd::Zero(n, n);
    MatrixXcd g_damp = MatrixXcd::Zero(n, n);
    if (toggles.sr) {
        g_shift += diagonal_part(g);
        g_damp += diagonal_part(g);
    }
    if (toggles.sgc_hamiltonian) g_shift += off_diagonal(g);
    if (toggles.sgc_dissipative) g_damp += off_diagonal(g);

    MatrixXcd m = cavity.delta_ls * g_shift + I * (0.5 * cavity.gamma_s) * g_damp;
    for (Eigen::Index t = 0; t < n; ++t) {
        m(t, t) += delta - scheme.transitions[static_cast<std::size_t>(t)].detuning + 0.5 * I;
    }
    return m;
}

VectorXcd linear_response(const LevelScheme& scheme, const CavityParams& cavity,
                          const DriveConfig& drive, double delta, const Toggles& toggles)
{
    const MatrixXcd m = response_kernel(scheme, cavity, toggles, delta);
    const VectorXcd source = coupling_matrix(scheme, cavity) * drive.polarization;

    Eigen::PartialPivLU<MatrixXcd> lu(m);
    if (lu.rcond() < 1e-14) {
        throw NumericalError(fmt::format("response kernel is singular at delta = {} (rcond {:.3e})",
                                         delta, lu.rcond()));
    }
    return lu.solve(-drive.rabi * source);
}

MatrixXcd dissipator(std::span<const MatrixXcd> jumps, const MatrixXcd& rates)
{
    const auto n = jumps.front().rows();
    const MatrixXcd id = MatrixXcd::Identity(n, n);
    MatrixXcd out = MatrixXcd::Zero(n * n, n * n);
    for (std::size_t j = 0; j < jumps.size(); ++j) {
        for (std::size_t k = 0; k < jumps.size(); ++k) {
            const cd rate = rates(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
            if (rate == cd{}) continue;
            const MatrixXcd jk = jumps[j].adjoint() * jumps[k];
            out += rate * (kron(jumps[j].conjugate(), jumps[k]) - 0.5 * kron(id, jk)
                           - 0.5 * kron(jk.transpose(), id));
        }
    }
    return out;
}

VectorXcd vectorize(const MatrixXcd& rho)
{
    return rho.reshaped();
}

MatrixXcd unvectorize(const VectorXcd& v, int levels)
{
    return v.reshaped(levels, levels);
}

MatrixXcd Liouvillian::undriven() const
{
    return coherent + se + sr + sgc + sgc_shift;
}

MatrixXcd Liouvillian::total() const
{
    return undriven() + drive;
}

Liouvillian assemble_liouvillian(const LevelScheme& scheme, const CavityParams& cavity,
                                 const DriveConfig& drive, const Toggles& toggles, double delta)
{
    cavity.validate();
    drive.validate();

    const int n = static_cast<int>(scheme.size());
    const int levels = n + 1;
    const MatrixXcd g = g_matrix(scheme, cavity);
    if (g.rows() != n) throw ValidationError("coupling matrix does not match the level scheme");

    Liouvillian l;
    l.levels = levels;
    l.delta = delta;
    l.toggles = toggles;

    MatrixXcd h0 = MatrixXcd::Zero(levels, levels);
    for (int t = 0; t < n; ++t) h0(t + 1, t + 1) = scheme.transitions[static_cast<std::size_t>(t)].detuning - delta;
    if (toggles.sr) h0.bottomRightCorner(n, n) -= cavity.delta_ls * diagonal_part(g);
    l.coherent = commutator_superop(h0);

    MatrixXcd h_sgc = MatrixXcd::Zero(levels, levels);
    if (toggles.sgc_hamiltonian) h_sgc.bottomRightCorner(n, n) = -cavity.delta_ls * off_diagonal(g);
    l.sgc_shift = commutator_superop(h_sgc);

    const VectorXcd b = coupling_matrix(scheme, cavity) * drive.polarization;
    MatrixXcd hd = MatrixXcd::Zero(levels, levels);
    for (int t = 0; t < n; ++t) {
        hd(t + 1, 0) = -drive.rabi * b(t);
        hd(0, t + 1) = -drive.rabi * std::conj(b(t));
    }
    l.drive = commutator_superop(hd);

    const std::vector<MatrixXcd> jumps = lowering_operators(n);
    l.se = dissipator(jumps, MatrixXcd::Identity(n, n));
    l.sr = toggles.sr ? dissipator(jumps, cavity.gamma_s * diagonal_part(g))
                      : MatrixXcd::Zero(levels * levels, levels * levels);
    l.sgc = toggles.sgc_dissipative ? dissipator(jumps, cavity.gamma_s * off_diagonal(g))
                                    : MatrixXcd::Zero(levels * levels, levels * levels);
    return l;
}

VectorXcd SteadyState::coherences() const
{
    return rho.col(0).tail(rho.rows() - 1);
}

double SteadyState::excited_population() const
{
    return rho.diagonal().tail(rho.rows() - 1).real().sum();
}

SteadyState steady_state(const Liouvillian& liouvillian)
{
    const int levels = liouvillian.levels;
    const int dim = liouvillian.dimension();
    const MatrixXcd l0 = liouvillian.undriven();

    const VectorXcd trace_functional = vectorize(MatrixXcd::Identity(levels, levels));

    // ρ0: kernel of L0 normalized to unit trace (row 0 is the |G><G| balance equation).
    MatrixXcd a = l0;
    a.row(0) = trace_functional.transpose();
    VectorXcd e0 = VectorXcd::Zero(dim);
    e0(0) = 1.0;
    Eigen::PartialPivLU<MatrixXcd> lu0(a);
    if (lu0.rcond() < 1e-14) {
        throw NumericalError(fmt::format("undriven generator has no unique stationary state (rcond {:.3e})",
                                         lu0.rcond()));
    }
    const VectorXcd rho0 = lu0.solve(e0);

    // Higher orders: (L0 + ρ0 tr) x = −L_drive ρ_prev keeps tr x = 0.
    const MatrixXcd bordered = l0 + rho0 * trace_functional.transpose();
    Eigen::PartialPivLU<MatrixXcd> lu(bordered);
    const VectorXcd src1 = -(liouvillian.drive * rho0);
    const VectorXcd rho1 = lu.solve(src1);
    const VectorXcd rho2 = lu.solve(-(liouvillian.drive * rho1));

    SteadyState out;
    const double scale = std::max(src1.norm(), 1e-300);
    out.residual = (l0 * rho1 - src1).norm() / scale;
    if (src1.norm() > 0.0 && out.residual > 1e-9) {
        throw NumericalError(fmt::format("steady state did not converge (residual {:.3e})", out.residual));
    }
    out.rho = unvectorize(rho0 + rho1 + rho2, levels);
    return out;
}

std::vector<MatrixXcd> time_evolve(const MatrixXcd& generator, const MatrixXcd& rho0,
                                   std::span<const double> t_grid, const TimeEvolveOptions& options)
{
    namespace odeint = boost::numeric::odeint;
    using State = std::vector<cd>;

    const auto levels = rho0.rows();
    if (generator.rows() != levels * levels || generator.cols() != levels * levels) {
        throw ValidationError("generator dimension does not match the density matrix");
    }
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (t_grid[i] < 0.0 || (i > 0 && t_grid[i] < t_grid[i - 1])) {
            throw ValidationError("time grid must be non-negative and ascending");
        }
    }

    auto rhs = [&generator](const State& x, State& dxdt, double) {
        Eigen::Map<const VectorXcd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
        Eigen::Map<VectorXcd> dv(dxdt.data(), static_cast<Eigen::Index>(dxdt.size()));
        dv.noalias() = generator * xv;
    };

    auto stepper = odeint::make_controlled(options.abs_tol, options.rel_tol,
                                           odeint::runge_kutta_dopri5<State>());

    const VectorXcd v0 = vectorize(rho0);
    State x(v0.data(), v0.data() + v0.size());
    double t = 0.0;
    double dt = options.initial_step;

    std::vector<MatrixXcd> out;
    out.reserve(t_grid.size());
    for (const double target : t_grid) {
        while (t < target) {
            double step = std::min(dt, target - t);
            if (step < options.min_step && target - t > options.min_step) {
                throw NumericalError(fmt::format("step size underflow at t = {}", t));
            }
            const double t_before = t;
            const auto result = stepper.try_step(rhs, x, t, step);
            if (result == odeint::success) {
                // try_step returns the suggested next step in `step`.
                dt = std::max(step, options.min_step);
            } else {
                dt = step;
                if (t == t_before && dt < options.min_step) {
                    throw NumericalError(fmt::format("step size underflow at t = {}", t));
                }
            }
        }
        Eigen::Map<const VectorXcd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
        out.push_back(unvectorize(xv, static_cast<int>(levels)));
    }
    return out;
}

} // namespace sgc
