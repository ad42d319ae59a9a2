#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "qstirap/hamiltonian.hpp"

namespace qstirap {

/// Mean-field phase-space point: complex mode amplitudes normalized so that
/// |a|^2 = <n_a> etc., s_c = <s⁻_c>, s_z = <s^z_c>.
struct MeanFieldState {
    cplx a{0.0, 0.0};
    cplx b{0.0, 0.0};
    cplx c{0.0, 0.0};
    cplx s_c{0.0, 0.0};
    double s_z = -0.5;

    double excitation() const {
        return std::norm(a) + std::norm(b) + std::norm(c) + s_z + 0.5;
    }
    double spin_length_sq() const { return std::norm(s_c) + s_z * s_z; }
    bool finite() const;
};

/// Factorized Heisenberg flow of the chain. Conserves the excitation and the
/// spin length exactly at the level of the equations:
///   i a' = -J1 b
///   i b' = delta b - J1 a - J2 c
///   i c' = -J2 b + g_c s_c
///   i s_c' = -2 g_c c s_z
///   s_z' = 2 g_c Im(conj(s_c) c)
MeanFieldState mean_field_rhs(const MeanFieldState& z, const ModelParams& p, double t_tilde);

/// Classical energy delta|b|^2 + 2 g_c Re(conj(c) s_c) - 2 J1 Re(conj(a) b)
/// - 2 J2 Re(conj(b) c).
double classical_energy(const MeanFieldState& z, const ModelParams& p, double t_tilde);

/// a = sqrt(N), everything else empty; exact stationary point in the J -> 0 limit.
MeanFieldState decoupled_state(int total_excitation);

/// Uniformly samples a state satisfying both constraints (for property tests).
MeanFieldState sample_valid_state(int total_excitation, std::mt19937_64& rng);

/// Fixed-step RK4 propagation at frozen t~ (duration in units 1/K).
MeanFieldState integrate_flow(MeanFieldState z, const ModelParams& p, double t_tilde,
                              double duration, double step = 1e-3);
/// Same, but t~ advances at d(t~)/dt = rate*K during the integration.
MeanFieldState integrate_flow_swept(MeanFieldState z, const ModelParams& p, double t_tilde0,
                                    double rate, double duration, double step = 1e-3);

/// Residuals of the stationary-point system at chemical potential mu:
///   eq[0]: J1 b + mu a
///   eq[1]: delta b - J1 a - J2 c - mu b
///   eq[2]: J2 b - g_c s_c + mu c
///   eq[3]: 2 g_c c s_z + mu s_c
/// plus the excitation and spin-length constraint residuals. The solver works
/// in the phase gauge Im(a) = 0, a >= 0.
struct SpResidual {
    std::array<cplx, 4> equations;
    double excitation = 0.0;
    double spin_length = 0.0;

    double max_norm() const;
    /// [Re eq0, Im eq0, ..., Re eq3, Im eq3, excitation, spin_length]
    Eigen::Matrix<double, 10, 1> stacked() const;
};

SpResidual sp_residual(const MeanFieldState& z, double mu, const ModelParams& p,
                       double t_tilde);

struct SPSolution {
    MeanFieldState state;
    double mu = 0.0;
    double t_tilde = 0.0;
    double energy = 0.0;
    double residual = 0.0;
};

struct NewtonOptions {
    double tol = 1e-10;       // max-norm residual target
    int max_iterations = 200;
    int max_backtracks = 20;
};

/// Damped Newton (least-squares step, backtracking line search) on the
/// stationary-point system. Throws ConvergenceError on divergence.
SPSolution solve_sp(const ModelParams& p, double t_tilde, const MeanFieldState& guess,
                    double mu_guess = 0.0, const NewtonOptions& options = {});

struct Branch {
    std::vector<SPSolution> points;
    std::optional<std::size_t> breakpoint;  // grid index where Newton diverged
    double max_b_fraction = 0.0;            // max |b|^2 / N along the branch
    bool ssp = false;  // a -> c transfer with max_b_fraction < 0.05

    const SPSolution& at_time(double t_tilde) const;  // nearest grid point
};

/// Predictor-corrector continuation along t_grid, seeded at the first point.
Branch continue_branch(const ModelParams& p, std::span<const double> t_grid,
                       const MeanFieldState& seed_guess, double mu_guess = 0.0,
                       const NewtonOptions& options = {});

/// Benettin reset-renormalization setup. The phase-space metric is Euclidean
/// on (Re, Im) of (a, b, c, s_c); s_z is reconstructed from the spin length.
struct LyapunovConfig {
    double delta0 = 0.0;       // initial separation; <= 0 means 1e-6 sqrt(N)
    double xi = 0.1;           // inter-reset evolution time, units 1/K
    int resets = 10000;        // M
    int warmup_resets = 1000;  // alignment transient discarded before summing
    std::uint64_t seed = 12345;
    double rk_step = 1e-3;     // units 1/K

    void validate() const;
    double effective_delta0(int total_excitation) const;
};

struct LyapunovSeries {
    std::vector<double> lambda;  // lambda_m for m = 1..M, units K
    double xi = 0.0;
    double delta0 = 0.0;
    double value() const { return lambda.empty() ? 0.0 : lambda.back(); }
};

/// Finite-time maximal Lyapunov exponent at frozen t~ around a stationary point.
LyapunovSeries lyapunov(const ModelParams& p, double t_tilde, const SPSolution& base,
                        const LyapunovConfig& config);

struct ChaoticWindow {
    bool found = false;
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::vector<double> lambdas;  // one per grid point
    double threshold = 0.0;
};

/// Evaluates the Lyapunov exponent along the branch (averaged over
/// `seed_count` perturbation directions per grid point) and returns the
/// maximal contiguous grid run with lambda above `threshold_factor` times the
/// regular reference level (the median |lambda| over the grid, which sits on a
/// regular point as long as the window covers a minority of it).
ChaoticWindow chaotic_window(const ModelParams& p, std::span<const double> t_grid,
                             const Branch& branch, const LyapunovConfig& config,
                             double threshold_factor = 5.0, int seed_count = 4,
                             int threads = 1);

}  // namespace qstirap
