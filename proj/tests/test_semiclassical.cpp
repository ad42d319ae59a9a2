#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qstirap/semiclassical.hpp"

using namespace qstirap;

namespace {

ModelParams params(int n, double g_c) {
    ModelParams p;
    p.N = n;
    p.g_c = g_c;
    return p;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * double(i) / double(n - 1);
    return g;
}

// Closed-form dark stationary point for g_c = 0: a = sqrt(N) cosT, b = 0,
// c = -sqrt(N) sinT, spin down, mu = 0.
MeanFieldState dark_sp(const ModelParams& p, double t_tilde) {
    const Pulses j = pulse_values(p, t_tilde);
    const double hyp = std::hypot(j.j1, j.j2);
    MeanFieldState z;
    z.a = std::sqrt(double(p.N)) * j.j2 / hyp;
    z.c = -std::sqrt(double(p.N)) * j.j1 / hyp;
    return z;
}

}  // namespace

TEST_CASE("flow keeps the spin frozen when g_c = 0") {
    const ModelParams p = params(5, 0.0);
    MeanFieldState z;
    z.a = cplx(1.2, 0.3);
    z.c = cplx(0.4, -0.9);
    z.s_z = -0.5;
    const MeanFieldState d = mean_field_rhs(z, p, 2.7);
    CHECK(std::abs(d.s_c) == 0.0);
    CHECK(d.s_z == 0.0);
}

TEST_CASE("flow conserves excitation and spin length analytically") {
    const ModelParams p = params(7, 0.2);
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const MeanFieldState z = sample_valid_state(7, rng);
        const MeanFieldState d = mean_field_rhs(z, p, 2.0 + 0.1 * trial);
        const double d_excitation =
            2.0 * std::real(std::conj(z.a) * d.a + std::conj(z.b) * d.b +
                            std::conj(z.c) * d.c) +
            d.s_z;
        const double d_spin = 2.0 * std::real(std::conj(z.s_c) * d.s_c) + 2.0 * z.s_z * d.s_z;
        CHECK(std::abs(d_excitation) < 1e-13 * p.N);
        CHECK(std::abs(d_spin) < 1e-13);
    }
}

TEST_CASE("numerical integration drifts below 1e-7 over Kt = 20") {
    const ModelParams p = params(20, 0.2);
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 3; ++trial) {
        const MeanFieldState z0 = sample_valid_state(20, rng);
        const MeanFieldState z = integrate_flow(z0, p, 2.7879, 20.0);
        CHECK(std::abs(z.excitation() - z0.excitation()) < 1e-7);
        CHECK(std::abs(z.spin_length_sq() - z0.spin_length_sq()) < 1e-7);
    }
}

TEST_CASE("sampled states satisfy both constraints") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const MeanFieldState z = sample_valid_state(13, rng);
        CHECK(z.excitation() == doctest::Approx(13.0).epsilon(1e-12));
        CHECK(z.spin_length_sq() == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("decoupled state is stationary up to the pulse tails at t~ = 0") {
    const ModelParams p = params(20, 0.1);
    const SpResidual r = sp_residual(decoupled_state(20), 0.0, p, 0.0);
    CHECK(r.max_norm() < 1e-5);  // J1(0) = exp(-t1^2) K leaks into Eq. 4
    CHECK(r.max_norm() > 0.0);
}

TEST_CASE("dark stationary point closes the SP equations exactly for g_c = 0") {
    const ModelParams p = params(20, 0.0);
    for (double t : {0.8, 1.9, 2.4242, 3.1, 3.697, 4.6, 5.5}) {
        const SpResidual r = sp_residual(dark_sp(p, t), 0.0, p, t);
        CHECK(r.max_norm() < 1e-12);
    }
}

TEST_CASE("residual components are reported per equation") {
    const ModelParams p = params(4, 0.0);
    const double t = 3.0;
    const Pulses j = pulse_values(p, t);
    MeanFieldState z = dark_sp(p, t);
    z.b = 0.1 / j.j1;  // puts exactly 0.1 into Eq. 3's residual
    const SpResidual r = sp_residual(z, 0.0, p, t);
    CHECK(std::abs(r.equations[0]) == doctest::Approx(0.1).epsilon(1e-12));
    const auto stacked = r.stacked();
    CHECK(stacked[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(stacked.size() == 10);
}

TEST_CASE("Newton converges from the decoupled guess in the pulse tails") {
    const ModelParams p = params(20, 0.1);
    const SPSolution sol = solve_sp(p, 0.0, decoupled_state(20));
    CHECK(sol.residual < 1e-10);
    CHECK(std::abs(sol.energy) < 1e-4);
    CHECK(std::abs(sol.state.a) == doctest::Approx(std::sqrt(20.0)).epsilon(1e-4));
    CHECK(sol.state.a.imag() == 0.0);
}

TEST_CASE("Newton reports divergence instead of a silent wrong root") {
    const ModelParams p = params(20, 0.2);
    MeanFieldState zeros;
    zeros.a = zeros.b = zeros.c = zeros.s_c = 0.0;
    zeros.s_z = 0.0;
    CHECK_THROWS_AS((void)solve_sp(p, 2.8, zeros, 0.0, {1e-10, 25, 20}), ConvergenceError);
}

TEST_CASE("stationary points evolve on the mu orbit with frozen populations") {
    const ModelParams p = params(20, 0.1);
    const auto grid = linspace(0.0, 2.8, 141);
    const Branch branch = continue_branch(p, grid, decoupled_state(20));
    REQUIRE_FALSE(branch.breakpoint.has_value());
    const SPSolution& sp = branch.points.back();

    const MeanFieldState z = integrate_flow(sp.state, p, sp.t_tilde, 10.0);
    CHECK(std::abs(std::norm(z.a) - std::norm(sp.state.a)) < 1e-8);
    CHECK(std::abs(std::norm(z.b) - std::norm(sp.state.b)) < 1e-8);
    CHECK(std::abs(std::norm(z.c) - std::norm(sp.state.c)) < 1e-8);
    CHECK(std::abs(z.s_z - sp.state.s_z) < 1e-8);
    // Phase advances as exp(-i mu t).
    const cplx expected = sp.state.a * std::polar(1.0, -sp.mu * 10.0);
    CHECK(std::abs(z.a - expected) < 1e-6);
}

TEST_CASE("gauge covariance: a global phase maps solutions to solutions") {
    const ModelParams p = params(20, 0.1);
    const auto grid = linspace(0.0, 2.5, 126);
    const SPSolution sp = continue_branch(p, grid, decoupled_state(20)).points.back();
    MeanFieldState rotated = sp.state;
    const cplx phase = std::polar(1.0, 1.234);
    rotated.a *= phase;
    rotated.b *= phase;
    rotated.c *= phase;
    rotated.s_c *= phase;
    CHECK(sp_residual(rotated, sp.mu, p, sp.t_tilde).max_norm() < 1e-9);
    // The solver maps it back to the canonical gauge representative.
    const SPSolution again = solve_sp(p, sp.t_tilde, rotated, sp.mu);
    CHECK(again.state.a.imag() == 0.0);
    CHECK(again.state.a.real() >= 0.0);
    CHECK(std::abs(again.mu - sp.mu) < 1e-9);
    CHECK(std::abs(again.energy - sp.energy) < 1e-9);
}

TEST_CASE("continued branch reproduces the closed-form dark branch for g_c = 0") {
    const ModelParams p = params(20, 0.0);
    const auto grid = linspace(1.0, 5.0, 201);
    const Branch branch = continue_branch(p, grid, dark_sp(p, 1.0));
    REQUIRE_FALSE(branch.breakpoint.has_value());
    REQUIRE(branch.points.size() == grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const MeanFieldState exact = dark_sp(p, grid[k]);
        const SPSolution& sol = branch.points[k];
        CHECK(std::abs(std::norm(sol.state.a) - std::norm(exact.a)) < 1e-8);
        CHECK(std::abs(std::norm(sol.state.c) - std::norm(exact.c)) < 1e-8);
        CHECK(std::norm(sol.state.b) < 1e-10);
        CHECK(std::abs(sol.energy) < 1e-9);
        CHECK(std::abs(sol.mu) < 1e-9);
    }
    CHECK(branch.ssp);
    CHECK(branch.max_b_fraction < 0.05);
}

TEST_CASE("branch through the strong-coupling window continues without gaps") {
    const ModelParams p = params(20, 0.2);
    const auto grid = linspace(0.0, 3.3, 166);
    const Branch branch = continue_branch(p, grid, decoupled_state(20));
    CHECK_FALSE(branch.breakpoint.has_value());
    CHECK(branch.points.size() == grid.size());
    for (const SPSolution& s : branch.points) CHECK(s.residual < 1e-10);
    CHECK(branch.max_b_fraction < 0.05);
}

TEST_CASE("single-point continuation reduces to solve_sp") {
    const ModelParams p = params(10, 0.1);
    const std::vector<double> grid{0.0};
    const Branch branch = continue_branch(p, grid, decoupled_state(10));
    const SPSolution direct = solve_sp(p, 0.0, decoupled_state(10));
    REQUIRE(branch.points.size() == 1);
    CHECK(std::abs(branch.points[0].mu - direct.mu) < 1e-12);
    CHECK(std::abs(branch.points[0].energy - direct.energy) < 1e-12);
}

TEST_CASE("failed continuation returns the partial branch with a breakpoint") {
    const ModelParams p = params(20, 0.2);
    const auto grid = linspace(0.0, 3.0, 4);
    MeanFieldState zeros;
    zeros.a = 0.0;
    zeros.s_z = 0.0;
    const Branch branch = continue_branch(p, grid, zeros, 0.0, {1e-10, 12, 20});
    CHECK(branch.breakpoint.has_value());
    CHECK(branch.points.size() < grid.size());
}

TEST_CASE("lyapunov exponent vanishes for the linear chain") {
    const ModelParams p = params(20, 0.0);
    const SPSolution sp = solve_sp(p, 2.7, dark_sp(p, 2.7));
    LyapunovConfig config;
    config.resets = 400;
    const LyapunovSeries series = lyapunov(p, 2.7, sp, config);
    REQUIRE(series.lambda.size() == 400);
    CHECK(std::abs(series.value()) < 1e-8);
    CHECK(series.delta0 == doctest::Approx(1e-6 * std::sqrt(20.0)));
}

TEST_CASE("lyapunov input validation") {
    LyapunovConfig config;
    config.xi = -1.0;
    CHECK_THROWS_AS(config.validate(), InvalidArgument);
    config = {};
    config.resets = 0;
    CHECK_THROWS_AS(config.validate(), InvalidArgument);
}

TEST_CASE("chaotic window is empty for the linear chain") {
    const ModelParams p = params(12, 0.0);
    const auto grid = linspace(2.2, 3.2, 11);
    const Branch branch = continue_branch(p, grid, dark_sp(p, grid[0]));
    LyapunovConfig config;
    config.resets = 300;
    const ChaoticWindow window = chaotic_window(p, grid, branch, config);
    CHECK_FALSE(window.found);
    CHECK(window.lambdas.size() == grid.size());
}
