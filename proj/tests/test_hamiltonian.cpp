#include <doctest.h>

#include <cmath>
#include <vector>

#include "qstirap/dynamics.hpp"
#include "qstirap/hamiltonian.hpp"

using namespace qstirap;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * double(i) / double(n - 1);
    return g;
}

ModelParams params(int n, double g_c) {
    ModelParams p;
    p.N = n;
    p.g_c = g_c;
    return p;
}

// Gershgorin bound on the spectral norm of a Hermitian sparse operator.
double row_sum_norm(const SparseOperator& op) {
    const Eigen::MatrixXcd d = op.dense();
    return d.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

TEST_CASE("pulses peak at their centers with value K") {
    ModelParams p = params(1, 0.0);
    CHECK(pulse_values(p, 3.697).j1 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pulse_values(p, 2.4242).j2 == doctest::Approx(1.0).epsilon(1e-15));
    p.K = 2.5;
    CHECK(pulse_values(p, 3.697).j1 == doctest::Approx(2.5).epsilon(1e-15));
    // Gaussian tails vanish far from the centers.
    CHECK(pulse_values(p, 40.0).j1 == 0.0);
    CHECK(pulse_values(p, -40.0).j2 == 0.0);
    CHECK(pulse_values(p, 8.0).j1 < 1e-7 * p.K);
    // J1 = J2 at the midpoint of the two centers.
    const double mid = 0.5 * (p.t1 + p.t2);
    const Pulses j = pulse_values(p, mid);
    CHECK(j.j1 == doctest::Approx(j.j2).epsilon(1e-14));
}

TEST_CASE("pulse derivative matches finite differences") {
    const ModelParams p = params(1, 0.1);
    const double t = 2.9, eps = 1e-6;
    const Pulses dj = pulse_derivatives(p, t);
    const Pulses hi = pulse_values(p, t + eps), lo = pulse_values(p, t - eps);
    CHECK(dj.j1 == doctest::Approx((hi.j1 - lo.j1) / (2 * eps)).epsilon(1e-8));
    CHECK(dj.j2 == doctest::Approx((hi.j2 - lo.j2) / (2 * eps)).epsilon(1e-8));
}

TEST_CASE("params validation rejects bad inputs") {
    ModelParams p = params(5, 0.1);
    CHECK_NOTHROW((void)Model{p});
    p.t1 = 2.0;  // violates t1 > t2
    CHECK_THROWS_AS((void)Model{p}, InvalidArgument);
    p = params(0, 0.1);
    CHECK_THROWS_AS((void)Model{p}, InvalidArgument);
    p = params(5, 0.1);
    p.K = 0.0;
    CHECK_THROWS_AS((void)Model{p}, InvalidArgument);
}

TEST_CASE("with vanished pulses only the detuning term survives") {
    // Both Gaussians underflow to exactly zero this far out.
    const Model model(params(3, 0.0));
    const Eigen::MatrixXd h = model.hamiltonian(60.0).dense_real();
    CHECK((h - Eigen::MatrixXd(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t i = 0; i < model.basis().size(); ++i)
        CHECK(h(i, i) == doctest::Approx(0.5 * model.basis().state(i).n_b).epsilon(1e-15));
}

TEST_CASE("N=1 photon block is the analytic 3x3 single-particle matrix") {
    const Model model(params(1, 0.0));
    const double t = 3.0;
    const Pulses j = pulse_values(model.params(), t);
    const Eigen::MatrixXd h = model.hamiltonian(t).dense_real();
    const ConservedBasis& basis = model.basis();
    const auto ia = basis.index_of({1, 0, 0, Qubit::down});
    const auto ib = basis.index_of({0, 1, 0, Qubit::down});
    const auto ic = basis.index_of({0, 0, 1, Qubit::down});
    CHECK(h(ia, ib) == doctest::Approx(-j.j1).epsilon(1e-14));
    CHECK(h(ib, ic) == doctest::Approx(-j.j2).epsilon(1e-14));
    CHECK(h(ib, ib) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(h(ia, ia) == 0.0);
    CHECK(h(ia, ic) == 0.0);

    // Analytic eigenvalues of [[0,-J1,0],[-J1,D,-J2],[0,-J2,0]]: 0 (dark mode)
    // and (D ± sqrt(D^2 + 4(J1^2+J2^2)))/2; the qubit-up state adds one more 0.
    const SpectrumSlice slice = diagonalize(model, t);
    const double disc = std::sqrt(0.25 + 4.0 * (j.j1 * j.j1 + j.j2 * j.j2));
    CHECK(slice.energies[0] == doctest::Approx(0.5 * (0.5 - disc)).epsilon(1e-12));
    CHECK(std::abs(slice.energies[1]) < 1e-12);
    CHECK(std::abs(slice.energies[2]) < 1e-12);
    CHECK(slice.energies[3] == doctest::Approx(0.5 * (0.5 + disc)).epsilon(1e-12));
}

TEST_CASE("initial Fock state has zero energy expectation at t~ = 0") {
    const Model model(params(20, 0.2));
    const Eigen::VectorXcd x0 = basis_vector(model.basis(), {20, 0, 0, Qubit::down});
    const cplx e = x0.dot(model.hamiltonian(0.0).apply(x0));
    CHECK(std::abs(e) < 1e-12);
}

TEST_CASE("diagonalize reconstructs H and returns an orthonormal set") {
    const Model model(params(6, 0.2));
    const SpectrumSlice slice = diagonalize(model, 2.8);
    REQUIRE(slice.energies.size() == 49);
    for (Eigen::Index k = 1; k < slice.energies.size(); ++k)
        CHECK(slice.energies[k] >= slice.energies[k - 1]);
    const Eigen::MatrixXd h = model.hamiltonian(2.8).dense_real();
    const Eigen::MatrixXd rebuilt =
        slice.vectors * slice.energies.asDiagonal() * slice.vectors.transpose();
    CHECK((h - rebuilt).cwiseAbs().maxCoeff() < 1e-9);
    const Eigen::MatrixXd gram = slice.vectors.transpose() * slice.vectors;
    CHECK((gram - Eigen::MatrixXd::Identity(49, 49)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gauge fixing is reproducible") {
    const Model model(params(5, 0.15));
    const SpectrumSlice a = diagonalize(model, 2.5);
    const SpectrumSlice b = diagonalize(model, 2.5);
    CHECK((a.vectors - b.vectors).cwiseAbs().maxCoeff() < 1e-9);
    for (Eigen::Index k = 0; k < a.vectors.cols(); ++k) {
        Eigen::Index imax = 0;
        a.vectors.col(k).cwiseAbs().maxCoeff(&imax);
        CHECK(a.vectors(imax, k) > 0.0);
    }
}

TEST_CASE("for g_c = 0 the dark state spans the zero-energy eigenspace") {
    const Model model(params(20, 0.0));
    for (double t : {1.7, 2.9, 4.2}) {
        const SpectrumSlice slice = diagonalize(model, t);
        const Eigen::VectorXcd dark = build_dark_state(model.params(), t, model.basis());
        double projection = 0.0;
        int zero_count = 0;
        for (Eigen::Index k = 0; k < slice.energies.size(); ++k) {
            if (std::abs(slice.energies[k]) < 1e-8) {
                ++zero_count;
                projection += std::norm(slice.vectors.col(k).cast<cplx>().dot(dark));
            }
        }
        CHECK(zero_count >= 1);
        CHECK(projection > 1.0 - 1e-9);
    }
}

TEST_CASE("spectrum scan emits one gauge-chained slice per grid point") {
    const Model model(params(4, 0.1));
    const auto grid = linspace(2.0, 2.5, 11);
    const auto slices = spectrum_scan_collect(model, grid);
    REQUIRE(slices.size() == 11);
    for (std::size_t k = 0; k < slices.size(); ++k) {
        CHECK(slices[k].t_tilde == grid[k]);
        CHECK(slices[k].energies.size() == 25);
    }
    // A single-point grid reduces to diagonalize.
    const std::vector<double> one{2.2};
    const auto single = spectrum_scan_collect(model, one);
    const SpectrumSlice direct = diagonalize(model, 2.2);
    CHECK((single[0].energies - direct.energies).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((single[0].vectors - direct.vectors).cwiseAbs().maxCoeff() < 1e-12);

    const std::vector<double> bad{1.0, 1.0};
    CHECK_THROWS_AS(spectrum_scan_collect(model, bad), InvalidArgument);
}

TEST_CASE("threaded scan matches the sequential scan") {
    const Model model(params(4, 0.2));
    const auto grid = linspace(2.0, 3.0, 21);
    const auto seq = spectrum_scan_collect(model, grid, 1);
    const auto par = spectrum_scan_collect(model, grid, 4);
    REQUIRE(seq.size() == par.size());
    for (std::size_t k = 0; k < seq.size(); ++k) {
        CHECK((seq[k].energies - par[k].energies).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((seq[k].vectors - par[k].vectors).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("dark-state energy stays pinned at zero for g_c = 0") {
    const Model model(params(6, 0.0));
    const auto grid = linspace(0.5, 5.5, 31);
    spectrum_scan(model, grid, 1, [](const SpectrumSlice& slice) {
        CHECK(slice.energies.cwiseAbs().minCoeff() < 1e-10);
    });
}

TEST_CASE("sorted energies respect the Weyl bound between close slices") {
    const Model model(params(5, 0.2));
    const auto grid = linspace(2.0, 2.3, 31);  // step 0.01
    const double hop_ab_norm = row_sum_norm(model.hop_ab());
    const double hop_bc_norm = row_sum_norm(model.hop_bc());
    const auto slices = spectrum_scan_collect(model, grid);
    for (std::size_t k = 1; k < slices.size(); ++k) {
        const Pulses ja = pulse_values(model.params(), grid[k - 1]);
        const Pulses jb = pulse_values(model.params(), grid[k]);
        const double bound = std::abs(jb.j1 - ja.j1) * hop_ab_norm +
                             std::abs(jb.j2 - ja.j2) * hop_bc_norm + 1e-9;
        CHECK((slices[k].energies - slices[k - 1].energies).cwiseAbs().maxCoeff() <= bound);
    }
}

TEST_CASE("tracking the dark branch holds energy zero for g_c = 0") {
    const Model model(params(6, 0.0));
    const auto grid = linspace(1.5, 4.0, 126);
    const auto slices = spectrum_scan_collect(model, grid);
    const Eigen::VectorXcd dark = build_dark_state(model.params(), grid[0], model.basis());
    Eigen::Index seed = 0;
    (slices[0].vectors.transpose().cast<cplx>() * dark).cwiseAbs2().maxCoeff(&seed);
    const auto route = track_branch(slices, static_cast<int>(seed));
    REQUIRE(route.size() == slices.size());
    for (const BranchPoint& p : route) CHECK(std::abs(p.energy) < 1e-9);
}

TEST_CASE("tracking is reversible on a regular route") {
    const Model model(params(6, 0.05));
    const auto grid = linspace(2.0, 3.2, 121);
    auto slices = spectrum_scan_collect(model, grid);
    const Eigen::VectorXcd dark = build_dark_state(model.params(), grid[0], model.basis());
    Eigen::Index seed = 0;
    (slices[0].vectors.transpose().cast<cplx>() * dark).cwiseAbs2().maxCoeff(&seed);

    const auto forward = track_branch(slices, static_cast<int>(seed));
    for (const BranchPoint& p : forward) CHECK_FALSE(p.ambiguous);

    const std::vector<SpectrumSlice> reversed(slices.rbegin(), slices.rend());
    const auto backward = track_branch(reversed, forward.back().index);
    CHECK(backward.back().index == static_cast<int>(seed));

    CHECK_THROWS_AS(track_branch(std::span<const SpectrumSlice>{}, 0), InvalidArgument);
}

TEST_CASE("bright-branch gap is smallest where the pulses cross") {
    // For g_c = 0, N = 1 the two bright branches are separated by
    // sqrt(D^2 + 4(J1^2+J2^2)), minimal exactly at J1 = J2.
    const Model model(params(1, 0.0));
    const auto grid = linspace(2.6, 3.5, 181);
    const auto slices = spectrum_scan_collect(model, grid);
    const CrossingMetrics m = crossing_metrics(model, slices, 0, 3);
    const double mid = 0.5 * (model.params().t1 + model.params().t2);
    CHECK(m.t_tilde == doctest::Approx(mid).epsilon(0.01));
    const Pulses j = pulse_values(model.params(), m.t_tilde);
    CHECK(m.gap ==
          doctest::Approx(std::sqrt(0.25 + 4.0 * (j.j1 * j.j1 + j.j2 * j.j2))).epsilon(1e-10));
    CHECK(m.sigma > 0.0);
    CHECK(std::isfinite(m.ratio));
    CHECK_FALSE(m.degenerate);
}

TEST_CASE("crossing metrics flag degenerate cases") {
    const Model model(params(2, 0.1));
    const auto slices = spectrum_scan_collect(model, linspace(2.8, 3.0, 5));
    const CrossingMetrics self = crossing_metrics(model, slices, 2, 2);
    CHECK(self.degenerate);
    CHECK(self.gap == 0.0);
    CHECK_THROWS_AS(crossing_metrics(model, slices, 0, 99), InvalidArgument);
}
