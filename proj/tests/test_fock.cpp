#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "qstirap/fock.hpp"

using namespace qstirap;

namespace {

// Independent oracle: enumerate every (n_a, n_b, n_c, qubit) tuple by brute
// force and keep the ones with total excitation N.
std::vector<FockState> brute_force_states(int n) {
    std::vector<FockState> out;
    for (Qubit q : {Qubit::down, Qubit::up})
        for (int n_a = 0; n_a <= n; ++n_a)
            for (int n_b = 0; n_b <= n; ++n_b)
                for (int n_c = 0; n_c <= n; ++n_c) {
                    FockState s{n_a, n_b, n_c, q};
                    if (s.excitation() == n) out.push_back(s);
                }
    return out;
}

// Independent oracle: dense matrix of A_cr† A_an built directly from the
// ladder rules, without the sparse assembly path.
Eigen::MatrixXd dense_exchange_oracle(const ConservedBasis& basis, Mode cr, Mode an) {
    const auto d = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    auto counts = [](const FockState& s) {
        return std::array<int, 4>{s.n_a, s.n_b, s.n_c, s.qubit == Qubit::up ? 1 : 0};
    };
    for (Eigen::Index col = 0; col < d; ++col) {
        auto c = counts(basis.state(col));
        const int ai = static_cast<int>(an), ci = static_cast<int>(cr);
        if (c[ai] == 0) continue;
        double factor = (ai == 3) ? 1.0 : std::sqrt(double(c[ai]));
        c[ai] -= 1;
        if (ci == 3 && c[3] != 0) continue;  // qubit already up
        c[ci] += 1;
        factor *= (ci == 3) ? 1.0 : std::sqrt(double(c[ci]));
        FockState target{c[0], c[1], c[2], c[3] ? Qubit::up : Qubit::down};
        m(static_cast<Eigen::Index>(basis.index_of(target)), col) = factor;
    }
    return m;
}

}  // namespace

TEST_CASE("basis size is (N+1)^2") {
    CHECK(enumerate_basis(1).size() == 4);
    CHECK(enumerate_basis(20).size() == 441);
    CHECK(enumerate_basis(3).size() == 16);
}

TEST_CASE("basis enumeration matches the brute-force oracle at N=3") {
    const ConservedBasis basis(3);
    const auto oracle = brute_force_states(3);
    REQUIRE(basis.size() == oracle.size());
    REQUIRE(basis.size() == 16);
    // Same set of states, independent of ordering.
    for (const FockState& s : oracle) CHECK(basis.contains(s));
    for (std::size_t i = 0; i < basis.size(); ++i)
        CHECK(std::count(oracle.begin(), oracle.end(), basis.state(i)) == 1);
}

TEST_CASE("basis ordering is lexicographic in (qubit, n_a, n_b) and bijective") {
    for (int n : {1, 2, 3, 6}) {
        const ConservedBasis basis(n);
        for (std::size_t i = 0; i < basis.size(); ++i) {
            const FockState& s = basis.state(i);
            CHECK(s.excitation() == n);
            CHECK(basis.index_of(s) == i);
            if (i > 0) {
                const FockState& prev = basis.state(i - 1);
                const auto key = [](const FockState& f) {
                    return std::array<int, 3>{static_cast<int>(f.qubit), f.n_a, f.n_b};
                };
                CHECK(key(prev) < key(s));
            }
        }
    }
}

TEST_CASE("basis rejects invalid sizes") {
    CHECK_THROWS_AS(enumerate_basis(0), InvalidArgument);
    CHECK_THROWS_AS(enumerate_basis(-3), InvalidArgument);
    CHECK_THROWS_AS(enumerate_basis(201), InvalidArgument);
    CHECK_THROWS_AS(enumerate_basis(10, 5), InvalidArgument);
    CHECK_NOTHROW(enumerate_basis(201, 250));
}

TEST_CASE("hop_ab matrix element on N=1 is the sqrt(1)*sqrt(1) ladder product") {
    const ConservedBasis basis(1);
    const auto hop = build_bilinear(basis, BilinearKind::hop_ab);
    const auto row = basis.index_of({0, 1, 0, Qubit::down});
    const auto col = basis.index_of({1, 0, 0, Qubit::down});
    CHECK(hop.dense()(row, col).real() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("number operator is diagonal with the photon count") {
    const ConservedBasis basis(20);
    const auto num_a = build_bilinear(basis, BilinearKind::num_a);
    const Eigen::VectorXcd v = basis_vector(basis, {20, 0, 0, Qubit::down});
    const Eigen::VectorXcd w = num_a.apply(v);
    CHECK((w - 20.0 * v).norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("jc_c matrix element <0,0,1,up|c†s⁻+h.c.|0,0,2,down> = sqrt(2)") {
    const ConservedBasis basis(2);
    const auto jc = build_bilinear(basis, BilinearKind::jc_c);
    const auto row = basis.index_of({0, 0, 1, Qubit::up});
    const auto col = basis.index_of({0, 0, 2, Qubit::down});
    CHECK(jc.dense()(row, col).real() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("all built operators match the dense ladder-rule oracle at N=2") {
    const ConservedBasis basis(2);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const auto op = build_exchange(basis, Mode(i), Mode(j));
            const Eigen::MatrixXd oracle = dense_exchange_oracle(basis, Mode(i), Mode(j));
            CHECK((op.dense().real() - oracle).cwiseAbs().maxCoeff() < 1e-14);
            CHECK(op.dense().imag().cwiseAbs().maxCoeff() == 0.0);
        }
    const auto hop_ab = build_bilinear(basis, BilinearKind::hop_ab);
    const Eigen::MatrixXd oracle = dense_exchange_oracle(basis, Mode::a, Mode::b) +
                                   dense_exchange_oracle(basis, Mode::b, Mode::a);
    CHECK((hop_ab.dense().real() - oracle).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("named bilinears are Hermitian to 1e-14") {
    const ConservedBasis basis(5);
    for (auto kind : {BilinearKind::hop_ab, BilinearKind::hop_bc, BilinearKind::jc_c,
                      BilinearKind::num_a, BilinearKind::num_b, BilinearKind::num_c,
                      BilinearKind::sz_c})
        CHECK(build_bilinear(basis, kind).hermiticity_defect() < 1e-14);
}

TEST_CASE("exchange(i,j) adjoint is exchange(j,i)") {
    const ConservedBasis basis(3);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const auto ij = build_exchange(basis, Mode(i), Mode(j)).dense();
            const auto ji = build_exchange(basis, Mode(j), Mode(i)).dense();
            CHECK((ij - ji.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
        }
}

TEST_CASE("num_a and num_c commute exactly") {
    const ConservedBasis basis(4);
    const auto na = build_bilinear(basis, BilinearKind::num_a).matrix();
    const auto nc = build_bilinear(basis, BilinearKind::num_c).matrix();
    const SparseOperator::Matrix comm = SparseOperator::Matrix(na * nc) -
                                        SparseOperator::Matrix(nc * na);
    double max_entry = 0.0;
    for (int k = 0; k < comm.outerSize(); ++k)
        for (SparseOperator::Matrix::InnerIterator it(comm, k); it; ++it)
            max_entry = std::max(max_entry, std::abs(it.value()));
    CHECK(max_entry == 0.0);
}

TEST_CASE("operators conserve the total excitation") {
    const ConservedBasis basis(3);
    const Eigen::VectorXd n_total = [&] {
        Eigen::VectorXd d(static_cast<Eigen::Index>(basis.size()));
        for (std::size_t i = 0; i < basis.size(); ++i)
            d[static_cast<Eigen::Index>(i)] = basis.state(i).excitation();
        return d;
    }();
    // Output of any built operator on a basis vector has support only on
    // states with the same N (always true on a ConservedBasis by closure).
    for (auto kind : {BilinearKind::hop_ab, BilinearKind::hop_bc, BilinearKind::jc_c}) {
        const auto op = build_bilinear(basis, kind);
        for (std::size_t i = 0; i < basis.size(); ++i) {
            const Eigen::VectorXcd w = op.apply(basis_vector(basis, basis.state(i)));
            for (Eigen::Index k = 0; k < w.size(); ++k)
                if (std::abs(w[k]) > 0.0) CHECK(n_total[k] == 3.0);
        }
    }
}

TEST_CASE("apply checks dimensions and acts linearly") {
    const ConservedBasis basis(3);
    const auto hop = build_bilinear(basis, BilinearKind::hop_ab);
    CHECK_THROWS_AS(hop.apply(Eigen::VectorXcd::Zero(5)), InvalidArgument);

    const Eigen::VectorXcd v = basis_vector(basis, {0, 0, 3, Qubit::down});
    const auto num_c = build_bilinear(basis, BilinearKind::num_c);
    CHECK((num_c.apply(v) - 3.0 * v).norm() < 1e-14);

    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    Eigen::VectorXcd r(static_cast<Eigen::Index>(basis.size()));
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = cplx(normal(rng), normal(rng));
    // <v|O|v> real for Hermitian O, checked against the dense oracle too.
    const cplx quad = r.dot(hop.apply(r));
    CHECK(std::abs(quad.imag()) < 1e-12 * r.squaredNorm());
    const Eigen::MatrixXcd dense = hop.dense();
    CHECK(std::abs(quad - r.dot(dense * r)) < 1e-12 * r.squaredNorm());
}
