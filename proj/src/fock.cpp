#include "qstirap/fock.hpp"

#include <cmath>
#include <optional>
#include <utility>

namespace qstirap {

ConservedBasis::ConservedBasis(int total_excitation, int safety_cap) : n_total_(total_excitation) {
    if (total_excitation < 1)
        throw InvalidArgument("ConservedBasis: total excitation N must be >= 1");
    if (total_excitation > safety_cap)
        throw InvalidArgument("ConservedBasis: N exceeds the safety cap of " +
                              std::to_string(safety_cap));
    const int n = total_excitation;
    states_.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
    for (Qubit q : {Qubit::down, Qubit::up}) {
        const int photons = n - (q == Qubit::up ? 1 : 0);
        for (int n_a = 0; n_a <= photons; ++n_a)
            for (int n_b = 0; n_b <= photons - n_a; ++n_b)
                states_.push_back({n_a, n_b, photons - n_a - n_b, q});
    }
}

bool ConservedBasis::contains(const FockState& s) const {
    return s.n_a >= 0 && s.n_b >= 0 && s.n_c >= 0 && s.excitation() == n_total_;
}

std::size_t ConservedBasis::index_of(const FockState& s) const {
    if (!contains(s))
        throw InvalidArgument("ConservedBasis::index_of: state not in this basis");
    const int photons = n_total_ - (s.qubit == Qubit::up ? 1 : 0);
    // Lexicographic (qubit, n_a, n_b) position within the qubit sector.
    const std::size_t pos = static_cast<std::size_t>(s.n_a) * (photons + 1) -
                            static_cast<std::size_t>(s.n_a) * (s.n_a - 1) / 2 + s.n_b;
    const std::size_t down_count =
        static_cast<std::size_t>(n_total_ + 1) * (n_total_ + 2) / 2;
    return (s.qubit == Qubit::up ? down_count : 0) + pos;
}

SparseOperator::SparseOperator(std::shared_ptr<const ConservedBasis> basis, Matrix mat)
    : basis_(std::move(basis)), mat_(std::move(mat)) {
    if (mat_.rows() != mat_.cols() ||
        mat_.rows() != static_cast<Eigen::Index>(basis_->size()))
        throw InvalidArgument("SparseOperator: matrix does not match basis dimension");
}

Eigen::VectorXcd SparseOperator::apply(const Eigen::VectorXcd& v) const {
    if (v.size() != dim())
        throw InvalidArgument("SparseOperator::apply: vector length " +
                              std::to_string(v.size()) + " != operator dimension " +
                              std::to_string(dim()));
    return mat_ * v;
}

Eigen::MatrixXd SparseOperator::dense_real() const {
    Eigen::MatrixXcd d = dense();
    if (d.imag().cwiseAbs().maxCoeff() > 0.0)
        throw NumericError("SparseOperator::dense_real: operator has complex entries");
    return d.real();
}

double SparseOperator::hermiticity_defect() const {
    Matrix diff = Matrix(mat_ - Matrix(mat_.adjoint()));
    double defect = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (Matrix::InnerIterator it(diff, k); it; ++it)
            defect = std::max(defect, std::abs(it.value()));
    return defect;
}

namespace {

struct ModeAction {
    double factor;
    FockState state;
};

// A_m |s>: standard ladder rules <n-1|a|n> = sqrt(n), <down|s⁻|up> = 1.
std::optional<ModeAction> annihilate(Mode m, const FockState& s) {
    FockState out = s;
    switch (m) {
        case Mode::a:
            if (s.n_a == 0) return std::nullopt;
            out.n_a -= 1;
            return ModeAction{std::sqrt(double(s.n_a)), out};
        case Mode::b:
            if (s.n_b == 0) return std::nullopt;
            out.n_b -= 1;
            return ModeAction{std::sqrt(double(s.n_b)), out};
        case Mode::c:
            if (s.n_c == 0) return std::nullopt;
            out.n_c -= 1;
            return ModeAction{std::sqrt(double(s.n_c)), out};
        case Mode::spin:
            if (s.qubit != Qubit::up) return std::nullopt;
            out.qubit = Qubit::down;
            return ModeAction{1.0, out};
    }
    return std::nullopt;
}

std::optional<ModeAction> create(Mode m, const FockState& s) {
    FockState out = s;
    switch (m) {
        case Mode::a:
            out.n_a += 1;
            return ModeAction{std::sqrt(double(out.n_a)), out};
        case Mode::b:
            out.n_b += 1;
            return ModeAction{std::sqrt(double(out.n_b)), out};
        case Mode::c:
            out.n_c += 1;
            return ModeAction{std::sqrt(double(out.n_c)), out};
        case Mode::spin:
            if (s.qubit != Qubit::down) return std::nullopt;
            out.qubit = Qubit::up;
            return ModeAction{1.0, out};
    }
    return std::nullopt;
}

constexpr double kAssemblyDropTol = 1e-15;

using Triplets = std::vector<Eigen::Triplet<cplx>>;

void add_exchange_entries(const ConservedBasis& basis, Mode cr, Mode an, Triplets& out) {
    for (std::size_t col = 0; col < basis.size(); ++col) {
        auto step1 = annihilate(an, basis.state(col));
        if (!step1) continue;
        auto step2 = create(cr, step1->state);
        if (!step2) continue;
        const double val = step1->factor * step2->factor;
        if (std::abs(val) < kAssemblyDropTol) continue;
        out.emplace_back(static_cast<int>(basis.index_of(step2->state)),
                         static_cast<int>(col), cplx(val, 0.0));
    }
}

SparseOperator assemble(const ConservedBasis& basis, const Triplets& triplets) {
    SparseOperator::Matrix mat(static_cast<Eigen::Index>(basis.size()),
                               static_cast<Eigen::Index>(basis.size()));
    mat.setFromTriplets(triplets.begin(), triplets.end());
    mat.prune([](Eigen::Index, Eigen::Index, const cplx& v) {
        return std::abs(v) >= kAssemblyDropTol;
    });
    mat.makeCompressed();
    return SparseOperator(std::make_shared<const ConservedBasis>(basis), std::move(mat));
}

}  // namespace

SparseOperator build_exchange(const ConservedBasis& basis, Mode create_mode,
                              Mode annihilate_mode) {
    const int ci = static_cast<int>(create_mode);
    const int ai = static_cast<int>(annihilate_mode);
    if (ci < 0 || ci > 3 || ai < 0 || ai > 3)
        throw InvalidArgument("build_exchange: mode index out of range (must conserve N)");
    Triplets triplets;
    add_exchange_entries(basis, create_mode, annihilate_mode, triplets);
    return assemble(basis, triplets);
}

SparseOperator build_bilinear(const ConservedBasis& basis, BilinearKind kind) {
    Triplets triplets;
    switch (kind) {
        case BilinearKind::hop_ab:
            add_exchange_entries(basis, Mode::a, Mode::b, triplets);
            add_exchange_entries(basis, Mode::b, Mode::a, triplets);
            break;
        case BilinearKind::hop_bc:
            add_exchange_entries(basis, Mode::b, Mode::c, triplets);
            add_exchange_entries(basis, Mode::c, Mode::b, triplets);
            break;
        case BilinearKind::jc_c:
            add_exchange_entries(basis, Mode::c, Mode::spin, triplets);
            add_exchange_entries(basis, Mode::spin, Mode::c, triplets);
            break;
        case BilinearKind::num_a:
            add_exchange_entries(basis, Mode::a, Mode::a, triplets);
            break;
        case BilinearKind::num_b:
            add_exchange_entries(basis, Mode::b, Mode::b, triplets);
            break;
        case BilinearKind::num_c:
            add_exchange_entries(basis, Mode::c, Mode::c, triplets);
            break;
        case BilinearKind::sz_c:
            for (std::size_t i = 0; i < basis.size(); ++i)
                triplets.emplace_back(static_cast<int>(i), static_cast<int>(i),
                                      cplx(basis.state(i).sz(), 0.0));
            break;
    }
    return assemble(basis, triplets);
}

Eigen::VectorXcd basis_vector(const ConservedBasis& basis, const FockState& s) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
    v[static_cast<Eigen::Index>(basis.index_of(s))] = 1.0;
    return v;
}

}  // namespace qstirap
