#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <memory>
#include <vector>

#include "qstirap/common.hpp"

namespace qstirap {

enum class Qubit : int { down = 0, up = 1 };

/// One basis ket |n_a, n_b, n_c, qubit> of the three-cavity chain.
struct FockState {
    int n_a = 0;
    int n_b = 0;
    int n_c = 0;
    Qubit qubit = Qubit::down;

    double sz() const { return qubit == Qubit::up ? 0.5 : -0.5; }
    int excitation() const { return n_a + n_b + n_c + (qubit == Qubit::up ? 1 : 0); }
    bool operator==(const FockState&) const = default;
};

inline constexpr int kDefaultBasisCap = 200;

/// All Fock states with fixed total excitation N = n_a + n_b + n_c + (s_z + 1/2),
/// ordered lexicographically in (qubit, n_a, n_b); n_c follows from conservation.
/// Size is (N+1)^2. Immutable after construction.
class ConservedBasis {
  public:
    explicit ConservedBasis(int total_excitation, int safety_cap = kDefaultBasisCap);

    int total_excitation() const { return n_total_; }
    std::size_t size() const { return states_.size(); }
    const FockState& state(std::size_t index) const { return states_[index]; }
    const std::vector<FockState>& states() const { return states_; }

    /// Position of a state in the ordering; throws if the state does not belong.
    std::size_t index_of(const FockState& s) const;
    bool contains(const FockState& s) const;

  private:
    int n_total_ = 0;
    std::vector<FockState> states_;
};

inline ConservedBasis enumerate_basis(int total_excitation, int safety_cap = kDefaultBasisCap) {
    return ConservedBasis(total_excitation, safety_cap);
}

/// Single-mode labels; `spin` is the qubit of cavity c with ladder operator s^-.
enum class Mode : int { a = 0, b = 1, c = 2, spin = 3 };

/// Excitation-conserving bilinears appearing in the Hamiltonian.
enum class BilinearKind {
    hop_ab,  // a†b + b†a
    hop_bc,  // b†c + c†b
    jc_c,    // c†s⁻ + s⁺c
    num_a,
    num_b,
    num_c,
    sz_c,
};

/// Sparse operator on a ConservedBasis. Every built operator maps the basis
/// into itself (conserves N). The named BilinearKind operators are Hermitian;
/// a bare exchange A_i†A_j with i != j is not (its adjoint is exchange(j, i)).
class SparseOperator {
  public:
    using Matrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

    SparseOperator(std::shared_ptr<const ConservedBasis> basis, Matrix mat);

    Eigen::Index dim() const { return mat_.rows(); }
    const ConservedBasis& basis() const { return *basis_; }
    const Matrix& matrix() const { return mat_; }

    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;

    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(mat_); }
    /// Real part of the dense matrix; throws if any entry has an imaginary part.
    Eigen::MatrixXd dense_real() const;

    /// max_ij |O_ij - conj(O_ji)|
    double hermiticity_defect() const;

  private:
    std::shared_ptr<const ConservedBasis> basis_;
    Matrix mat_;
};

SparseOperator build_bilinear(const ConservedBasis& basis, BilinearKind kind);

/// A_i† A_j with A in {a, b, c, s⁻}; the 16 pairs feeding the one-particle
/// density matrix.
SparseOperator build_exchange(const ConservedBasis& basis, Mode create, Mode annihilate);

inline Eigen::VectorXcd apply(const SparseOperator& op, const Eigen::VectorXcd& v) {
    return op.apply(v);
}

/// Basis vector for a single Fock state.
Eigen::VectorXcd basis_vector(const ConservedBasis& basis, const FockState& s);

}  // namespace qstirap
