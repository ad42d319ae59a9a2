#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "qstirap/fock.hpp"

namespace qstirap {

/// Model parameters. All energies are in units of the coupling scale K and
/// parametric time t~ is dimensionless; physical time carries units 1/K.
struct ModelParams {
    int N = 0;               // total excitation number
    double K = 1.0;          // coupling scale (energy unit)
    double delta = 0.5;      // central-cavity detuning, units K
    double g_c = 0.0;        // Jaynes-Cummings coupling of cavity c, units K
    double pulse_amp = 1.0;  // Gaussian pulse amplitude, units K
    double t1 = 3.697;       // Stokes pulse center (t1 > t2 fixes the ordering)
    double t2 = 2.4242;      // pump pulse center
    int basis_cap = kDefaultBasisCap;

    void validate() const;
};

struct Pulses {
    double j1 = 0.0;
    double j2 = 0.0;
};

/// J_i(t~) = amp * K * exp(-(t~ - t_i)^2)
Pulses pulse_values(const ModelParams& p, double t_tilde);
/// dJ_i/dt~ = -2 (t~ - t_i) J_i(t~)
Pulses pulse_derivatives(const ModelParams& p, double t_tilde);

/// Owns the conserved basis plus the cached operator terms of H(t~) and the
/// observables. Immutable after construction; safe to share across threads.
class Model {
  public:
    explicit Model(ModelParams params);

    const ModelParams& params() const { return params_; }
    const ConservedBasis& basis() const { return basis_; }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(basis_.size()); }

    /// H(t~) = K*(delta n_b + g_c jc_c) - J1 hop_ab - J2 hop_bc
    SparseOperator hamiltonian(double t_tilde) const;
    /// dH/dt~ = -J1' hop_ab - J2' hop_bc
    SparseOperator hamiltonian_derivative(double t_tilde) const;

    /// y = H(t~) v without assembling H.
    Eigen::VectorXcd apply_hamiltonian(double t_tilde, const Eigen::VectorXcd& v) const;

    const SparseOperator& hop_ab() const { return hop_ab_; }
    const SparseOperator& hop_bc() const { return hop_bc_; }
    const SparseOperator& jc_c() const { return jc_c_; }
    const SparseOperator& number_op(Mode m) const;
    const SparseOperator& sz_op() const { return sz_; }
    /// A_i† A_j, cached for all 16 mode pairs.
    const SparseOperator& exchange_op(Mode create, Mode annihilate) const;

    /// Diagonal of a number operator in the Fock ordering (for fast expectations).
    const Eigen::VectorXd& number_diagonal(Mode m) const;
    const Eigen::VectorXd& sz_diagonal() const { return diag_sz_; }

  private:
    ModelParams params_;
    ConservedBasis basis_;
    SparseOperator hop_ab_, hop_bc_, jc_c_, num_a_, num_b_, num_c_, sz_;
    std::vector<SparseOperator> exchange_;  // row-major 4x4
    Eigen::VectorXd diag_na_, diag_nb_, diag_nc_, diag_sz_;
};

/// Eigendecomposition of H(t~). The model's couplings are all real, so H is
/// real symmetric and the eigenvectors are stored as a real orthogonal matrix.
struct SpectrumSlice {
    double t_tilde = 0.0;
    Eigen::VectorXd energies;  // ascending
    Eigen::MatrixXd vectors;   // columns, gauge fixed
};

/// Dense eigendecomposition with deterministic sign gauge (largest-magnitude
/// component of each column made positive).
SpectrumSlice diagonalize(const Model& model, double t_tilde);

/// Re-gauges a slice: sign fix per column and, given the previous slice on a
/// fine grid, continuity rotation inside degenerate clusters (|dE| < 1e-10 K).
void gauge_fix(SpectrumSlice& slice, const SpectrumSlice* previous, double cluster_tol);

/// Diagonalizes the grid in order, gauge-fixing each slice against the one
/// before, and hands every slice to `sink`. Eigensolves may run on `threads`
/// workers; the sink is always called sequentially in grid order.
void spectrum_scan(const Model& model, std::span<const double> t_grid, int threads,
                   const std::function<void(const SpectrumSlice&)>& sink);

std::vector<SpectrumSlice> spectrum_scan_collect(const Model& model,
                                                 std::span<const double> t_grid,
                                                 int threads = 1);

struct BranchPoint {
    double t_tilde = 0.0;
    int index = 0;       // eigenstate index (ascending-energy position)
    double energy = 0.0;
    double overlap = 1.0;  // |<succ|followed>|^2 of the chosen successor
    bool ambiguous = false;  // max overlap < 0.5
};

/// Follows a diabatic route through consecutive slices by maximal eigenvector
/// overlap. Feed slices in grid order.
class BranchTracker {
  public:
    explicit BranchTracker(int seed_index);
    void feed(const SpectrumSlice& slice);
    const std::vector<BranchPoint>& route() const { return route_; }
    const Eigen::VectorXd& followed() const { return followed_; }

  private:
    int seed_index_;
    Eigen::VectorXd followed_;
    std::vector<BranchPoint> route_;
};

std::vector<BranchPoint> track_branch(std::span<const SpectrumSlice> slices,
                                      int seed_index);

/// Diabaticity data of an avoided crossing between two (sorted-index) branches:
/// the gap d = E_nu - E_nu' at closest approach and the pulse-drive coupling
/// sigma = |<nu| dH/dt~ |nu'>| there. The Landau-Zener criterion compares the
/// sweep rate 1/tau against d^2/sigma.
struct CrossingMetrics {
    int nu = 0;
    int nu_prime = 0;
    double t_tilde = 0.0;  // location of closest approach
    double gap = 0.0;
    double sigma = 0.0;
    double ratio = 0.0;  // gap^2 / sigma; +inf when sigma == 0
    bool degenerate = false;
};

CrossingMetrics crossing_metrics(const Model& model, std::span<const SpectrumSlice> slices,
                                 int nu, int nu_prime);

}  // namespace qstirap
