#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "qstirap/hamiltonian.hpp"
#include "qstirap/semiclassical.hpp"

namespace qstirap {

/// Two-mode coherent dark state (1/sqrt(N!)) [cosT a† - sinT c†]^N |vac> with
/// cosT = J2 / sqrt(J1^2 + J2^2); exact zero-energy eigenstate for g_c = 0.
Eigen::VectorXcd build_dark_state(const ModelParams& p, double t_tilde,
                                  const ConservedBasis& basis);

enum class Propagator { lanczos, dense };

/// Real-time sweep configuration. The pulse clock advances as t~ = rate * K t;
/// the propagator applies the exact midpoint-frozen exponential per step, with
/// the step chosen so that d(t~) = step_scale * step_ref_rate per step.
struct SweepConfig {
    ModelParams params;
    double rate = 0.003;       // 1/tau, units K
    double t_start = 0.0;      // parametric time span
    double t_end = 6.0606;
    int store_stride = 100;    // steps between full-state snapshots
    int obs_stride = 10;       // steps between recorded observables
    double step_scale = 0.05;  // K h at the reference rate
    double step_ref_rate = 0.003;
    Propagator propagator = Propagator::lanczos;

    void validate() const;
    double dt_tilde() const { return step_scale * step_ref_rate; }
};

struct SweepResult {
    std::vector<double> kt;        // K t at recorded points
    std::vector<double> t_tilde;
    std::vector<double> n_a, n_b, n_c, s_z;
    std::vector<double> norm;

    struct Snapshot {
        double kt = 0.0;
        double t_tilde = 0.0;
        Eigen::VectorXcd psi;
    };
    std::vector<Snapshot> snapshots;

    Eigen::VectorXcd final_state;
    double final_nc = 0.0;
};

/// Schrödinger sweep i dX/dt = H(t~) X from a normalized initial state.
SweepResult evolve(const Model& model, const SweepConfig& config,
                   const Eigen::VectorXcd& psi0);

/// Runs the sweep at the configured step and at half the step, refining once
/// more if needed; throws NumericError when consecutive refinements still move
/// the final <n_c> by more than 1e-6.
SweepResult evolve_checked(const Model& model, const SweepConfig& config,
                           const Eigen::VectorXcd& psi0);

/// p_nu = |<nu|psi>|^2 over a slice's eigenvectors.
Eigen::VectorXd adiabatic_projection(const Eigen::VectorXcd& psi, const SpectrumSlice& slice);

/// eta = 1 / sum_nu p_nu^2, between 1 and the dimension.
double participation_number(const Eigen::VectorXd& probabilities);

/// One-particle reduced density matrix rho_{ij} = <psi|A_i† A_j|psi> / N over
/// modes {a, b, c, qubit}; Hermitian, PSD, unit trace.
Eigen::Matrix4cd single_particle_density(const Model& model, const Eigen::VectorXcd& psi);

/// gamma = Tr(rho^2), between 1/4 and 1.
double single_particle_purity(const Model& model, const Eigen::VectorXcd& psi);

struct PurityPoint {
    double t_tilde = 0.0;
    double gamma = 0.0;
    int index = -1;          // eigenstate used; -1 for the analytic dark state
    bool ambiguous = false;  // tracking ambiguity at this grid point
};

/// Purity of the eigenstate with energy nearest E_SSP at each grid point (the
/// route the stationary-point branch singles out). Recovers the dark-like
/// state on both sides of the chaotic window.
std::vector<PurityPoint> purity_scan(const Model& model, std::span<const double> t_grid,
                                     const Branch& ssp_branch, int threads = 1);

/// Purity along the diabatic route tracked by eigenvector overlap from
/// `seed_index` (negative: seed by maximal dark-state overlap at the first
/// grid point). Ambiguity flags propagate from the tracker.
std::vector<PurityPoint> purity_scan_tracked(const Model& model,
                                             std::span<const double> t_grid,
                                             int seed_index = -1, int threads = 1);

/// Purity of the analytic dark state on the grid (the exact g_c = 0 route).
std::vector<PurityPoint> purity_scan_dark(const Model& model, std::span<const double> t_grid);

/// Transfer efficiency P = <n_c>_end / N for a sweep from |N,0,0,down>.
double efficiency(const Model& model, const SweepConfig& config);

/// N-scaling family with g_c sqrt(N), delta N and pulse-amplitude N held fixed.
struct ScalingFamily {
    double gc_sqrt_n = 0.8944;  // units K
    double delta_n = 10.0;      // units K
    double amp_n = 20.0;        // units K

    ModelParams params_for(int total_excitation) const;
};

struct EfficiencyCell {
    int N = 0;
    double rate = 0.0;
    double efficiency = 0.0;
    bool ok = false;
    std::string error;
};

struct EfficiencyTable {
    std::vector<EfficiencyCell> cells;  // deterministic (N, rate) order
    bool complete = true;
};

EfficiencyTable efficiency_vs_n(const ScalingFamily& family, std::span<const int> n_values,
                                std::span<const double> rates, const SweepConfig& base,
                                int threads = 1);

}  // namespace qstirap
