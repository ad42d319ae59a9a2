#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "qstirap/hamiltonian.hpp"

namespace qstirap {

/// Heisenberg-picture matrix of A at time t in the energy eigenbasis:
/// A(t)_{jk} = exp(i (E_j - E_k) t) (V† A V)_{jk}. Time in units 1/K.
Eigen::MatrixXcd heisenberg_matrix(const SparseOperator& op, const SpectrumSlice& slice,
                                   double t);

struct OTOCSeries {
    double t_tilde = 0.0;
    int nu = -1;          // eigenstate index; -1 for thermal series
    double beta = -1.0;   // inverse temperature; < 0 for microcanonical
    std::vector<double> times;   // units 1/K
    std::vector<double> values;  // >= 0
};

/// Microcanonical OTOC O_nu(t) = sum_nu' |<nu|[n_a(t), n_c(0)]|nu'>|^2 with the
/// Hamiltonian frozen at t~.
OTOCSeries microcanonical_otoc(const Model& model, double t_tilde, int nu,
                               std::span<const double> times);
OTOCSeries microcanonical_otoc(const Model& model, const SpectrumSlice& slice, int nu,
                               std::span<const double> times);

/// Thermal OTOC Z^{-1} sum_nu exp(-beta E_nu) O_nu(t); energies are shifted by
/// min(E) before exponentiation.
OTOCSeries thermal_otoc(const Model& model, double t_tilde, double beta,
                        std::span<const double> times);

struct GrowthFitOptions {
    double floor = 1e-14;        // values below this are ignored
    double rms_tol = 0.35;       // max RMS deviation of log O from a line
    double min_rise = 3.0;       // required growth across the window, in nats
    double min_duration = 2.0;   // required window length, units 1/K
    double plateau_factor = 0.4; // post-window level vs window-end value
};

struct GrowthFit {
    bool has_window = false;
    double t_start = 0.0;
    double t_end = 0.0;
    double rate = 0.0;        // slope of log O per unit Kt, units K
    double saturation = 0.0;  // mean of the post-window plateau
};

/// Detects the longest pre-saturation window where log O grows linearly and
/// fits the exponential rate; returns rate 0 with has_window = false when the
/// series never grows.
GrowthFit fit_growth(const OTOCSeries& series, const GrowthFitOptions& options = {});

/// Index of the eigenstate with energy nearest e_target; ties are broken
/// toward larger overlap with `reference` when provided.
int select_nearest_eigenstate(const SpectrumSlice& slice, double e_target,
                              const Eigen::VectorXd* reference = nullptr);

/// Among the `candidates` eigenstates nearest e_target in energy, the one with
/// maximal |<nu|reference>|^2. Robust against spectator levels crossing the
/// target energy at isolated points.
int select_branch_eigenstate(const SpectrumSlice& slice, double e_target,
                             const Eigen::VectorXcd& reference, int candidates = 7);

}  // namespace qstirap
