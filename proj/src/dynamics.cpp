#include "qstirap/dynamics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

#include "qstirap/otoc.hpp"
#include "qstirap/parallel.hpp"

namespace qstirap {

Eigen::VectorXcd build_dark_state(const ModelParams& p, double t_tilde,
                                  const ConservedBasis& basis) {
    const Pulses j = pulse_values(p, t_tilde);
    const double hyp = std::hypot(j.j1, j.j2);
    const double cos_t = j.j2 / hyp;
    const double sin_t = j.j1 / hyp;
    const int n = basis.total_excitation();
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
    for (int k = 0; k <= n; ++k) {
        // sqrt(C(n,k)) cos^{n-k} (-sin)^k on |n-k, 0, k, down>
        const double sqrt_binom = std::exp(
            0.5 * (std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
        const double amp =
            sqrt_binom * std::pow(cos_t, n - k) * std::pow(-sin_t, k);
        psi[static_cast<Eigen::Index>(basis.index_of({n - k, 0, k, Qubit::down}))] = amp;
    }
    psi.normalize();
    return psi;
}

void SweepConfig::validate() const {
    params.validate();
    if (rate <= 0.0) throw InvalidArgument("SweepConfig: rate must be positive");
    if (!(t_end >= t_start)) throw InvalidArgument("SweepConfig: span must be increasing");
    if (store_stride < 1 || obs_stride < 1)
        throw InvalidArgument("SweepConfig: strides must be >= 1");
    if (step_scale <= 0.0 || step_ref_rate <= 0.0)
        throw InvalidArgument("SweepConfig: step parameters must be positive");
}

namespace {

// y = exp(-i h H) v through the Lanczos subspace, accurate to ~1e-12 relative.
// H is applied through the model at the frozen pulse clock t~.
class LanczosExponential {
  public:
    LanczosExponential(const Model& model, Eigen::Index dim)
        : model_(model),
          max_krylov_(std::min<Eigen::Index>(dim, 90)),
          basis_(dim, max_krylov_ + 1),
          alpha_(max_krylov_),
          beta_(max_krylov_) {}

    Eigen::VectorXcd apply(double t_tilde, double h, const Eigen::VectorXcd& v) {
        const double nrm = v.norm();
        if (nrm == 0.0) return v;
        basis_.col(0) = v / nrm;
        int k = 0;
        bool breakdown = false;
        Eigen::VectorXcd result;
        double scale = 0.0;
        while (k < max_krylov_) {
            Eigen::VectorXcd w = model_.apply_hamiltonian(t_tilde, basis_.col(k));
            if (k > 0) w -= beta_[k - 1] * basis_.col(k - 1);
            alpha_[k] = w.dot(basis_.col(k)).real();
            w -= alpha_[k] * basis_.col(k);
            beta_[k] = w.norm();
            scale = std::max(scale, std::abs(alpha_[k]) + beta_[k]);
            ++k;
            if (beta_[k - 1] < 1e-14 * std::max(scale, 1.0)) {
                breakdown = true;  // exact invariant subspace
                break;
            }
            basis_.col(k) = w / beta_[k - 1];
            if (k >= 4 && k % 2 == 0 && krylov_error(k, h) < 1e-13) break;
        }
        if (!breakdown && k == max_krylov_ && krylov_error(k, h) >= 1e-13) {
            // Krylov space exhausted; split the step.
            return apply(t_tilde, 0.5 * h, apply(t_tilde, 0.5 * h, v));
        }
        return nrm * (basis_.leftCols(k) * exp_tridiag(k, h));
    }

  private:
    // exp(-i h T_k) e_1 for the current tridiagonal projection.
    Eigen::VectorXcd exp_tridiag(int k, double h) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
        solver.computeFromTridiagonal(alpha_.head(k), beta_.head(k - 1));
        const Eigen::VectorXd& theta = solver.eigenvalues();
        const Eigen::MatrixXd& u = solver.eigenvectors();
        Eigen::VectorXcd phases(k);
        for (int i = 0; i < k; ++i) phases[i] = std::polar(1.0, -h * theta[i]);
        return u.cast<cplx>() * (phases.array() * u.row(0).transpose().cast<cplx>().array()).matrix();
    }

    double krylov_error(int k, double h) {
        const Eigen::VectorXcd y = exp_tridiag(k, h);
        return beta_[k - 1] * std::abs(y[k - 1]);
    }

    const Model& model_;
    Eigen::Index max_krylov_;
    Eigen::MatrixXcd basis_;
    Eigen::VectorXd alpha_;
    Eigen::VectorXd beta_;
};

Eigen::VectorXcd dense_exponential_step(const Model& model, double t_tilde, double h,
                                        const Eigen::VectorXcd& v) {
    const Eigen::MatrixXd ham = model.hamiltonian(t_tilde).dense_real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ham);
    if (solver.info() != Eigen::Success)
        throw NumericError("evolve: eigensolver failed at t~ = " + std::to_string(t_tilde));
    const Eigen::VectorXcd coeffs = solver.eigenvectors().transpose().cast<cplx>() * v;
    Eigen::VectorXcd rotated(coeffs.size());
    for (Eigen::Index i = 0; i < coeffs.size(); ++i)
        rotated[i] = coeffs[i] * std::polar(1.0, -h * solver.eigenvalues()[i]);
    return solver.eigenvectors().cast<cplx>() * rotated;
}

double diagonal_expectation(const Eigen::VectorXd& diag, const Eigen::VectorXcd& psi) {
    return (diag.array() * psi.array().abs2()).sum();
}

}  // namespace

SweepResult evolve(const Model& model, const SweepConfig& config, const Eigen::VectorXcd& psi0) {
    config.validate();
    if (psi0.size() != model.dim())
        throw InvalidArgument("evolve: initial state does not match the basis dimension");
    if (std::abs(psi0.norm() - 1.0) > 1e-9)
        throw InvalidArgument("evolve: initial state must be normalized");

    const double span = config.t_end - config.t_start;
    const long n_steps =
        span > 0.0 ? std::max(1L, std::lround(span / config.dt_tilde())) : 0L;
    const double dt_tilde = n_steps > 0 ? span / double(n_steps) : 0.0;
    const double h = dt_tilde / (config.rate * model.params().K);  // physical step

    LanczosExponential lanczos(model, model.dim());
    Eigen::VectorXcd psi = psi0;

    SweepResult result;
    auto record = [&](long step) {
        const double t_tilde = config.t_start + double(step) * dt_tilde;
        result.kt.push_back(double(step) * h * model.params().K);
        result.t_tilde.push_back(t_tilde);
        result.n_a.push_back(diagonal_expectation(model.number_diagonal(Mode::a), psi));
        result.n_b.push_back(diagonal_expectation(model.number_diagonal(Mode::b), psi));
        result.n_c.push_back(diagonal_expectation(model.number_diagonal(Mode::c), psi));
        result.s_z.push_back(diagonal_expectation(model.sz_diagonal(), psi));
        result.norm.push_back(psi.norm());
    };
    auto snapshot = [&](long step) {
        const double t_tilde = config.t_start + double(step) * dt_tilde;
        result.snapshots.push_back({double(step) * h * model.params().K, t_tilde, psi});
    };

    record(0);
    snapshot(0);
    for (long step = 0; step < n_steps; ++step) {
        const double t_mid = config.t_start + (double(step) + 0.5) * dt_tilde;
        psi = config.propagator == Propagator::lanczos
                  ? lanczos.apply(t_mid, h, psi)
                  : dense_exponential_step(model, t_mid, h, psi);
        const long done = step + 1;
        if (done % config.obs_stride == 0 || done == n_steps) record(done);
        if (done % config.store_stride == 0 || done == n_steps) snapshot(done);
    }
    result.final_state = psi;
    result.final_nc = diagonal_expectation(model.number_diagonal(Mode::c), psi);
    return result;
}

SweepResult evolve_checked(const Model& model, const SweepConfig& config,
                           const Eigen::VectorXcd& psi0) {
    SweepResult coarse = evolve(model, config, psi0);
    SweepConfig half = config;
    half.step_scale *= 0.5;
    SweepResult fine = evolve(model, half, psi0);
    if (std::abs(fine.final_nc - coarse.final_nc) <= 1e-6) return fine;
    SweepConfig quarter = half;
    quarter.step_scale *= 0.5;
    SweepResult finest = evolve(model, quarter, psi0);
    if (std::abs(finest.final_nc - fine.final_nc) <= 1e-6) return finest;
    throw NumericError("evolve_checked: step-size rejection, final <n_c> still moving by " +
                       std::to_string(std::abs(finest.final_nc - fine.final_nc)));
}

Eigen::VectorXd adiabatic_projection(const Eigen::VectorXcd& psi, const SpectrumSlice& slice) {
    if (psi.size() != slice.vectors.rows())
        throw InvalidArgument("adiabatic_projection: dimension mismatch");
    return (slice.vectors.transpose().cast<cplx>() * psi).cwiseAbs2();
}

double participation_number(const Eigen::VectorXd& probabilities) {
    const double total = probabilities.sum();
    if (std::abs(total - 1.0) > 1e-6)
        throw InvalidArgument("participation_number: probabilities must sum to 1");
    return 1.0 / probabilities.squaredNorm();
}

Eigen::Matrix4cd single_particle_density(const Model& model, const Eigen::VectorXcd& psi) {
    if (psi.size() != model.dim())
        throw InvalidArgument("single_particle_density: dimension mismatch");
    Eigen::Matrix4cd rho;
    for (int i = 0; i < 4; ++i) {
        for (int j = i; j < 4; ++j) {
            const cplx v = psi.dot(model.exchange_op(Mode(i), Mode(j)).matrix() * psi);
            rho(i, j) = v;
            rho(j, i) = std::conj(v);
        }
    }
    rho /= double(model.params().N);
    return rho;
}

double single_particle_purity(const Model& model, const Eigen::VectorXcd& psi) {
    const Eigen::Matrix4cd rho = single_particle_density(model, psi);
    return (rho * rho).trace().real();
}

std::vector<PurityPoint> purity_scan(const Model& model, std::span<const double> t_grid,
                                     const Branch& ssp_branch, int threads) {
    std::vector<PurityPoint> points;
    points.reserve(t_grid.size());
    Eigen::VectorXcd followed;
    spectrum_scan(model, t_grid, threads, [&](const SpectrumSlice& slice) {
        const SPSolution sol =
            solve_sp(model.params(), slice.t_tilde, ssp_branch.at_time(slice.t_tilde).state,
                     ssp_branch.at_time(slice.t_tilde).mu);
        // Energy anchors the candidate set; continuity with the previously
        // selected vector breaks the choice among them. A bare nearest-energy
        // pick grabs spectator levels crossing the branch at isolated points.
        int nu;
        if (followed.size() == 0)
            nu = select_nearest_eigenstate(slice, sol.energy);
        else
            nu = select_branch_eigenstate(slice, sol.energy, followed, 5);
        followed = slice.vectors.col(nu).cast<cplx>();
        points.push_back({slice.t_tilde, single_particle_purity(model, followed), nu, false});
    });
    return points;
}

std::vector<PurityPoint> purity_scan_tracked(const Model& model, std::span<const double> t_grid,
                                             int seed_index, int threads) {
    std::vector<PurityPoint> points;
    points.reserve(t_grid.size());
    BranchTracker tracker(0);
    bool seeded = false;
    spectrum_scan(model, t_grid, threads, [&](const SpectrumSlice& slice) {
        if (!seeded) {
            int seed = seed_index;
            if (seed < 0) {
                const Eigen::VectorXcd dark =
                    build_dark_state(model.params(), slice.t_tilde, model.basis());
                const Eigen::VectorXd overlaps =
                    (slice.vectors.transpose().cast<cplx>() * dark).cwiseAbs2();
                Eigen::Index best = 0;
                overlaps.maxCoeff(&best);
                seed = static_cast<int>(best);
            }
            tracker = BranchTracker(seed);
            seeded = true;
        }
        tracker.feed(slice);
        const BranchPoint& bp = tracker.route().back();
        const Eigen::VectorXcd state = tracker.followed().cast<cplx>();
        points.push_back(
            {slice.t_tilde, single_particle_purity(model, state), bp.index, bp.ambiguous});
    });
    return points;
}

std::vector<PurityPoint> purity_scan_dark(const Model& model, std::span<const double> t_grid) {
    std::vector<PurityPoint> points;
    points.reserve(t_grid.size());
    for (double t : t_grid) {
        const Eigen::VectorXcd dark = build_dark_state(model.params(), t, model.basis());
        points.push_back({t, single_particle_purity(model, dark), -1, false});
    }
    return points;
}

double efficiency(const Model& model, const SweepConfig& config) {
    const Eigen::VectorXcd psi0 =
        basis_vector(model.basis(), {model.params().N, 0, 0, Qubit::down});
    const SweepResult result = evolve(model, config, psi0);
    return result.final_nc / double(model.params().N);
}

ModelParams ScalingFamily::params_for(int total_excitation) const {
    ModelParams p;
    p.N = total_excitation;
    p.g_c = gc_sqrt_n / std::sqrt(double(total_excitation));
    p.delta = delta_n / double(total_excitation);
    p.pulse_amp = amp_n / double(total_excitation);
    return p;
}

EfficiencyTable efficiency_vs_n(const ScalingFamily& family, std::span<const int> n_values,
                                std::span<const double> rates, const SweepConfig& base,
                                int threads) {
    EfficiencyTable table;
    table.cells.resize(n_values.size() * rates.size());
    parallel_for(table.cells.size(), threads, [&](std::size_t k) {
        const int n = n_values[k / rates.size()];
        const double rate = rates[k % rates.size()];
        EfficiencyCell& cell = table.cells[k];
        cell.N = n;
        cell.rate = rate;
        try {
            SweepConfig config = base;
            config.params = family.params_for(n);
            config.rate = rate;
            cell.efficiency = efficiency(Model(config.params), config);
            cell.ok = true;
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
    });
    for (const auto& cell : table.cells)
        if (!cell.ok) table.complete = false;
    return table;
}

}  // namespace qstirap
