#include "qstirap/hamiltonian.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <condition_variable>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "qstirap/parallel.hpp"

namespace qstirap {

void ModelParams::validate() const {
    if (N < 1) throw InvalidArgument("ModelParams: N must be >= 1");
    if (K <= 0.0) throw InvalidArgument("ModelParams: K must be positive");
    if (pulse_amp <= 0.0) throw InvalidArgument("ModelParams: pulse_amp must be positive");
    if (!(t1 > t2)) throw InvalidArgument("ModelParams: pulse centers must satisfy t1 > t2");
    if (g_c < 0.0) throw InvalidArgument("ModelParams: g_c must be non-negative");
}

Pulses pulse_values(const ModelParams& p, double t_tilde) {
    const double amp = p.pulse_amp * p.K;
    return {amp * std::exp(-(t_tilde - p.t1) * (t_tilde - p.t1)),
            amp * std::exp(-(t_tilde - p.t2) * (t_tilde - p.t2))};
}

Pulses pulse_derivatives(const ModelParams& p, double t_tilde) {
    const Pulses j = pulse_values(p, t_tilde);
    return {-2.0 * (t_tilde - p.t1) * j.j1, -2.0 * (t_tilde - p.t2) * j.j2};
}

namespace {

Eigen::VectorXd diagonal_of(const ConservedBasis& basis,
                            const std::function<double(const FockState&)>& f) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) d[static_cast<Eigen::Index>(i)] = f(basis.state(i));
    return d;
}

ModelParams validated(ModelParams p) {
    p.validate();
    return p;
}

}  // namespace

Model::Model(ModelParams params)
    : params_(validated(std::move(params))),
      basis_(params_.N, params_.basis_cap),
      hop_ab_(build_bilinear(basis_, BilinearKind::hop_ab)),
      hop_bc_(build_bilinear(basis_, BilinearKind::hop_bc)),
      jc_c_(build_bilinear(basis_, BilinearKind::jc_c)),
      num_a_(build_bilinear(basis_, BilinearKind::num_a)),
      num_b_(build_bilinear(basis_, BilinearKind::num_b)),
      num_c_(build_bilinear(basis_, BilinearKind::num_c)),
      sz_(build_bilinear(basis_, BilinearKind::sz_c)),
      diag_na_(diagonal_of(basis_, [](const FockState& s) { return double(s.n_a); })),
      diag_nb_(diagonal_of(basis_, [](const FockState& s) { return double(s.n_b); })),
      diag_nc_(diagonal_of(basis_, [](const FockState& s) { return double(s.n_c); })),
      diag_sz_(diagonal_of(basis_, [](const FockState& s) { return s.sz(); })) {
    exchange_.reserve(16);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            exchange_.push_back(build_exchange(basis_, Mode(i), Mode(j)));
}

const SparseOperator& Model::number_op(Mode m) const {
    switch (m) {
        case Mode::a: return num_a_;
        case Mode::b: return num_b_;
        case Mode::c: return num_c_;
        default: throw InvalidArgument("Model::number_op: no number operator for the qubit");
    }
}

const SparseOperator& Model::exchange_op(Mode create, Mode annihilate) const {
    return exchange_[static_cast<std::size_t>(create) * 4 + static_cast<std::size_t>(annihilate)];
}

const Eigen::VectorXd& Model::number_diagonal(Mode m) const {
    switch (m) {
        case Mode::a: return diag_na_;
        case Mode::b: return diag_nb_;
        case Mode::c: return diag_nc_;
        default: throw InvalidArgument("Model::number_diagonal: no number operator for the qubit");
    }
}

SparseOperator Model::hamiltonian(double t_tilde) const {
    const Pulses j = pulse_values(params_, t_tilde);
    SparseOperator::Matrix mat = params_.K * params_.delta * num_b_.matrix() +
                                 params_.K * params_.g_c * jc_c_.matrix() -
                                 j.j1 * hop_ab_.matrix() - j.j2 * hop_bc_.matrix();
    mat.makeCompressed();
    return SparseOperator(std::make_shared<const ConservedBasis>(basis_), std::move(mat));
}

SparseOperator Model::hamiltonian_derivative(double t_tilde) const {
    const Pulses dj = pulse_derivatives(params_, t_tilde);
    SparseOperator::Matrix mat = -dj.j1 * hop_ab_.matrix() - dj.j2 * hop_bc_.matrix();
    mat.makeCompressed();
    return SparseOperator(std::make_shared<const ConservedBasis>(basis_), std::move(mat));
}

Eigen::VectorXcd Model::apply_hamiltonian(double t_tilde, const Eigen::VectorXcd& v) const {
    const Pulses j = pulse_values(params_, t_tilde);
    Eigen::VectorXcd y = (params_.K * params_.delta) * (diag_nb_.array() * v.array()).matrix();
    if (params_.g_c != 0.0) y.noalias() += (params_.K * params_.g_c) * (jc_c_.matrix() * v);
    y.noalias() -= j.j1 * (hop_ab_.matrix() * v);
    y.noalias() -= j.j2 * (hop_bc_.matrix() * v);
    return y;
}

namespace {

constexpr double kDegenerateClusterTol = 1e-10;

void sign_fix_column(Eigen::Ref<Eigen::VectorXd> col) {
    Eigen::Index imax = 0;
    col.cwiseAbs().maxCoeff(&imax);
    if (col[imax] < 0.0) col = -col;
}

SpectrumSlice diagonalize_raw(const Model& model, double t_tilde) {
    Eigen::MatrixXd h = model.hamiltonian(t_tilde).dense_real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success)
        throw NumericError("diagonalize: eigensolver failed at t~ = " + std::to_string(t_tilde));
    SpectrumSlice slice;
    slice.t_tilde = t_tilde;
    slice.energies = solver.eigenvalues();
    slice.vectors = solver.eigenvectors();
    return slice;
}

}  // namespace

void gauge_fix(SpectrumSlice& slice, const SpectrumSlice* previous, double cluster_tol) {
    const Eigen::Index d = slice.energies.size();
    if (previous != nullptr) {
        // Rotate each degenerate cluster to maximize continuity with the
        // previous slice's vectors at the same index positions.
        Eigen::Index start = 0;
        while (start < d) {
            Eigen::Index end = start + 1;
            while (end < d && slice.energies[end] - slice.energies[end - 1] < cluster_tol) ++end;
            if (end - start > 1) {
                auto block = slice.vectors.middleCols(start, end - start);
                Eigen::MatrixXd target =
                    block * (block.transpose() * previous->vectors.middleCols(start, end - start));
                Eigen::HouseholderQR<Eigen::MatrixXd> qr(target);
                Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, end - start);
                // Fix the QR sign convention so the rotation is deterministic.
                Eigen::VectorXd rdiag = qr.matrixQR().diagonal().head(end - start);
                for (Eigen::Index k = 0; k < end - start; ++k)
                    if (rdiag[k] < 0.0) q.col(k) = -q.col(k);
                block = q;
            }
            start = end;
        }
    }
    for (Eigen::Index k = 0; k < d; ++k) sign_fix_column(slice.vectors.col(k));
}

SpectrumSlice diagonalize(const Model& model, double t_tilde) {
    SpectrumSlice slice = diagonalize_raw(model, t_tilde);
    gauge_fix(slice, nullptr, kDegenerateClusterTol);
    return slice;
}

void spectrum_scan(const Model& model, std::span<const double> t_grid, int threads,
                   const std::function<void(const SpectrumSlice&)>& sink) {
    for (std::size_t k = 1; k < t_grid.size(); ++k)
        if (!(t_grid[k] > t_grid[k - 1]))
            throw InvalidArgument("spectrum_scan: t_grid must be strictly increasing");
    const std::size_t n = t_grid.size();
    if (n == 0) return;

    SpectrumSlice previous;
    bool have_previous = false;
    auto consume = [&](SpectrumSlice&& raw) {
        gauge_fix(raw, have_previous ? &previous : nullptr, kDegenerateClusterTol);
        sink(raw);
        previous = std::move(raw);
        have_previous = true;
    };

    if (threads <= 1 || n <= 1) {
        for (std::size_t k = 0; k < n; ++k) consume(diagonalize_raw(model, t_grid[k]));
        return;
    }

    // Workers diagonalize ahead within a bounded window; the caller's thread
    // gauge-fixes and emits strictly in grid order.
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::size_t, SpectrumSlice> ready;
    std::size_t next_to_produce = 0, next_to_consume = 0;
    const std::size_t lookahead = static_cast<std::size_t>(threads) * 2 + 2;
    std::exception_ptr error;

    auto worker = [&] {
        for (;;) {
            std::size_t k;
            {
                std::unique_lock<std::mutex> lock(mu);
                cv.wait(lock, [&] {
                    return error || next_to_produce >= n ||
                           next_to_produce < next_to_consume + lookahead;
                });
                if (error || next_to_produce >= n) return;
                k = next_to_produce++;
            }
            try {
                SpectrumSlice slice = diagonalize_raw(model, t_grid[k]);
                std::lock_guard<std::mutex> lock(mu);
                ready.emplace(k, std::move(slice));
                cv.notify_all();
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!error) error = std::current_exception();
                cv.notify_all();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    const int workers = std::min<std::size_t>(threads, n);
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);

    try {
        while (next_to_consume < n) {
            SpectrumSlice raw;
            {
                std::unique_lock<std::mutex> lock(mu);
                cv.wait(lock, [&] { return error || ready.count(next_to_consume) > 0; });
                if (error) break;
                auto it = ready.find(next_to_consume);
                raw = std::move(it->second);
                ready.erase(it);
                ++next_to_consume;
                cv.notify_all();
            }
            consume(std::move(raw));
        }
    } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        cv.notify_all();
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

std::vector<SpectrumSlice> spectrum_scan_collect(const Model& model,
                                                 std::span<const double> t_grid, int threads) {
    std::vector<SpectrumSlice> out;
    out.reserve(t_grid.size());
    spectrum_scan(model, t_grid, threads,
                  [&](const SpectrumSlice& s) { out.push_back(s); });
    return out;
}

BranchTracker::BranchTracker(int seed_index) : seed_index_(seed_index) {
    if (seed_index < 0) throw InvalidArgument("BranchTracker: seed index must be >= 0");
}

void BranchTracker::feed(const SpectrumSlice& slice) {
    const Eigen::Index d = slice.energies.size();
    if (route_.empty()) {
        if (seed_index_ >= d) throw InvalidArgument("BranchTracker: seed index out of range");
        followed_ = slice.vectors.col(seed_index_);
        route_.push_back({slice.t_tilde, seed_index_, slice.energies[seed_index_], 1.0, false});
        return;
    }
    Eigen::VectorXd overlaps = (slice.vectors.transpose() * followed_).array().square();
    Eigen::Index best = 0;
    const double best_overlap = overlaps.maxCoeff(&best);
    followed_ = slice.vectors.col(best);
    route_.push_back({slice.t_tilde, static_cast<int>(best), slice.energies[best],
                      best_overlap, best_overlap < 0.5});
}

std::vector<BranchPoint> track_branch(std::span<const SpectrumSlice> slices, int seed_index) {
    if (slices.empty()) throw InvalidArgument("track_branch: empty slice list");
    BranchTracker tracker(seed_index);
    for (const SpectrumSlice& s : slices) tracker.feed(s);
    return tracker.route();
}

CrossingMetrics crossing_metrics(const Model& model, std::span<const SpectrumSlice> slices,
                                 int nu, int nu_prime) {
    if (slices.empty()) throw InvalidArgument("crossing_metrics: empty slice list");
    const Eigen::Index d = slices.front().energies.size();
    if (nu < 0 || nu_prime < 0 || nu >= d || nu_prime >= d)
        throw InvalidArgument("crossing_metrics: eigenstate index out of range");

    std::size_t at = 0;
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < slices.size(); ++k) {
        const double g = std::abs(slices[k].energies[nu] - slices[k].energies[nu_prime]);
        if (g < gap) {
            gap = g;
            at = k;
        }
    }

    const SpectrumSlice& slice = slices[at];
    const Eigen::MatrixXd dh = model.hamiltonian_derivative(slice.t_tilde).dense_real();
    const double sigma = std::abs(slice.vectors.col(nu).dot(dh * slice.vectors.col(nu_prime)));

    CrossingMetrics m;
    m.nu = nu;
    m.nu_prime = nu_prime;
    m.t_tilde = slice.t_tilde;
    m.gap = gap;
    m.sigma = sigma;
    if (nu == nu_prime || sigma == 0.0) {
        m.degenerate = true;
        m.ratio = (gap == 0.0 && nu == nu_prime)
                      ? 0.0
                      : std::numeric_limits<double>::infinity();
    } else {
        m.ratio = gap * gap / sigma;
    }
    return m;
}

}  // namespace qstirap
