#include "qstirap/otoc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qstirap {

Eigen::MatrixXcd heisenberg_matrix(const SparseOperator& op, const SpectrumSlice& slice,
                                   double t) {
    if (op.dim() != slice.energies.size())
        throw InvalidArgument("heisenberg_matrix: operator and slice dimensions differ");
    const Eigen::MatrixXd bare =
        slice.vectors.transpose() * op.dense_real() * slice.vectors;
    const Eigen::VectorXcd phases =
        (cplx(0.0, 1.0) * t * slice.energies.cast<cplx>()).array().exp();
    return phases.asDiagonal() * bare.cast<cplx>() * phases.conjugate().asDiagonal();
}

namespace {

struct EigenbasisPair {
    Eigen::MatrixXd na;  // V† n_a V
    Eigen::MatrixXd nc;  // V† n_c V
};

EigenbasisPair transform_numbers(const Model& model, const SpectrumSlice& slice) {
    const Eigen::VectorXd& da = model.number_diagonal(Mode::a);
    const Eigen::VectorXd& dc = model.number_diagonal(Mode::c);
    EigenbasisPair p;
    p.na = slice.vectors.transpose() * da.asDiagonal() * slice.vectors;
    p.nc = slice.vectors.transpose() * dc.asDiagonal() * slice.vectors;
    return p;
}

// Row nu of C(t) = [n_a(t), n_c] in the eigenbasis, computed in O(d^2) from
// A(t)_{jk} = p_j Abar_{jk} conj(p_k) with p_k = exp(i E_k t):
//   C[nu,:] = Ncbar (p_nu Abar[nu,:] ∘ conj(p))  -  conj(p) ∘ (Abar (Ncbar[nu,:] ∘ p))
// using that Abar and Ncbar are real symmetric.
Eigen::VectorXcd commutator_row(const EigenbasisPair& ops, const Eigen::VectorXd& energies,
                                int nu, double t) {
    const Eigen::Index d = energies.size();
    Eigen::VectorXcd p(d);
    for (Eigen::Index k = 0; k < d; ++k) p[k] = std::polar(1.0, energies[k] * t);
    const Eigen::VectorXcd u =
        p[nu] * (ops.na.row(nu).transpose().cast<cplx>().array() * p.conjugate().array());
    const Eigen::VectorXcd w =
        ops.nc.row(nu).transpose().cast<cplx>().array() * p.array();
    Eigen::VectorXcd row = ops.nc.cast<cplx>() * u;
    row -= p.conjugate().array().cwiseProduct((ops.na.cast<cplx>() * w).array()).matrix();
    return row;
}

}  // namespace

OTOCSeries microcanonical_otoc(const Model& model, const SpectrumSlice& slice, int nu,
                               std::span<const double> times) {
    if (nu < 0 || nu >= slice.energies.size())
        throw InvalidArgument("microcanonical_otoc: eigenstate index out of range");
    const EigenbasisPair ops = transform_numbers(model, slice);
    OTOCSeries series;
    series.t_tilde = slice.t_tilde;
    series.nu = nu;
    series.times.assign(times.begin(), times.end());
    series.values.reserve(times.size());
    for (double t : times)
        series.values.push_back(commutator_row(ops, slice.energies, nu, t).squaredNorm());
    return series;
}

OTOCSeries microcanonical_otoc(const Model& model, double t_tilde, int nu,
                               std::span<const double> times) {
    return microcanonical_otoc(model, diagonalize(model, t_tilde), nu, times);
}

OTOCSeries thermal_otoc(const Model& model, double t_tilde, double beta,
                        std::span<const double> times) {
    if (beta < 0.0) throw InvalidArgument("thermal_otoc: beta must be >= 0");
    const SpectrumSlice slice = diagonalize(model, t_tilde);
    const Eigen::Index d = slice.energies.size();
    const EigenbasisPair ops = transform_numbers(model, slice);

    // Shift energies by the ground state before exponentiating.
    Eigen::VectorXd weights =
        (-beta * (slice.energies.array() - slice.energies.minCoeff())).exp();
    weights /= weights.sum();

    OTOCSeries series;
    series.t_tilde = t_tilde;
    series.beta = beta;
    series.times.assign(times.begin(), times.end());
    series.values.reserve(times.size());
    for (double t : times) {
        Eigen::VectorXcd p(d);
        for (Eigen::Index k = 0; k < d; ++k) p[k] = std::polar(1.0, slice.energies[k] * t);
        const Eigen::MatrixXcd at =
            p.asDiagonal() * ops.na.cast<cplx>() * p.conjugate().asDiagonal();
        const Eigen::MatrixXcd comm = at * ops.nc.cast<cplx>() - ops.nc.cast<cplx>() * at;
        double value = 0.0;
        for (Eigen::Index nu = 0; nu < d; ++nu)
            value += weights[nu] * comm.row(nu).squaredNorm();
        series.values.push_back(value);
    }
    return series;
}

namespace {

struct PrefixSums {
    std::vector<double> x, xx, y, yy, xy;

    explicit PrefixSums(std::span<const double> t, const std::vector<double>& logv) {
        const std::size_t n = t.size();
        x.assign(n + 1, 0.0);
        xx.assign(n + 1, 0.0);
        y.assign(n + 1, 0.0);
        yy.assign(n + 1, 0.0);
        xy.assign(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            x[i + 1] = x[i] + t[i];
            xx[i + 1] = xx[i] + t[i] * t[i];
            y[i + 1] = y[i] + logv[i];
            yy[i + 1] = yy[i] + logv[i] * logv[i];
            xy[i + 1] = xy[i] + t[i] * logv[i];
        }
    }

    // Least-squares line over [i, j]; returns slope, intercept, rms residual.
    bool fit(std::size_t i, std::size_t j, double& slope, double& intercept,
             double& rms) const {
        const double n = double(j - i + 1);
        const double sx = x[j + 1] - x[i];
        const double sxx = xx[j + 1] - xx[i];
        const double sy = y[j + 1] - y[i];
        const double syy = yy[j + 1] - yy[i];
        const double sxy = xy[j + 1] - xy[i];
        const double det = n * sxx - sx * sx;
        if (det <= 0.0) return false;
        slope = (n * sxy - sx * sy) / det;
        intercept = (sy - slope * sx) / n;
        const double sse =
            std::max(0.0, syy - intercept * sy - slope * sxy);
        rms = std::sqrt(sse / n);
        return true;
    }
};

}  // namespace

GrowthFit fit_growth(const OTOCSeries& series, const GrowthFitOptions& options) {
    const std::size_t n = series.values.size();
    std::size_t usable = 0;
    for (double v : series.values)
        if (v > options.floor) ++usable;
    if (n != series.times.size() || usable < 10)
        throw InvalidArgument("fit_growth: need at least 10 points above the floor");

    std::vector<double> logv(n, 0.0);
    std::vector<bool> valid(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        valid[i] = series.values[i] > options.floor;
        logv[i] = valid[i] ? std::log(series.values[i]) : 0.0;
    }
    // run_end[i]: one past the last index of the contiguous valid run containing i.
    std::vector<std::size_t> run_end(n, 0);
    for (std::size_t i = n; i-- > 0;)
        run_end[i] = valid[i] ? (i + 1 < n && valid[i + 1] ? run_end[i + 1] : i + 1) : i;

    const PrefixSums sums(series.times, logv);
    std::vector<double> value_prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) value_prefix[i + 1] = value_prefix[i] + series.values[i];
    std::vector<double> suffix_min(n + 1, std::numeric_limits<double>::infinity());
    for (std::size_t i = n; i-- > 0;)
        suffix_min[i] = std::min(series.values[i], suffix_min[i + 1]);

    auto max_deviation = [&](std::size_t i, std::size_t j, double slope, double intercept) {
        double dev = 0.0;
        for (std::size_t k = i; k <= j; ++k)
            dev = std::max(dev, std::abs(logv[k] - intercept - slope * series.times[k]));
        return dev;
    };

    std::size_t best_i = 0, best_j = 0;
    std::size_t best_len = 0;
    bool found = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!valid[i]) continue;
        for (std::size_t j = run_end[i]; j-- > i + 1;) {
            if (j - i + 1 <= best_len) break;  // only longer windows can win
            const double duration = series.times[j] - series.times[i];
            if (duration < options.min_duration) break;
            double slope, intercept, rms;
            if (!sums.fit(i, j, slope, intercept, rms)) continue;
            if (slope <= 0.0 || rms > options.rms_tol) continue;
            if (slope * duration < options.min_rise) continue;
            // Saturation must follow the growth: the tail keeps the end level on
            // average and never collapses far below it.
            const double end_level = std::exp(intercept + slope * series.times[j]);
            if (j + 3 < n) {
                const double tail_mean = (value_prefix[n] - value_prefix[j + 1]) / double(n - j - 1);
                if (tail_mean < options.plateau_factor * end_level) continue;
                if (suffix_min[j + 1] < 0.05 * options.plateau_factor * end_level) continue;
            }
            if (max_deviation(i, j, slope, intercept) > options.rms_tol) continue;
            best_i = i;
            best_j = j;
            best_len = j - i + 1;
            found = true;
        }
    }

    GrowthFit best;
    if (!found) return best;

    // Trim edge points that bend away from the line (plateau overhang) so the
    // fitted rate reflects the clean exponential segment.
    std::size_t i = best_i, j = best_j;
    const std::size_t min_keep = best_len - std::max<std::size_t>(2, best_len / 3);
    double slope = 0.0, intercept = 0.0, rms = 0.0;
    sums.fit(i, j, slope, intercept, rms);
    while (j - i + 1 > std::max<std::size_t>(min_keep, 3)) {
        const double dev_lo = std::abs(logv[i] - intercept - slope * series.times[i]);
        const double dev_hi = std::abs(logv[j] - intercept - slope * series.times[j]);
        if (std::max(dev_lo, dev_hi) <= 0.05) break;
        if (dev_lo >= dev_hi)
            ++i;
        else
            --j;
        sums.fit(i, j, slope, intercept, rms);
    }

    best.has_window = true;
    best.t_start = series.times[i];
    best.t_end = series.times[j];
    best.rate = slope;

    // Plateau level: mean of everything after the window, else the top decile.
    if (n - (j + 1) >= 3) {
        best.saturation = (value_prefix[n] - value_prefix[j + 1]) / double(n - j - 1);
    } else {
        std::vector<double> sorted = series.values;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t top = std::max<std::size_t>(1, n / 10);
        double acc = 0.0;
        for (std::size_t k = n - top; k < n; ++k) acc += sorted[k];
        best.saturation = acc / double(top);
    }
    return best;
}

int select_branch_eigenstate(const SpectrumSlice& slice, double e_target,
                             const Eigen::VectorXcd& reference, int candidates) {
    const Eigen::Index d = slice.energies.size();
    if (reference.size() != d)
        throw InvalidArgument("select_branch_eigenstate: reference dimension mismatch");
    if (candidates < 1) throw InvalidArgument("select_branch_eigenstate: need candidates >= 1");
    std::vector<int> order(d);
    for (Eigen::Index k = 0; k < d; ++k) order[k] = static_cast<int>(k);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(slice.energies[a] - e_target) < std::abs(slice.energies[b] - e_target);
    });
    int best = order.front();
    double best_overlap = -1.0;
    for (int k = 0; k < std::min<Eigen::Index>(candidates, d); ++k) {
        const int nu = order[k];
        const double overlap =
            std::norm(slice.vectors.col(nu).cast<cplx>().dot(reference));
        if (overlap > best_overlap) {
            best_overlap = overlap;
            best = nu;
        }
    }
    return best;
}

int select_nearest_eigenstate(const SpectrumSlice& slice, double e_target,
                              const Eigen::VectorXd* reference) {
    const Eigen::Index d = slice.energies.size();
    Eigen::Index best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < d; ++k) {
        const double e = std::abs(slice.energies[k] - e_target);
        if (e < dist - 1e-12) {
            dist = e;
            best = k;
        } else if (reference != nullptr && std::abs(e - dist) <= 1e-12) {
            const double cur = std::abs(slice.vectors.col(best).dot(*reference));
            const double alt = std::abs(slice.vectors.col(k).dot(*reference));
            if (alt > cur) best = k;
        }
    }
    return static_cast<int>(best);
}

}  // namespace qstirap
