#include "qstirap/semiclassical.hpp"

#include <algorithm>
#include <cmath>

#include "qstirap/parallel.hpp"

namespace qstirap {

namespace {

constexpr cplx kImag{0.0, 1.0};

MeanFieldState axpy(const MeanFieldState& x, double alpha, const MeanFieldState& y) {
    return {x.a + alpha * y.a, x.b + alpha * y.b, x.c + alpha * y.c, x.s_c + alpha * y.s_c,
            x.s_z + alpha * y.s_z};
}

}  // namespace

bool MeanFieldState::finite() const {
    auto ok = [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); };
    return ok(a) && ok(b) && ok(c) && ok(s_c) && std::isfinite(s_z);
}

MeanFieldState mean_field_rhs(const MeanFieldState& z, const ModelParams& p, double t_tilde) {
    const Pulses j = pulse_values(p, t_tilde);
    const double gc = p.g_c * p.K;
    const double delta = p.delta * p.K;
    MeanFieldState d;
    d.a = -kImag * (-j.j1 * z.b);
    d.b = -kImag * (delta * z.b - j.j1 * z.a - j.j2 * z.c);
    d.c = -kImag * (-j.j2 * z.b + gc * z.s_c);
    d.s_c = -kImag * (-2.0 * gc * z.c * z.s_z);
    d.s_z = 2.0 * gc * std::imag(std::conj(z.s_c) * z.c);
    return d;
}

double classical_energy(const MeanFieldState& z, const ModelParams& p, double t_tilde) {
    const Pulses j = pulse_values(p, t_tilde);
    return p.delta * p.K * std::norm(z.b) + 2.0 * p.g_c * p.K * std::real(std::conj(z.c) * z.s_c) -
           2.0 * j.j1 * std::real(std::conj(z.a) * z.b) -
           2.0 * j.j2 * std::real(std::conj(z.b) * z.c);
}

MeanFieldState decoupled_state(int total_excitation) {
    MeanFieldState z;
    z.a = std::sqrt(double(total_excitation));
    return z;
}

MeanFieldState sample_valid_state(int total_excitation, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    MeanFieldState z;
    z.s_z = 0.5 * (2.0 * unif(rng) - 1.0);
    const double sc_mag = std::sqrt(std::max(0.0, 0.25 - z.s_z * z.s_z));
    z.s_c = std::polar(sc_mag, angle(rng));
    const double photons = double(total_excitation) - (z.s_z + 0.5);
    // Random simplex split of the photon budget over the three modes.
    double w[3] = {-std::log(unif(rng)), -std::log(unif(rng)), -std::log(unif(rng))};
    const double wsum = w[0] + w[1] + w[2];
    z.a = std::polar(std::sqrt(photons * w[0] / wsum), angle(rng));
    z.b = std::polar(std::sqrt(photons * w[1] / wsum), angle(rng));
    z.c = std::polar(std::sqrt(photons * w[2] / wsum), angle(rng));
    return z;
}

namespace {

template <typename Rhs>
MeanFieldState rk4_step(const MeanFieldState& z, double h, const Rhs& rhs, double t) {
    const MeanFieldState k1 = rhs(z, t);
    const MeanFieldState k2 = rhs(axpy(z, 0.5 * h, k1), t + 0.5 * h);
    const MeanFieldState k3 = rhs(axpy(z, 0.5 * h, k2), t + 0.5 * h);
    const MeanFieldState k4 = rhs(axpy(z, h, k3), t + h);
    MeanFieldState out = z;
    out.a += (h / 6.0) * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a);
    out.b += (h / 6.0) * (k1.b + 2.0 * k2.b + 2.0 * k3.b + k4.b);
    out.c += (h / 6.0) * (k1.c + 2.0 * k2.c + 2.0 * k3.c + k4.c);
    out.s_c += (h / 6.0) * (k1.s_c + 2.0 * k2.s_c + 2.0 * k3.s_c + k4.s_c);
    out.s_z += (h / 6.0) * (k1.s_z + 2.0 * k2.s_z + 2.0 * k3.s_z + k4.s_z);
    return out;
}

template <typename Rhs>
MeanFieldState integrate(MeanFieldState z, double duration, double step, const Rhs& rhs) {
    if (duration <= 0.0) return z;
    const long n = std::max(1L, std::lround(duration / step));
    const double h = duration / double(n);
    for (long k = 0; k < n; ++k) {
        z = rk4_step(z, h, rhs, double(k) * h);
        if (!z.finite()) throw NumericError("mean-field integration blew up");
    }
    return z;
}

}  // namespace

MeanFieldState integrate_flow(MeanFieldState z, const ModelParams& p, double t_tilde,
                              double duration, double step) {
    return integrate(std::move(z), duration, step, [&](const MeanFieldState& s, double) {
        return mean_field_rhs(s, p, t_tilde);
    });
}

MeanFieldState integrate_flow_swept(MeanFieldState z, const ModelParams& p, double t_tilde0,
                                    double rate, double duration, double step) {
    return integrate(std::move(z), duration, step, [&](const MeanFieldState& s, double t) {
        return mean_field_rhs(s, p, t_tilde0 + rate * p.K * t);
    });
}

double SpResidual::max_norm() const {
    double m = std::max(std::abs(excitation), std::abs(spin_length));
    for (const cplx& e : equations) m = std::max(m, std::abs(e));
    return m;
}

Eigen::Matrix<double, 10, 1> SpResidual::stacked() const {
    Eigen::Matrix<double, 10, 1> v;
    for (int i = 0; i < 4; ++i) {
        v[2 * i] = equations[i].real();
        v[2 * i + 1] = equations[i].imag();
    }
    v[8] = excitation;
    v[9] = spin_length;
    return v;
}

SpResidual sp_residual(const MeanFieldState& z, double mu, const ModelParams& p,
                       double t_tilde) {
    const Pulses j = pulse_values(p, t_tilde);
    const double gc = p.g_c * p.K;
    const double delta = p.delta * p.K;
    SpResidual r;
    r.equations[0] = j.j1 * z.b + mu * z.a;
    r.equations[1] = delta * z.b - j.j1 * z.a - j.j2 * z.c - mu * z.b;
    r.equations[2] = j.j2 * z.b - gc * z.s_c + mu * z.c;
    r.equations[3] = 2.0 * gc * z.c * z.s_z + mu * z.s_c;
    r.excitation = z.excitation() - double(p.N);
    r.spin_length = z.spin_length_sq() - 0.25;
    return r;
}

namespace {

// Unknowns in the gauge Im(a) = 0:
// x = [a, Re b, Im b, Re c, Im c, Re s_c, Im s_c, s_z, mu]
using SpVector = Eigen::Matrix<double, 9, 1>;
using SpJacobian = Eigen::Matrix<double, 10, 9>;

MeanFieldState unpack(const SpVector& x) {
    return {cplx(x[0], 0.0), cplx(x[1], x[2]), cplx(x[3], x[4]), cplx(x[5], x[6]), x[7]};
}

SpVector pack(const MeanFieldState& z, double mu) {
    SpVector x;
    x << std::abs(z.a), z.b.real(), z.b.imag(), z.c.real(), z.c.imag(), z.s_c.real(),
        z.s_c.imag(), z.s_z, mu;
    return x;
}

SpJacobian sp_jacobian(const SpVector& x, const ModelParams& p, double t_tilde) {
    const Pulses j = pulse_values(p, t_tilde);
    const double gc = p.g_c * p.K;
    const double delta = p.delta * p.K;
    const double a = x[0], br = x[1], bi = x[2], cr = x[3], ci = x[4];
    const double sr = x[5], si = x[6], sz = x[7], mu = x[8];
    SpJacobian m = SpJacobian::Zero();
    // eq0 = J1 b + mu a
    m(0, 0) = mu;      m(0, 1) = j.j1;  m(0, 8) = a;
    m(1, 2) = j.j1;
    // eq1 = delta b - J1 a - J2 c - mu b
    m(2, 0) = -j.j1;   m(2, 1) = delta - mu;  m(2, 3) = -j.j2;  m(2, 8) = -br;
    m(3, 2) = delta - mu;  m(3, 4) = -j.j2;   m(3, 8) = -bi;
    // eq2 = J2 b - gc s_c + mu c
    m(4, 1) = j.j2;    m(4, 3) = mu;   m(4, 5) = -gc;  m(4, 8) = cr;
    m(5, 2) = j.j2;    m(5, 4) = mu;   m(5, 6) = -gc;  m(5, 8) = ci;
    // eq3 = 2 gc c s_z + mu s_c
    m(6, 3) = 2.0 * gc * sz;  m(6, 5) = mu;  m(6, 7) = 2.0 * gc * cr;  m(6, 8) = sr;
    m(7, 4) = 2.0 * gc * sz;  m(7, 6) = mu;  m(7, 7) = 2.0 * gc * ci;  m(7, 8) = si;
    // excitation constraint
    m(8, 0) = 2.0 * a;  m(8, 1) = 2.0 * br;  m(8, 2) = 2.0 * bi;
    m(8, 3) = 2.0 * cr; m(8, 4) = 2.0 * ci;  m(8, 7) = 1.0;
    // spin-length constraint
    m(9, 5) = 2.0 * sr; m(9, 6) = 2.0 * si;  m(9, 7) = 2.0 * sz;
    return m;
}

double residual_norm(const SpVector& x, const ModelParams& p, double t_tilde) {
    return sp_residual(unpack(x), x[8], p, t_tilde).max_norm();
}

}  // namespace

SPSolution solve_sp(const ModelParams& p, double t_tilde, const MeanFieldState& guess,
                    double mu_guess, const NewtonOptions& options) {
    if (!guess.finite()) throw InvalidArgument("solve_sp: guess is not finite");
    // Rotate the guess into the gauge (Im a = 0, a >= 0).
    MeanFieldState g = guess;
    if (std::abs(g.a) > 0.0) {
        const cplx phase = std::conj(g.a) / std::abs(g.a);
        g.a *= phase;
        g.b *= phase;
        g.c *= phase;
        g.s_c *= phase;
    }
    SpVector x = pack(g, mu_guess);
    double norm = residual_norm(x, p, t_tilde);
    for (int it = 0; it < options.max_iterations; ++it) {
        if (norm < options.tol) {
            SPSolution sol;
            sol.state = unpack(x);
            sol.mu = x[8];
            sol.t_tilde = t_tilde;
            sol.energy = classical_energy(sol.state, p, t_tilde);
            sol.residual = norm;
            return sol;
        }
        const Eigen::Matrix<double, 10, 1> f =
            sp_residual(unpack(x), x[8], p, t_tilde).stacked();
        const SpJacobian jac = sp_jacobian(x, p, t_tilde);
        const SpVector step = jac.colPivHouseholderQr().solve(-f);
        double alpha = 1.0;
        double trial_norm = residual_norm(x + alpha * step, p, t_tilde);
        int backtracks = 0;
        while (trial_norm >= norm && backtracks < options.max_backtracks) {
            alpha *= 0.5;
            trial_norm = residual_norm(x + alpha * step, p, t_tilde);
            ++backtracks;
        }
        if (trial_norm >= norm && norm >= options.tol)
            throw ConvergenceError("solve_sp: Newton stalled at t~ = " + std::to_string(t_tilde),
                                   norm);
        x += alpha * step;
        norm = trial_norm;
    }
    throw ConvergenceError(
        "solve_sp: no convergence in " + std::to_string(options.max_iterations) +
            " iterations at t~ = " + std::to_string(t_tilde),
        norm);
}

const SPSolution& Branch::at_time(double t_tilde) const {
    if (points.empty()) throw InvalidArgument("Branch::at_time: empty branch");
    std::size_t best = 0;
    double dist = std::abs(points[0].t_tilde - t_tilde);
    for (std::size_t k = 1; k < points.size(); ++k) {
        const double d = std::abs(points[k].t_tilde - t_tilde);
        if (d < dist) {
            dist = d;
            best = k;
        }
    }
    return points[best];
}

namespace {

// Corrector with fallbacks: the predictor guess first, then the plain
// previous solution, then recursive bisection of the continuation interval.
std::optional<SPSolution> continue_step(const ModelParams& p, const SPSolution& previous,
                                        double t_target, const MeanFieldState& predictor,
                                        double mu_predictor, const NewtonOptions& options,
                                        int depth) {
    try {
        return solve_sp(p, t_target, predictor, mu_predictor, options);
    } catch (const ConvergenceError&) {
    }
    try {
        return solve_sp(p, t_target, previous.state, previous.mu, options);
    } catch (const ConvergenceError&) {
    }
    if (depth <= 0) return std::nullopt;
    const double t_mid = 0.5 * (previous.t_tilde + t_target);
    const auto midpoint =
        continue_step(p, previous, t_mid, previous.state, previous.mu, options, depth - 1);
    if (!midpoint) return std::nullopt;
    return continue_step(p, *midpoint, t_target, midpoint->state, midpoint->mu, options,
                         depth - 1);
}

}  // namespace

Branch continue_branch(const ModelParams& p, std::span<const double> t_grid,
                       const MeanFieldState& seed_guess, double mu_guess,
                       const NewtonOptions& options) {
    if (t_grid.empty()) throw InvalidArgument("continue_branch: empty grid");
    Branch branch;
    branch.points.reserve(t_grid.size());
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        if (k == 0) {
            try {
                branch.points.push_back(solve_sp(p, t_grid[0], seed_guess, mu_guess, options));
            } catch (const ConvergenceError&) {
                branch.breakpoint = 0;
                break;
            }
            continue;
        }
        MeanFieldState guess = branch.points[k - 1].state;
        double mu = branch.points[k - 1].mu;
        if (k >= 2) {
            // Secant predictor from the two previous solutions.
            const auto& z1 = branch.points[k - 1].state;
            const auto& z0 = branch.points[k - 2].state;
            const double dt1 = t_grid[k] - t_grid[k - 1];
            const double dt0 = t_grid[k - 1] - t_grid[k - 2];
            const double w = dt0 > 0.0 ? dt1 / dt0 : 0.0;
            guess = axpy(z1, w, axpy(z1, -1.0, z0));
            mu += w * (branch.points[k - 1].mu - branch.points[k - 2].mu);
        }
        auto solution =
            continue_step(p, branch.points[k - 1], t_grid[k], guess, mu, options, 6);
        if (!solution) {
            branch.breakpoint = k;
            break;
        }
        branch.points.push_back(std::move(*solution));
    }
    if (!branch.points.empty()) {
        double max_b = 0.0;
        for (const auto& s : branch.points) max_b = std::max(max_b, std::norm(s.state.b));
        branch.max_b_fraction = max_b / double(p.N);
        const double na_first = std::norm(branch.points.front().state.a);
        const double na_last = std::norm(branch.points.back().state.a);
        const double nc_first = std::norm(branch.points.front().state.c);
        const double nc_last = std::norm(branch.points.back().state.c);
        branch.ssp = branch.max_b_fraction < 0.05 && na_last < na_first && nc_last > nc_first;
    }
    return branch;
}

void LyapunovConfig::validate() const {
    if (xi <= 0.0) throw InvalidArgument("LyapunovConfig: xi must be positive");
    if (resets < 1) throw InvalidArgument("LyapunovConfig: need at least one reset");
    if (warmup_resets < 0) throw InvalidArgument("LyapunovConfig: warmup must be >= 0");
    if (rk_step <= 0.0) throw InvalidArgument("LyapunovConfig: rk_step must be positive");
}

double LyapunovConfig::effective_delta0(int total_excitation) const {
    if (delta0 > 0.0) return delta0;
    return 1e-6 * std::sqrt(double(total_excitation));
}

namespace {

// Distance and displacement in the 8-real metric (s_z excluded).
using Phase8 = Eigen::Matrix<double, 8, 1>;

Phase8 coords8(const MeanFieldState& z) {
    Phase8 v;
    v << z.a.real(), z.a.imag(), z.b.real(), z.b.imag(), z.c.real(), z.c.imag(),
        z.s_c.real(), z.s_c.imag();
    return v;
}

MeanFieldState from_coords8(const Phase8& v, double sz_sign) {
    MeanFieldState z;
    z.a = cplx(v[0], v[1]);
    z.b = cplx(v[2], v[3]);
    z.c = cplx(v[4], v[5]);
    z.s_c = cplx(v[6], v[7]);
    const double rem = 0.25 - std::norm(z.s_c);
    z.s_z = (sz_sign < 0.0 ? -1.0 : 1.0) * std::sqrt(std::max(0.0, rem));
    return z;
}

}  // namespace

LyapunovSeries lyapunov(const ModelParams& p, double t_tilde, const SPSolution& base,
                        const LyapunovConfig& config) {
    config.validate();
    const double d0 = config.effective_delta0(p.N);
    const double xi = config.xi / p.K;

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Phase8 dir;
    for (int i = 0; i < 8; ++i) dir[i] = normal(rng);
    dir.normalize();

    MeanFieldState ref = base.state;
    MeanFieldState test = from_coords8(coords8(ref) + d0 * dir, ref.s_z);

    LyapunovSeries series;
    series.xi = config.xi;
    series.delta0 = d0;
    series.lambda.reserve(config.resets);
    double log_sum = 0.0;
    // Warmup resets align the separation with the dominant direction before
    // the sum starts (the transient otherwise decays only as 1/M).
    for (int m = 1; m <= config.warmup_resets + config.resets; ++m) {
        ref = integrate_flow(ref, p, t_tilde, xi, config.rk_step / p.K);
        test = integrate_flow(test, p, t_tilde, xi, config.rk_step / p.K);
        const Phase8 sep = coords8(test) - coords8(ref);
        const double dist = sep.norm();
        if (!(dist > 0.0) || !std::isfinite(dist))
            throw NumericError("lyapunov: trajectories collapsed or blew up");
        if (m > config.warmup_resets) {
            log_sum += std::log(dist / d0);
            // lambda_m = (1 / (m K xi)) sum log(delta_j / delta_0), in units K
            const int measured = m - config.warmup_resets;
            series.lambda.push_back(log_sum / (double(measured) * config.xi));
        }
        test = from_coords8(coords8(ref) + (d0 / dist) * sep, test.s_z);
    }
    return series;
}

ChaoticWindow chaotic_window(const ModelParams& p, std::span<const double> t_grid,
                             const Branch& branch, const LyapunovConfig& config,
                             double threshold_factor, int seed_count, int threads) {
    if (t_grid.empty()) throw InvalidArgument("chaotic_window: empty grid");
    if (seed_count < 1) throw InvalidArgument("chaotic_window: seed_count must be >= 1");
    ChaoticWindow window;
    window.lambdas.assign(t_grid.size(), 0.0);
    // Work items: (grid point, perturbation direction); averaged per point.
    // The scan probes the finite-amplitude layer around the stationary point:
    // an infinitesimal separation only sees the linearization, which misses
    // weakly developed windows entirely.
    parallel_for(t_grid.size() * seed_count, threads, [&](std::size_t item) {
        const std::size_t k = item / seed_count;
        LyapunovConfig cfg = config;
        if (cfg.delta0 <= 0.0) cfg.delta0 = 1e-3 * std::sqrt(double(p.N));
        cfg.seed = config.seed + 997 * k + (item % seed_count);
        const SPSolution& base = branch.at_time(t_grid[k]);
        const double value = lyapunov(p, t_grid[k], base, cfg).value() / double(seed_count);
        static std::mutex mu;
        std::lock_guard<std::mutex> lock(mu);
        window.lambdas[k] += value;
    });

    // Regular reference level: the median |lambda| over the grid (the window
    // covers a minority of it), with a floor at the linear-dynamics scale.
    constexpr double kRegularFloor = 1e-4;  // units K
    std::vector<double> magnitudes;
    magnitudes.reserve(window.lambdas.size());
    for (double v : window.lambdas) magnitudes.push_back(std::abs(v));
    std::nth_element(magnitudes.begin(), magnitudes.begin() + magnitudes.size() / 2,
                     magnitudes.end());
    const double reference = magnitudes[magnitudes.size() / 2];
    window.threshold = threshold_factor * std::max(reference, kRegularFloor);

    std::size_t best_len = 0, best_start = 0;
    std::size_t run_start = 0;
    std::size_t run_len = 0;
    for (std::size_t k = 0; k <= t_grid.size(); ++k) {
        if (k < t_grid.size() && window.lambdas[k] > window.threshold) {
            if (run_len == 0) run_start = k;
            ++run_len;
        } else {
            if (run_len > best_len) {
                best_len = run_len;
                best_start = run_start;
            }
            run_len = 0;
        }
    }
    if (best_len > 0) {
        window.found = true;
        window.t_lo = t_grid[best_start];
        window.t_hi = t_grid[best_start + best_len - 1];
    }
    return window;
}

}  // namespace qstirap
