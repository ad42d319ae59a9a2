#include "commands.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <sstream>

#include "qstirap/dynamics.hpp"
#include "qstirap/io.hpp"
#include "qstirap/otoc.hpp"
#include "qstirap/parallel.hpp"
#include "qstirap/semiclassical.hpp"

namespace qstirap::cli {

namespace {

using nlohmann::json;

std::vector<double> uniform_grid(double start, double end, int points) {
    if (points < 1) throw UsageError("grid needs at least one point");
    if (points == 1) return {start};
    if (!(end > start)) throw UsageError("grid end must exceed grid start");
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i)
        g[i] = start + (end - start) * double(i) / double(points - 1);
    return g;
}

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::map<std::string, std::string> header_params(const CommandContext& ctx,
                                                 const std::string& command) {
    std::map<std::string, std::string> params = ctx.config.entries();
    params["run.command"] = command;
    params["run.version"] = kVersion;
    params["run.seed"] = std::to_string(ctx.seed);
    params["run.threads"] = std::to_string(ctx.threads);
    return params;
}

CsvWriter open_csv(const CommandContext& ctx, const std::string& command,
                   const std::string& filename, std::span<const std::string> columns) {
    CsvWriter csv(ctx.out_dir / filename);
    csv.parameters(header_params(ctx, command));
    csv.columns(columns);
    return csv;
}

void write_manifest(const CommandContext& ctx, const std::string& command,
                    const std::vector<std::string>& outputs, const Stopwatch& watch,
                    const std::string& status, json extra = json::object()) {
    json manifest;
    manifest["command"] = command;
    manifest["version"] = kVersion;
    manifest["seed"] = ctx.seed;
    manifest["threads"] = ctx.threads;
    manifest["out_dir"] = ctx.out_dir.string();
    manifest["status"] = status;
    manifest["wall_seconds"] = watch.seconds();
    manifest["parameters"] = json::object();
    for (const auto& [key, value] : ctx.config.entries()) manifest["parameters"][key] = value;
    manifest["outputs"] = outputs;
    if (!extra.empty()) manifest.update(extra);
    std::ofstream out(ctx.out_dir / "manifest.json");
    out << manifest.dump(2) << "\n";
}

std::string format_tag(double v) {
    std::string s = format_value(v);
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

// Newton seed for the SSP branch at an arbitrary starting time: the decoupled
// state in the pulse tails, else the closed-form dark stationary point.
MeanFieldState branch_seed(const ModelParams& p, double t0) {
    if (t0 < 0.5) return decoupled_state(p.N);
    const Pulses j = pulse_values(p, t0);
    const double hyp = std::hypot(j.j1, j.j2);
    MeanFieldState z;
    z.a = std::sqrt(double(p.N)) * j.j2 / hyp;
    z.c = -std::sqrt(double(p.N)) * j.j1 / hyp;
    return z;
}

// SSP branch from the sweep start up to at least t_max (step 0.02).
Branch ssp_branch_to(const ModelParams& p, double t_max) {
    const int points = std::max(2, int(std::ceil(t_max / 0.02)) + 1);
    const std::vector<double> grid = uniform_grid(0.0, std::max(t_max, 0.1), points);
    Branch branch = continue_branch(p, grid, branch_seed(p, grid.front()));
    if (branch.breakpoint)
        throw NumericError("SSP branch continuation broke down at t~ = " +
                           std::to_string(grid[*branch.breakpoint]));
    return branch;
}

int dark_overlap_seed(const Model& model, const SpectrumSlice& slice) {
    const Eigen::VectorXcd dark =
        build_dark_state(model.params(), slice.t_tilde, model.basis());
    Eigen::Index best = 0;
    (slice.vectors.transpose().cast<cplx>() * dark).cwiseAbs2().maxCoeff(&best);
    return static_cast<int>(best);
}

}  // namespace

int cmd_spectrum(const CommandContext& ctx) {
    const Stopwatch watch;
    const ModelParams params = ctx.config.model_params();
    const Model model(params);
    const std::vector<double> grid =
        uniform_grid(ctx.config.get_double("grid.start", 0.0),
                     ctx.config.get_double("grid.end", 6.0606),
                     ctx.config.get_int("grid.points", 200));
    const bool want_vectors = ctx.config.get_bool("output.eigenvectors", false);

    const std::vector<std::string> spectrum_cols{"t_tilde", "nu", "energy"};
    CsvWriter spectrum = open_csv(ctx, "spectrum", "spectrum.csv", spectrum_cols);
    const std::vector<std::string> branch_cols{"t_tilde", "nu", "energy", "overlap",
                                               "ambiguous"};
    CsvWriter branch_csv = open_csv(ctx, "spectrum", "branch.csv", branch_cols);

    std::ofstream vec_out;
    if (want_vectors) {
        vec_out.open(ctx.out_dir / "eigenvectors.bin", std::ios::binary);
        json desc;
        desc["dtype"] = "float64";
        desc["layout"] = "slices x (dim x dim), column-major eigenvector matrices";
        desc["dim"] = model.dim();
        desc["slices"] = grid.size();
        std::ofstream(ctx.out_dir / "eigenvectors.json") << desc.dump(2) << "\n";
    }

    BranchTracker tracker(0);
    bool seeded = false;
    const int explicit_seed = ctx.config.get_int("track.seed", -1);
    spectrum_scan(model, grid, ctx.threads, [&](const SpectrumSlice& slice) {
        for (Eigen::Index nu = 0; nu < slice.energies.size(); ++nu)
            spectrum.row(std::array<double, 3>{slice.t_tilde, double(nu), slice.energies[nu]});
        if (!seeded) {
            tracker = BranchTracker(explicit_seed >= 0 ? explicit_seed
                                                       : dark_overlap_seed(model, slice));
            seeded = true;
        }
        tracker.feed(slice);
        const BranchPoint& bp = tracker.route().back();
        branch_csv.row(std::array<double, 5>{bp.t_tilde, double(bp.index), bp.energy,
                                             bp.overlap, bp.ambiguous ? 1.0 : 0.0});
        if (want_vectors)
            vec_out.write(reinterpret_cast<const char*>(slice.vectors.data()),
                          std::streamsize(sizeof(double)) * slice.vectors.size());
    });

    // Semiclassical stationary-point branch on the same grid.
    const Branch sp_branch = continue_branch(model.params(), grid, branch_seed(params, grid[0]));
    const std::vector<std::string> sp_cols{"t_tilde", "n_a", "n_b",  "n_c",
                                           "s_z",     "mu",  "E_SP", "residual"};
    CsvWriter sp_csv = open_csv(ctx, "spectrum", "sp_branch.csv", sp_cols);
    for (const SPSolution& s : sp_branch.points)
        sp_csv.row(std::array<double, 8>{s.t_tilde, std::norm(s.state.a), std::norm(s.state.b),
                                         std::norm(s.state.c), s.state.s_z, s.mu, s.energy,
                                         s.residual});

    json extra;
    extra["sp_branch"] = {{"ssp", sp_branch.ssp},
                          {"max_b_fraction", sp_branch.max_b_fraction},
                          {"breakpoint", sp_branch.breakpoint ? json(*sp_branch.breakpoint)
                                                              : json(nullptr)}};
    std::vector<std::string> outputs{"spectrum.csv", "branch.csv", "sp_branch.csv"};
    if (want_vectors) {
        outputs.push_back("eigenvectors.bin");
        outputs.push_back("eigenvectors.json");
    }
    write_manifest(ctx, "spectrum", outputs, watch,
                   sp_branch.breakpoint ? "partial" : "ok", extra);
    return sp_branch.breakpoint ? 3 : 0;
}

int cmd_lyapunov(const CommandContext& ctx) {
    const Stopwatch watch;
    const ModelParams params = ctx.config.model_params();
    if (!ctx.config.has("lyapunov.t_values") && !ctx.config.has("lyapunov.window_points"))
        throw UsageError("missing required parameter: lyapunov.t_values");
    const std::vector<double> t_values =
        ctx.config.has("lyapunov.t_values")
            ? ctx.config.get_doubles("lyapunov.t_values", {})
            : std::vector<double>{};

    LyapunovConfig base;
    base.delta0 = ctx.config.get_double("lyapunov.delta0", 0.0);
    base.xi = ctx.config.get_double("lyapunov.xi", 0.1);
    base.resets = ctx.config.get_int("lyapunov.resets", 10000);
    base.warmup_resets = ctx.config.get_int("lyapunov.warmup", 1000);
    base.rk_step = ctx.config.get_double("lyapunov.rk_step", 1e-3);
    base.seed = ctx.seed;

    double t_max = 0.1;
    for (double t : t_values) t_max = std::max(t_max, t);
    const int window_points = ctx.config.get_int("lyapunov.window_points", 0);
    const double window_start = ctx.config.get_double("lyapunov.window_start", 2.0);
    const double window_end = ctx.config.get_double("lyapunov.window_end", 3.6061);
    if (window_points > 0) t_max = std::max(t_max, window_end);
    const Branch branch = ssp_branch_to(params, t_max);

    std::vector<std::string> outputs;
    // Independent t~ points may run in parallel; series are written in input order.
    std::vector<LyapunovSeries> series(t_values.size());
    parallel_for(t_values.size(), ctx.threads, [&](std::size_t k) {
        const SPSolution sol = solve_sp(params, t_values[k], branch.at_time(t_values[k]).state,
                                        branch.at_time(t_values[k]).mu);
        LyapunovConfig cfg = base;
        cfg.seed = base.seed + k;
        series[k] = lyapunov(params, t_values[k], sol, cfg);
    });
    const std::vector<std::string> cols{"m", "Kt", "lambda_m"};
    for (std::size_t k = 0; k < t_values.size(); ++k) {
        const std::string name = "lyapunov_t" + format_tag(t_values[k]) + ".csv";
        CsvWriter csv = open_csv(ctx, "lyapunov", name, cols);
        for (std::size_t m = 0; m < series[k].lambda.size(); ++m)
            csv.row(std::array<double, 3>{double(m + 1), double(m + 1) * series[k].xi,
                                          series[k].lambda[m]});
        outputs.push_back(name);
    }

    json extra;
    if (window_points > 0) {
        LyapunovConfig wcfg = base;
        wcfg.resets = ctx.config.get_int("lyapunov.window_resets", 30000);
        wcfg.warmup_resets = ctx.config.get_int("lyapunov.window_warmup", 2000);
        const std::vector<double> wgrid = uniform_grid(window_start, window_end, window_points);
        const ChaoticWindow window =
            chaotic_window(params, wgrid, branch, wcfg,
                           ctx.config.get_double("lyapunov.threshold_factor", 5.0),
                           ctx.config.get_int("lyapunov.window_seeds", 4), ctx.threads);
        const std::vector<std::string> wcols{"t_tilde", "lambda"};
        CsvWriter wcsv = open_csv(ctx, "lyapunov", "window.csv", wcols);
        for (std::size_t k = 0; k < wgrid.size(); ++k)
            wcsv.row(std::array<double, 2>{wgrid[k], window.lambdas[k]});
        outputs.push_back("window.csv");
        extra["window"] = {{"found", window.found},
                           {"t_lo", window.t_lo},
                           {"t_hi", window.t_hi},
                           {"threshold", window.threshold}};
        std::ofstream(ctx.out_dir / "window.json") << extra["window"].dump(2) << "\n";
        outputs.push_back("window.json");
    }
    write_manifest(ctx, "lyapunov", outputs, watch, "ok", extra);
    return 0;
}

int cmd_otoc(const CommandContext& ctx) {
    const Stopwatch watch;
    const ModelParams params = ctx.config.model_params();
    const Model model(params);
    const std::vector<double> t_values = ctx.config.get_doubles("otoc.t_values", {});
    const std::vector<double> times =
        uniform_grid(0.0, ctx.config.get_double("otoc.kt_max", 50.0),
                     ctx.config.get_int("otoc.points", 500));
    const bool explicit_nu = ctx.config.has("otoc.nu_values");
    std::vector<double> nu_values;
    if (explicit_nu) nu_values = ctx.config.get_doubles("otoc.nu_values", {});
    if (explicit_nu && nu_values.size() != t_values.size())
        throw UsageError("otoc.nu_values must match otoc.t_values in length");

    const Branch branch =
        explicit_nu ? Branch{} : ssp_branch_to(params, *std::max_element(t_values.begin(),
                                                                         t_values.end()));

    std::vector<std::string> outputs;
    json fits = json::array();
    for (std::size_t k = 0; k < t_values.size(); ++k) {
        const double t = t_values[k];
        const SpectrumSlice slice = diagonalize(model, t);
        int nu;
        if (explicit_nu) {
            nu = int(nu_values[k]);
        } else {
            // Eigenstate nearest the SSP energy at this pulse position.
            const SPSolution sol =
                solve_sp(params, t, branch.at_time(t).state, branch.at_time(t).mu);
            nu = select_nearest_eigenstate(slice, sol.energy);
        }
        const OTOCSeries series = microcanonical_otoc(model, slice, nu, times);
        const std::string name =
            "otoc_t" + format_tag(t) + "_nu" + std::to_string(nu) + ".csv";
        const std::vector<std::string> cols{"Kt", "otoc"};
        CsvWriter csv = open_csv(ctx, "otoc", name, cols);
        for (std::size_t i = 0; i < series.times.size(); ++i)
            csv.row(std::array<double, 2>{series.times[i], series.values[i]});
        outputs.push_back(name);

        const GrowthFit fit = fit_growth(series);
        fits.push_back({{"t_tilde", t},
                        {"nu", nu},
                        {"has_window", fit.has_window},
                        {"rate", fit.rate},
                        {"t_start", fit.t_start},
                        {"t_end", fit.t_end},
                        {"saturation", fit.saturation}});
    }

    if (ctx.config.has("otoc.beta")) {
        const double beta = ctx.config.require_double("otoc.beta");
        for (double t : t_values) {
            const OTOCSeries thermal = thermal_otoc(model, t, beta, times);
            const std::string name = "otoc_thermal_t" + format_tag(t) + ".csv";
            const std::vector<std::string> cols{"Kt", "otoc"};
            CsvWriter csv = open_csv(ctx, "otoc", name, cols);
            for (std::size_t i = 0; i < thermal.times.size(); ++i)
                csv.row(std::array<double, 2>{thermal.times[i], thermal.values[i]});
            outputs.push_back(name);
        }
    }

    std::ofstream(ctx.out_dir / "fits.json") << fits.dump(2) << "\n";
    outputs.push_back("fits.json");
    json extra;
    extra["fits"] = fits;
    write_manifest(ctx, "otoc", outputs, watch, "ok", extra);
    return 0;
}

int cmd_purity(const CommandContext& ctx) {
    const Stopwatch watch;
    ModelParams params = ctx.config.model_params();
    const std::vector<double> g_values =
        ctx.config.get_doubles("purity.g_values", {params.g_c});
    const std::vector<double> grid =
        uniform_grid(ctx.config.get_double("purity.start", 2.0),
                     ctx.config.get_double("purity.end", 3.6061),
                     ctx.config.get_int("purity.points", 107));

    const std::string route = ctx.config.get_string("purity.route", "nearest");
    if (route != "nearest" && route != "tracked")
        throw UsageError("parameter purity.route must be 'nearest' or 'tracked'");

    std::vector<std::string> outputs;
    json summary = json::array();
    for (double g : g_values) {
        params.g_c = g;
        const Model model(params);
        // The linear route uses the analytic dark state (the N-fold degenerate
        // spectrum makes both selections ill-posed there).
        std::vector<PurityPoint> points;
        if (g == 0.0) {
            points = purity_scan_dark(model, grid);
        } else if (route == "tracked") {
            points = purity_scan_tracked(model, grid,
                                         ctx.config.get_int("purity.seed_index", -1),
                                         ctx.threads);
        } else {
            points = purity_scan(model, grid, ssp_branch_to(params, grid.back()), ctx.threads);
        }
        const std::string name = "purity_gc" + format_tag(g) + ".csv";
        const std::vector<std::string> cols{"t_tilde", "gamma", "nu", "ambiguous"};
        CsvWriter csv = open_csv(ctx, "purity", name, cols);
        double min_gamma = 2.0, min_t = 0.0;
        for (const PurityPoint& p : points) {
            csv.row(std::array<double, 4>{p.t_tilde, p.gamma, double(p.index),
                                          p.ambiguous ? 1.0 : 0.0});
            if (p.gamma < min_gamma) {
                min_gamma = p.gamma;
                min_t = p.t_tilde;
            }
        }
        outputs.push_back(name);
        summary.push_back({{"g_c", g}, {"min_gamma", min_gamma}, {"argmin_t", min_t}});
    }
    json extra;
    extra["minima"] = summary;
    write_manifest(ctx, "purity", outputs, watch, "ok", extra);
    return 0;
}

int cmd_sweep(const CommandContext& ctx) {
    const Stopwatch watch;
    SweepConfig config;
    config.params = ctx.config.model_params();
    config.rate = ctx.config.get_double("sweep.rate", 0.003);
    config.t_start = ctx.config.get_double("sweep.start", 0.0);
    config.t_end = ctx.config.get_double("sweep.end", 6.0606);
    config.store_stride = ctx.config.get_int("sweep.store_stride", 100);
    config.obs_stride = ctx.config.get_int("sweep.obs_stride", 10);
    config.step_scale = ctx.config.get_double("sweep.step_scale", 0.05);
    if (ctx.config.get_string("sweep.propagator", "lanczos") == "dense")
        config.propagator = Propagator::dense;

    const Model model(config.params);
    const Eigen::VectorXcd psi0 =
        basis_vector(model.basis(), {config.params.N, 0, 0, Qubit::down});
    const SweepResult result = evolve(model, config, psi0);

    const std::vector<std::string> cols{"Kt", "t_tilde", "n_a", "n_b", "n_c", "s_z", "norm"};
    CsvWriter sweep_csv = open_csv(ctx, "sweep", "sweep.csv", cols);
    for (std::size_t k = 0; k < result.kt.size(); ++k)
        sweep_csv.row(std::array<double, 7>{result.kt[k], result.t_tilde[k], result.n_a[k],
                                            result.n_b[k], result.n_c[k], result.s_z[k],
                                            result.norm[k]});

    // Adiabatic projections at the stored snapshots (each needs an eigensolve).
    std::vector<double> snapshot_times;
    for (const auto& s : result.snapshots) snapshot_times.push_back(s.t_tilde);
    const std::vector<std::string> proj_cols{"t_tilde", "nu", "p"};
    CsvWriter proj_csv = open_csv(ctx, "sweep", "projection.csv", proj_cols);
    const std::vector<std::string> part_cols{"Kt", "t_tilde", "eta"};
    CsvWriter part_csv = open_csv(ctx, "sweep", "participation.csv", part_cols);

    std::size_t snap_index = 0;
    spectrum_scan(model, snapshot_times, ctx.threads, [&](const SpectrumSlice& slice) {
        const auto& snap = result.snapshots[snap_index];
        const Eigen::VectorXd p = adiabatic_projection(snap.psi, slice);
        for (Eigen::Index nu = 0; nu < p.size(); ++nu)
            proj_csv.row(std::array<double, 3>{snap.t_tilde, double(nu), p[nu]});
        part_csv.row(
            std::array<double, 3>{snap.kt, snap.t_tilde, participation_number(p)});
        ++snap_index;
    });

    json extra;
    extra["final_nc"] = result.final_nc;
    extra["efficiency"] = result.final_nc / double(config.params.N);
    write_manifest(ctx, "sweep", {"sweep.csv", "projection.csv", "participation.csv"}, watch,
                   "ok", extra);
    return 0;
}

int cmd_efficiency(const CommandContext& ctx) {
    const Stopwatch watch;
    ScalingFamily family;
    family.gc_sqrt_n = ctx.config.get_double("efficiency.gc_sqrt_n", 0.8944);
    family.delta_n = ctx.config.get_double("efficiency.delta_n", 10.0);
    family.amp_n = ctx.config.get_double("efficiency.amp_n", 20.0);

    const int n_min = ctx.config.get_int("efficiency.n_min", 1);
    const int n_max = ctx.config.get_int("efficiency.n_max", 14);
    if (n_min < 1 || n_max < n_min)
        throw UsageError("parameter efficiency.n_min/n_max: need 1 <= n_min <= n_max");
    std::vector<int> n_values;
    for (int n = n_min; n <= n_max; ++n) n_values.push_back(n);
    const std::vector<double> rates =
        ctx.config.get_doubles("efficiency.rates", {0.0606, 0.0152, 0.003, 0.0015});

    SweepConfig base;
    base.params = family.params_for(n_values.front());
    base.t_start = ctx.config.get_double("sweep.start", 0.0);
    base.t_end = ctx.config.get_double("sweep.end", 6.0606);
    base.step_scale = ctx.config.get_double("sweep.step_scale", 0.05);

    const EfficiencyTable table = efficiency_vs_n(family, n_values, rates, base, ctx.threads);

    const std::vector<std::string> cols{"N", "rate", "P"};
    CsvWriter csv = open_csv(ctx, "efficiency", "efficiency.csv", cols);
    json failures = json::array();
    for (const EfficiencyCell& cell : table.cells) {
        if (cell.ok) {
            csv.row(std::array<double, 3>{double(cell.N), cell.rate, cell.efficiency});
        } else {
            failures.push_back(
                {{"N", cell.N}, {"rate", cell.rate}, {"error", cell.error}});
        }
    }
    json extra;
    extra["failures"] = failures;
    write_manifest(ctx, "efficiency", {"efficiency.csv"}, watch,
                   table.complete ? "ok" : "partial", extra);
    return table.complete ? 0 : 3;
}

}  // namespace qstirap::cli
