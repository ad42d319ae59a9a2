#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qstirap/dynamics.hpp"
#include "qstirap/otoc.hpp"
#include "qstirap/semiclassical.hpp"

namespace py = pybind11;
using namespace qstirap;

namespace {

std::vector<double> to_grid(const Eigen::VectorXd& v) {
    return {v.data(), v.data() + v.size()};
}

py::dict branch_dict(const Branch& branch) {
    const std::size_t n = branch.points.size();
    Eigen::VectorXd t(n), na(n), nb(n), nc(n), sz(n), mu(n), energy(n);
    for (std::size_t k = 0; k < n; ++k) {
        const SPSolution& s = branch.points[k];
        t[k] = s.t_tilde;
        na[k] = std::norm(s.state.a);
        nb[k] = std::norm(s.state.b);
        nc[k] = std::norm(s.state.c);
        sz[k] = s.state.s_z;
        mu[k] = s.mu;
        energy[k] = s.energy;
    }
    py::dict d;
    d["t_tilde"] = t;
    d["n_a"] = na;
    d["n_b"] = nb;
    d["n_c"] = nc;
    d["s_z"] = sz;
    d["mu"] = mu;
    d["energy"] = energy;
    d["ssp"] = branch.ssp;
    d["max_b_fraction"] = branch.max_b_fraction;
    d["breakpoint"] = branch.breakpoint ? py::cast(*branch.breakpoint) : py::none();
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Three-cavity Jaynes-Cummings STIRAP simulator core";
    m.attr("__version__") = kVersion;

    py::register_exception<InvalidArgument>(m, "InvalidArgumentError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init([](int N, double K, double delta, double g_c, double pulse_amp,
                         double t1, double t2) {
                 ModelParams p{N, K, delta, g_c, pulse_amp, t1, t2};
                 p.validate();
                 return p;
             }),
             py::arg("N"), py::arg("K") = 1.0, py::arg("delta") = 0.5, py::arg("g_c") = 0.0,
             py::arg("pulse_amp") = 1.0, py::arg("t1") = 3.697, py::arg("t2") = 2.4242)
        .def_readonly("N", &ModelParams::N)
        .def_readonly("K", &ModelParams::K)
        .def_readonly("delta", &ModelParams::delta)
        .def_readonly("g_c", &ModelParams::g_c)
        .def_readonly("pulse_amp", &ModelParams::pulse_amp)
        .def_readonly("t1", &ModelParams::t1)
        .def_readonly("t2", &ModelParams::t2);

    m.def(
        "pulse_values",
        [](const ModelParams& p, double t) {
            const Pulses j = pulse_values(p, t);
            return py::make_tuple(j.j1, j.j2);
        },
        py::arg("params"), py::arg("t_tilde"), "Gaussian pulse pair (J1, J2) at t~");

    py::class_<Model>(m, "Model")
        .def(py::init<ModelParams>(), py::arg("params"))
        .def_property_readonly("dim", &Model::dim)
        .def_property_readonly("params", &Model::params)
        .def(
            "basis_states",
            [](const Model& model) {
                py::list out;
                for (const FockState& s : model.basis().states())
                    out.append(py::make_tuple(s.n_a, s.n_b, s.n_c, s.sz()));
                return out;
            },
            "Ordered (n_a, n_b, n_c, s_z) tuples of the conserved basis")
        .def(
            "hamiltonian",
            [](const Model& model, double t) { return model.hamiltonian(t).dense(); },
            py::arg("t_tilde"), "Dense H(t~) on the conserved basis")
        .def(
            "initial_state",
            [](const Model& model) {
                return basis_vector(model.basis(),
                                    {model.params().N, 0, 0, Qubit::down});
            },
            "The Fock state |N,0,0,down>");

    m.def(
        "basis_size", [](int n) { return enumerate_basis(n).size(); }, py::arg("N"),
        "Hilbert-space dimension (N+1)^2");

    m.def(
        "diagonalize",
        [](const Model& model, double t) {
            const SpectrumSlice slice = diagonalize(model, t);
            return py::make_tuple(slice.energies, slice.vectors);
        },
        py::arg("model"), py::arg("t_tilde"),
        "Eigendecomposition at t~: (energies ascending, gauge-fixed column vectors)");

    m.def(
        "spectrum_energies",
        [](const Model& model, const Eigen::VectorXd& grid, int threads) {
            Eigen::MatrixXd table(grid.size(), model.dim());
            Eigen::Index row = 0;
            spectrum_scan(model, to_grid(grid), threads,
                          [&](const SpectrumSlice& s) { table.row(row++) = s.energies; });
            return table;
        },
        py::arg("model"), py::arg("t_grid"), py::arg("threads") = 1,
        "Energy table over a t~ grid, one row per grid point");

    m.def(
        "track_route",
        [](const Model& model, const Eigen::VectorXd& grid, int seed_index, int threads) {
            std::vector<BranchPoint> route;
            BranchTracker tracker(std::max(seed_index, 0));
            bool seeded = seed_index >= 0;
            spectrum_scan(model, to_grid(grid), threads, [&](const SpectrumSlice& slice) {
                if (!seeded) {
                    const Eigen::VectorXcd dark =
                        build_dark_state(model.params(), slice.t_tilde, model.basis());
                    Eigen::Index best = 0;
                    (slice.vectors.transpose().cast<cplx>() * dark)
                        .cwiseAbs2()
                        .maxCoeff(&best);
                    tracker = BranchTracker(static_cast<int>(best));
                    seeded = true;
                }
                tracker.feed(slice);
                route.push_back(tracker.route().back());
            });
            py::list out;
            for (const BranchPoint& p : route) {
                py::dict d;
                d["t_tilde"] = p.t_tilde;
                d["index"] = p.index;
                d["energy"] = p.energy;
                d["overlap"] = p.overlap;
                d["ambiguous"] = p.ambiguous;
                out.append(d);
            }
            return out;
        },
        py::arg("model"), py::arg("t_grid"), py::arg("seed_index") = -1,
        py::arg("threads") = 1,
        "Diabatic route by maximal eigenvector overlap (seed < 0: dark-state overlap)");

    m.def(
        "build_dark_state",
        [](const ModelParams& p, double t) {
            return build_dark_state(p, t, ConservedBasis(p.N));
        },
        py::arg("params"), py::arg("t_tilde"),
        "Two-mode coherent dark state in the conserved basis");

    m.def(
        "ssp_branch",
        [](const ModelParams& p, const Eigen::VectorXd& grid) {
            return branch_dict(continue_branch(p, to_grid(grid), decoupled_state(p.N)));
        },
        py::arg("params"), py::arg("t_grid"),
        "Stationary-point branch continued from the decoupled state");

    m.def(
        "lyapunov_series",
        [](const ModelParams& p, double t, const Eigen::VectorXd& branch_grid, double xi,
           int resets, int warmup, double delta0, std::uint64_t seed) {
            const Branch branch =
                continue_branch(p, to_grid(branch_grid), decoupled_state(p.N));
            const SPSolution sol =
                solve_sp(p, t, branch.at_time(t).state, branch.at_time(t).mu);
            LyapunovConfig cfg;
            cfg.xi = xi;
            cfg.resets = resets;
            cfg.warmup_resets = warmup;
            cfg.delta0 = delta0;
            cfg.seed = seed;
            const LyapunovSeries s = lyapunov(p, t, sol, cfg);
            return Eigen::Map<const Eigen::VectorXd>(s.lambda.data(), s.lambda.size())
                .eval();
        },
        py::arg("params"), py::arg("t_tilde"), py::arg("branch_grid"), py::arg("xi") = 0.1,
        py::arg("resets") = 10000, py::arg("warmup") = 1000, py::arg("delta0") = 0.0,
        py::arg("seed") = 12345, "Running finite-time Lyapunov exponent lambda_m");

    m.def(
        "microcanonical_otoc",
        [](const Model& model, double t_tilde, int nu, const Eigen::VectorXd& times) {
            const OTOCSeries s = microcanonical_otoc(model, t_tilde, nu, to_grid(times));
            return Eigen::Map<const Eigen::VectorXd>(s.values.data(), s.values.size())
                .eval();
        },
        py::arg("model"), py::arg("t_tilde"), py::arg("nu"), py::arg("times"),
        "O_nu(t) = sum_nu' |<nu|[n_a(t), n_c]|nu'>|^2 at frozen t~");

    m.def(
        "thermal_otoc",
        [](const Model& model, double t_tilde, double beta, const Eigen::VectorXd& times) {
            const OTOCSeries s = thermal_otoc(model, t_tilde, beta, to_grid(times));
            return Eigen::Map<const Eigen::VectorXd>(s.values.data(), s.values.size())
                .eval();
        },
        py::arg("model"), py::arg("t_tilde"), py::arg("beta"), py::arg("times"));

    m.def(
        "fit_growth",
        [](const Eigen::VectorXd& times, const Eigen::VectorXd& values) {
            OTOCSeries s;
            s.times = to_grid(times);
            s.values = to_grid(values);
            const GrowthFit fit = fit_growth(s);
            py::dict d;
            d["has_window"] = fit.has_window;
            d["t_start"] = fit.t_start;
            d["t_end"] = fit.t_end;
            d["rate"] = fit.rate;
            d["saturation"] = fit.saturation;
            return d;
        },
        py::arg("times"), py::arg("values"),
        "Exponential growth window detection on an OTOC series");

    m.def(
        "nearest_eigenstate",
        [](const Model& model, double t_tilde, double energy) {
            return select_nearest_eigenstate(diagonalize(model, t_tilde), energy);
        },
        py::arg("model"), py::arg("t_tilde"), py::arg("energy"));

    m.def(
        "sweep",
        [](const Model& model, double rate, double t_start, double t_end, int obs_stride,
           int store_stride, double step_scale) {
            SweepConfig config;
            config.params = model.params();
            config.rate = rate;
            config.t_start = t_start;
            config.t_end = t_end;
            config.obs_stride = obs_stride;
            config.store_stride = store_stride;
            config.step_scale = step_scale;
            const Eigen::VectorXcd psi0 =
                basis_vector(model.basis(), {model.params().N, 0, 0, Qubit::down});
            const SweepResult r = evolve(model, config, psi0);
            auto vec = [](const std::vector<double>& v) {
                return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()).eval();
            };
            py::dict d;
            d["kt"] = vec(r.kt);
            d["t_tilde"] = vec(r.t_tilde);
            d["n_a"] = vec(r.n_a);
            d["n_b"] = vec(r.n_b);
            d["n_c"] = vec(r.n_c);
            d["s_z"] = vec(r.s_z);
            d["norm"] = vec(r.norm);
            d["final_state"] = r.final_state;
            d["final_nc"] = r.final_nc;
            d["efficiency"] = r.final_nc / double(model.params().N);
            return d;
        },
        py::arg("model"), py::arg("rate"), py::arg("t_start") = 0.0,
        py::arg("t_end") = 6.0606, py::arg("obs_stride") = 10, py::arg("store_stride") = 100,
        py::arg("step_scale") = 0.05,
        "Real-time sweep from |N,0,0,down>; populations, norm, and final state");

    m.def(
        "adiabatic_projection",
        [](const Model& model, double t_tilde, const Eigen::VectorXcd& psi) {
            return adiabatic_projection(psi, diagonalize(model, t_tilde));
        },
        py::arg("model"), py::arg("t_tilde"), py::arg("psi"));

    m.def("participation_number", &participation_number, py::arg("probabilities"));

    m.def(
        "single_particle_purity",
        [](const Model& model, const Eigen::VectorXcd& psi) {
            return single_particle_purity(model, psi);
        },
        py::arg("model"), py::arg("psi"),
        "gamma = Tr(rho_sp^2) over modes {a, b, c, qubit}");

    m.def(
        "single_particle_density",
        [](const Model& model, const Eigen::VectorXcd& psi) {
            return Eigen::MatrixXcd(single_particle_density(model, psi));
        },
        py::arg("model"), py::arg("psi"));

    m.def(
        "efficiency_table",
        [](const std::vector<int>& n_values, const std::vector<double>& rates,
           double gc_sqrt_n, double delta_n, double amp_n, int threads) {
            ScalingFamily family{gc_sqrt_n, delta_n, amp_n};
            SweepConfig base;
            base.params = family.params_for(n_values.front());
            const EfficiencyTable table =
                efficiency_vs_n(family, n_values, rates, base, threads);
            py::list out;
            for (const EfficiencyCell& cell : table.cells) {
                py::dict d;
                d["N"] = cell.N;
                d["rate"] = cell.rate;
                d["P"] = cell.efficiency;
                d["ok"] = cell.ok;
                if (!cell.ok) d["error"] = cell.error;
                out.append(d);
            }
            return out;
        },
        py::arg("n_values"), py::arg("rates"), py::arg("gc_sqrt_n") = 0.8944,
        py::arg("delta_n") = 10.0, py::arg("amp_n") = 20.0, py::arg("threads") = 1,
        "Transfer efficiency over the N-scaling family");
}
