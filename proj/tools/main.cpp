#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "commands.hpp"
#include "qstirap/common.hpp"
#include "qstirap/io.hpp"
#include "qstirap/parallel.hpp"

namespace {

using qstirap::cli::CommandContext;
using qstirap::cli::RunConfig;
using qstirap::cli::UsageError;

struct GlobalOptions {
    std::string config_file;
    std::string preset;
    std::string out_dir = ".";
    int threads = 0;
    std::uint64_t seed = 12345;
    std::vector<std::string> overrides;
    int n_override = -1;
    double gc_override = -1.0;
};

CommandContext build_context(const GlobalOptions& opts) {
    CommandContext ctx;
    if (!opts.preset.empty()) ctx.config.apply_preset(opts.preset);
    if (!opts.config_file.empty()) ctx.config.load_file(opts.config_file);
    for (const std::string& kv : opts.overrides) ctx.config.set_kv(kv);
    if (opts.n_override >= 0) ctx.config.set("model.N", std::to_string(opts.n_override));
    if (opts.gc_override >= 0.0)
        ctx.config.set("model.g_c", qstirap::format_value(opts.gc_override));
    ctx.out_dir = opts.out_dir;
    std::filesystem::create_directories(ctx.out_dir);
    ctx.threads = opts.threads > 0 ? opts.threads : qstirap::default_threads();
    ctx.seed = opts.seed;
    return ctx;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Three-cavity Jaynes-Cummings STIRAP simulator"};
    app.set_version_flag("--version", qstirap::kVersion);
    app.require_subcommand(1);

    GlobalOptions opts;
    app.add_option("--config", opts.config_file, "key = value config file");
    app.add_option("--preset", opts.preset, "named parameter preset (fig1 ... fig6a)");
    app.add_option("--out-dir", opts.out_dir, "output directory");
    app.add_option("--threads", opts.threads, "worker thread cap (default: all cores)");
    app.add_option("--seed", opts.seed, "random seed for perturbation directions");
    app.add_option("--set", opts.overrides, "override a parameter: section.key=value")
        ->take_all();
    app.add_option("--N", opts.n_override, "shortcut for --set model.N=...");
    app.add_option("--g-c", opts.gc_override, "shortcut for --set model.g_c=...");

    int (*command)(const CommandContext&) = nullptr;
    const auto add_command = [&](const std::string& name, const std::string& help,
                                 int (*fn)(const CommandContext&)) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->fallthrough();  // global options may follow the subcommand
        sub->callback([&command, fn] { command = fn; });
    };
    add_command("spectrum", "eigenspectrum scan, tracked branch, SP branch",
                qstirap::cli::cmd_spectrum);
    add_command("lyapunov", "finite-time Lyapunov exponents and chaotic window",
                qstirap::cli::cmd_lyapunov);
    add_command("otoc", "microcanonical/thermal OTOC series with growth fits",
                qstirap::cli::cmd_otoc);
    add_command("purity", "one-particle purity along the tracked route",
                qstirap::cli::cmd_purity);
    add_command("sweep", "real-time STIRAP sweep with adiabatic projections",
                qstirap::cli::cmd_sweep);
    add_command("efficiency", "transfer efficiency over the N-scaling family",
                qstirap::cli::cmd_efficiency);

    try {
        app.parse(argc, argv);
        return command(build_context(opts));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const qstirap::InvalidArgument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const qstirap::NumericError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
