#pragma once

#include <cstdint>
#include <filesystem>

#include "run_config.hpp"

namespace qstirap::cli {

struct CommandContext {
    RunConfig config;
    std::filesystem::path out_dir = ".";
    int threads = 1;
    std::uint64_t seed = 12345;
};

// Exit codes: 0 success, 2 numerical failure, 3 partial sweep success.
// Usage problems throw UsageError (mapped to 1 in main).
int cmd_spectrum(const CommandContext& ctx);
int cmd_lyapunov(const CommandContext& ctx);
int cmd_otoc(const CommandContext& ctx);
int cmd_purity(const CommandContext& ctx);
int cmd_sweep(const CommandContext& ctx);
int cmd_efficiency(const CommandContext& ctx);

}  // namespace qstirap::cli
