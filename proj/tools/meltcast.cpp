#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "meltcast/meltcast.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitWarnings = 2;
constexpr int kExitAlphaRefused = 3;

void print_log(int level, const char* message, void*) {
    if (level == MC_LOG_INFO) {
        std::printf("%s\n", message);
        std::fflush(stdout);
    } else {
        std::fprintf(stderr, "%s: %s\n", level == MC_LOG_WARNING ? "warning" : "error", message);
    }
}

int report_failure(mc_status s) {
    std::fprintf(stderr, "error (%s): %s\n", mc_status_name(s), mc_last_error());
    return s == MC_ERR_ALPHA_CHANGE_REFUSED ? kExitAlphaRefused : kExitError;
}

using StageFn = mc_status (*)(const mc_config*, unsigned, mc_log_fn, void*, unsigned*);

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Short-lead temperature forecasts with regime-split conformal prediction regions"};
    app.set_version_flag("--version", std::string(mc_version()));
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    long long seed = -1;
    std::string out_dir;
    bool override_alpha = false;
    app.add_option("--config", config_path, "Pipeline config file (key=value)");
    app.add_option("--seed", seed, "Random seed, overrides the config")->check(CLI::NonNegativeNumber);
    app.add_option("--out-dir", out_dir, "Output directory, overrides the config");
    app.add_flag("--override-alpha-change", override_alpha,
                 "Allow a new alpha on a test set that was already evaluated");

    struct Command {
        const char* name;
        const char* help;
        StageFn fn;
    };
    const Command commands[] = {
        {"ingest", "Build lagged feature tables from station CSVs", &mc_run_ingest},
        {"train", "Fit the quantile gradient-boosting model", &mc_run_train},
        {"calibrate", "Whiten calibration residuals and fit per-regime forests", &mc_run_calibrate},
        {"forecast", "Write prediction regions for the test year", &mc_run_forecast},
        {"evaluate", "Coverage, bin analysis, importance and partial dependence reports", &mc_run_evaluate},
        {"simulate", "Write synthetic station files and a matching config", &mc_run_simulate},
    };
    for (const auto& c : commands) app.add_subcommand(c.name, c.help);

    CLI11_PARSE(app, argc, argv);

    mc_config* cfg = nullptr;
    mc_status s = config_path.empty() ? mc_config_new(&cfg) : mc_config_load(config_path.c_str(), &cfg);
    if (s != MC_OK) return report_failure(s);
    if (seed >= 0) s = mc_config_set(cfg, "seed", std::to_string(seed).c_str());
    if (s == MC_OK && !out_dir.empty()) s = mc_config_set(cfg, "out_dir", out_dir.c_str());
    if (s != MC_OK) {
        mc_config_free(cfg);
        return report_failure(s);
    }

    int code = kExitError;
    for (const auto& c : commands) {
        if (!app.got_subcommand(c.name)) continue;
        unsigned warnings = 0;
        s = c.fn(cfg, override_alpha ? MC_RUN_OVERRIDE_ALPHA_CHANGE : 0u, &print_log, nullptr, &warnings);
        code = s != MC_OK ? report_failure(s) : warnings != 0 ? kExitWarnings : kExitOk;
        break;
    }
    mc_config_free(cfg);
    return code;
}
