#include "meltcast/meltcast.h"

#include <cstring>
#include <new>
#include <string>

#include "meltcast/config.hpp"
#include "meltcast/conformal.hpp"
#include "meltcast/errors.hpp"
#include "meltcast/gbm.hpp"
#include "meltcast/model_io.hpp"
#include "meltcast/pipeline.hpp"

struct mc_config {
    meltcast::PipelineConfig cfg;
};

struct mc_booster {
    meltcast::gbm::TrainedBooster model;
};

struct mc_calibrator {
    meltcast::conformal::ConformalCalibrator model;
};

namespace {

thread_local std::string g_last_error;

mc_status fail(mc_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

template <class Fn>
mc_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        fn();
        return MC_OK;
    } catch (const meltcast::Error& e) {
        return fail(static_cast<mc_status>(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(MC_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(MC_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(MC_ERR_INTERNAL, "unknown failure");
    }
}

using StageFn = unsigned (*)(const meltcast::PipelineConfig&, const meltcast::pipeline::RunOptions&);

mc_status run_stage(StageFn stage, const mc_config* cfg, unsigned flags, mc_log_fn log, void* user,
                    unsigned* warnings) {
    if (!cfg) return fail(MC_ERR_INVALID_ARGUMENT, "config handle is NULL");
    if (warnings) *warnings = 0;
    return guarded([&] {
        meltcast::pipeline::RunOptions opt;
        opt.override_alpha_change = (flags & MC_RUN_OVERRIDE_ALPHA_CHANGE) != 0;
        if (log) {
            opt.log = [log, user](meltcast::pipeline::LogLevel level, const std::string& msg) {
                log(static_cast<int>(level), msg.c_str(), user);
            };
        }
        const unsigned w = stage(cfg->cfg, opt);
        if (warnings) *warnings = w;
    });
}

}  // namespace

extern "C" {

const char* mc_version(void) { return MELTCAST_VERSION; }

const char* mc_last_error(void) { return g_last_error.c_str(); }

const char* mc_status_name(mc_status status) {
    switch (status) {
        case MC_OK: return "ok";
        case MC_ERR_INVALID_ARGUMENT: return "invalid argument";
        default:
            if (status >= MC_ERR_FORMAT && status <= MC_ERR_INTERNAL) {
                return meltcast::to_string(static_cast<meltcast::ErrorKind>(status));
            }
            return "unknown status";
    }
}

mc_status mc_config_new(mc_config** out) {
    if (!out) return fail(MC_ERR_INVALID_ARGUMENT, "output pointer is NULL");
    *out = nullptr;
    return guarded([&] { *out = new mc_config{}; });
}

mc_status mc_config_load(const char* path, mc_config** out) {
    if (!path || !out) return fail(MC_ERR_INVALID_ARGUMENT, "path or output pointer is NULL");
    *out = nullptr;
    return guarded([&] { *out = new mc_config{meltcast::load_config(path)}; });
}

mc_status mc_config_set(mc_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return fail(MC_ERR_INVALID_ARGUMENT, "NULL argument");
    return guarded([&] { cfg->cfg.set(key, value); });
}

mc_status mc_config_get(const mc_config* cfg, const char* key, char* buf, size_t buf_size, size_t* needed) {
    if (!cfg || !key) return fail(MC_ERR_INVALID_ARGUMENT, "NULL argument");
    return guarded([&] {
        for (const auto& [k, v] : cfg->cfg.entries()) {
            if (k != key) continue;
            if (needed) *needed = v.size() + 1;
            if (buf && buf_size > 0) {
                const auto n = std::min(buf_size - 1, v.size());
                std::memcpy(buf, v.data(), n);
                buf[n] = '\0';
                if (n < v.size()) throw meltcast::RangeError("buffer too small for config value");
            }
            return;
        }
        throw meltcast::ConfigError(std::string("unknown config key '") + key + "'");
    });
}

mc_status mc_config_validate(const mc_config* cfg) {
    if (!cfg) return fail(MC_ERR_INVALID_ARGUMENT, "config handle is NULL");
    return guarded([&] { cfg->cfg.validate(); });
}

void mc_config_free(mc_config* cfg) { delete cfg; }

mc_status mc_run_ingest(const mc_config* c, unsigned f, mc_log_fn l, void* u, unsigned* w) {
    return run_stage(&meltcast::pipeline::run_ingest, c, f, l, u, w);
}
mc_status mc_run_train(const mc_config* c, unsigned f, mc_log_fn l, void* u, unsigned* w) {
    return run_stage(&meltcast::pipeline::run_train, c, f, l, u, w);
}
mc_status mc_run_calibrate(const mc_config* c, unsigned f, mc_log_fn l, void* u, unsigned* w) {
    return run_stage(&meltcast::pipeline::run_calibrate, c, f, l, u, w);
}
mc_status mc_run_forecast(const mc_config* c, unsigned f, mc_log_fn l, void* u, unsigned* w) {
    return run_stage(&meltcast::pipeline::run_forecast, c, f, l, u, w);
}
mc_status mc_run_evaluate(const mc_config* c, unsigned f, mc_log_fn l, void* u, unsigned* w) {
    return run_stage(&meltcast::pipeline::run_evaluate, c, f, l, u, w);
}
mc_status mc_run_simulate(const mc_config* c, unsigned f, mc_log_fn l, void* u, unsigned* w) {
    return run_stage(&meltcast::pipeline::run_simulate, c, f, l, u, w);
}

mc_status mc_booster_load(const char* path, mc_booster** out) {
    if (!path || !out) return fail(MC_ERR_INVALID_ARGUMENT, "path or output pointer is NULL");
    *out = nullptr;
    return guarded([&] { *out = new mc_booster{meltcast::model_io::load_booster_file(path)}; });
}

mc_status mc_booster_save(const mc_booster* booster, const char* path) {
    if (!booster || !path) return fail(MC_ERR_INVALID_ARGUMENT, "NULL argument");
    return guarded([&] { meltcast::model_io::save_booster_file(booster->model, path); });
}

size_t mc_booster_feature_count(const mc_booster* booster) {
    return booster ? booster->model.feature_names.size() : 0;
}

int mc_booster_best_iter(const mc_booster* booster) { return booster ? booster->model.best_iter : -1; }

mc_status mc_booster_predict(const mc_booster* booster, const double* rows, size_t n_rows, size_t n_cols,
                             double* out) {
    if (!booster || (n_rows > 0 && (!rows || !out))) return fail(MC_ERR_INVALID_ARGUMENT, "NULL argument");
    return guarded([&] {
        if (n_cols != booster->model.feature_names.size()) {
            throw meltcast::ConfigError("row width does not match the booster's feature count");
        }
        for (size_t i = 0; i < n_rows; ++i) {
            out[i] = booster->model.predict_row({rows + i * n_cols, n_cols}, booster->model.best_iter);
        }
    });
}

void mc_booster_free(mc_booster* booster) { delete booster; }

mc_status mc_calibrator_load(const char* path, mc_calibrator** out) {
    if (!path || !out) return fail(MC_ERR_INVALID_ARGUMENT, "path or output pointer is NULL");
    *out = nullptr;
    return guarded([&] { *out = new mc_calibrator{meltcast::model_io::load_calibrator_file(path)}; });
}

double mc_calibrator_alpha(const mc_calibrator* calibrator) { return calibrator ? calibrator->model.alpha : 0.0; }

mc_status mc_calibrator_region(const mc_calibrator* calibrator, const mc_booster* booster, const double* row,
                               size_t n_cols, double alpha, double* forecast, double* lower, double* upper,
                               int* regime) {
    if (!calibrator || !booster || !row) return fail(MC_ERR_INVALID_ARGUMENT, "NULL argument");
    return guarded([&] {
        meltcast::Dataset ds;
        ds.feature_names = booster->model.feature_names;
        if (n_cols != ds.feature_names.size()) {
            throw meltcast::ConfigError("row width does not match the booster's feature count");
        }
        ds.features = meltcast::Matrix(0, n_cols);
        ds.features.append_row({row, n_cols});
        ds.response.push_back(0.0);
        ds.dates.emplace_back();
        const auto r = meltcast::conformal::forecast_with_region(calibrator->model, booster->model, ds,
                                                                  meltcast::conformal::IntervalMode::kAdaptive, alpha);
        if (forecast) *forecast = r[0].forecast;
        if (lower) *lower = r[0].lower;
        if (upper) *upper = r[0].upper;
        if (regime) *regime = static_cast<int>(r[0].regime);
    });
}

void mc_calibrator_free(mc_calibrator* calibrator) { delete calibrator; }

mc_status mc_quantile_loss(double y, double y_hat, double tau, double* out) {
    if (!out) return fail(MC_ERR_INVALID_ARGUMENT, "output pointer is NULL");
    return guarded([&] { *out = meltcast::gbm::quantile_loss(y, y_hat, tau); });
}

}  // extern "C"
