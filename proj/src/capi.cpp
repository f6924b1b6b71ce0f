#include "mgml/mgml_c.h"

#include <cstring>
#include <memory>
#include <string>

#include "mgml/net.hpp"
#include "mgml/runner.hpp"
#include "mgml/serialize.hpp"

namespace {

thread_local std::string g_last_error;

char* copy_out(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Runs `fn` and folds any exception into a status code plus the
// thread-local message. ConfigError keeps its dedicated exit code so the
// CLI can distinguish bad input from genuine failures.
template <typename Fn>
mgml_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return MGML_OK;
    } catch (const mgml::ConfigError& e) {
        g_last_error = e.what();
        return MGML_ERR_CONFIG;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return MGML_ERR_RUNTIME;
    } catch (...) {
        g_last_error = "unknown error";
        return MGML_ERR_RUNTIME;
    }
}

std::string arg(const char* s) { return s ? std::string(s) : std::string(); }

void require(bool ok, const char* what) {
    if (!ok) throw mgml::ConfigError(std::string("missing argument: ") + what);
}

} // namespace

struct mgml_model {
    mgml::ModelConfig config;
    std::unique_ptr<mgml::MgmlNet> net;
};

extern "C" {

const char* mgml_last_error(void) { return g_last_error.c_str(); }

void mgml_string_free(char* s) { delete[] s; }

mgml_status mgml_train(const char* config_path, const char* out_dir,
                       long long seed_override, const char* branches) {
    return guarded([&] {
        require(config_path, "config_path");
        require(out_dir, "out_dir");
        mgml::run_train(config_path, out_dir, seed_override, arg(branches));
    });
}

mgml_status mgml_eval(const char* config_path, const char* checkpoint_path,
                      const char* branches, char** out_json) {
    return guarded([&] {
        require(config_path, "config_path");
        require(checkpoint_path, "checkpoint_path");
        require(out_json, "out_json");
        *out_json = copy_out(
            mgml::run_eval(config_path, checkpoint_path, arg(branches)));
    });
}

mgml_status mgml_ablate(const char* config_path, const char* out_dir,
                        long long seed_override, char** out_table) {
    return guarded([&] {
        require(config_path, "config_path");
        require(out_table, "out_table");
        *out_table =
            copy_out(mgml::run_ablate(config_path, arg(out_dir), seed_override));
    });
}

mgml_status mgml_crop_compare(const char* config_path, const char* out_dir,
                              long long seed_override, char** out_table) {
    return guarded([&] {
        require(config_path, "config_path");
        require(out_table, "out_table");
        *out_table = copy_out(
            mgml::run_crop_compare(config_path, arg(out_dir), seed_override));
    });
}

mgml_status mgml_dump_features(const char* config_path,
                               const char* checkpoint_path, int sample_index,
                               const char* out_dir) {
    return guarded([&] {
        require(config_path, "config_path");
        require(checkpoint_path, "checkpoint_path");
        require(out_dir, "out_dir");
        mgml::run_dump_features(config_path, checkpoint_path, sample_index,
                                out_dir);
    });
}

mgml_status mgml_gen_data(const char* config_path, const char* out_dir) {
    return guarded([&] {
        require(config_path, "config_path");
        require(out_dir, "out_dir");
        mgml::run_gen_data(config_path, out_dir);
    });
}

mgml_status mgml_inspect_anchors(int h, int w, double sigma,
                                 const char* strategy, int k, char** out_text) {
    return guarded([&] {
        require(strategy, "strategy");
        require(out_text, "out_text");
        *out_text = copy_out(mgml::run_inspect_anchors(h, w, sigma, strategy, k));
    });
}

mgml_status mgml_model_load(const char* config_path,
                            const char* checkpoint_path, mgml_model** out_model) {
    return guarded([&] {
        require(config_path, "config_path");
        require(checkpoint_path, "checkpoint_path");
        require(out_model, "out_model");
        mgml::RunConfig cfg = mgml::parse_config_file(config_path);
        auto model = std::make_unique<mgml_model>();
        model->config = cfg.model;
        model->net = std::make_unique<mgml::MgmlNet>(cfg.model, cfg.train.seed);
        std::vector<mgml::ParamPtr> params = model->net->params();
        mgml::load_checkpoint(params, checkpoint_path);
        *out_model = model.release();
    });
}

mgml_status mgml_model_predict(const mgml_model* model, const double* image,
                               int channels, int height, int width,
                               int* out_class) {
    return guarded([&] {
        require(model, "model");
        require(image, "image");
        require(out_class, "out_class");
        mgml::Tensor x({1, channels, height, width});
        std::memcpy(x.data().data(), image,
                    sizeof(double) * x.shape().numel());
        mgml::BranchOutputs out = model->net->forward(x);
        *out_class = out.predicted[0];
    });
}

mgml_status mgml_model_num_classes(const mgml_model* model, int* out_classes) {
    return guarded([&] {
        require(model, "model");
        require(out_classes, "out_classes");
        *out_classes = model->config.num_classes;
    });
}

void mgml_model_free(mgml_model* model) { delete model; }

} // extern "C"
