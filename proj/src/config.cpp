#include "ecl/config.hpp"

#include <fstream>

#include <json.hpp>

#include "ecl/errors.hpp"

namespace ecl {

using nlohmann::json;

namespace {

json to_json(const RunConfig& cfg) {
    const TrainConfig& t = cfg.trainer;
    json j;
    j["seed"] = cfg.seed;
    j["out"] = cfg.out_dir;
    j["data"] = {{"classes", t.data.num_classes},
                 {"input_dim", t.data.input_dim},
                 {"n_max", t.data.n_max},
                 {"imbalance", t.data.rho},
                 {"center_mode", to_string(t.data.center_mode)},
                 {"center_scale", t.data.center_scale},
                 {"min_center_dist", t.data.min_center_dist},
                 {"sigma_class", t.data.sigma_class},
                 {"sigma_aug", t.data.sigma_aug},
                 {"scale_jitter", {t.data.jitter_lo, t.data.jitter_hi}},
                 {"n_test_per_class", t.data.n_test_per_class},
                 {"seed", t.data.seed},
                 {"path", t.data_path}};
    j["net"] = {{"feature_dim", t.net.feature_dim},
                {"hidden_dim", t.net.hidden_dim},
                {"extractor_widths", t.net.extractor_widths},
                {"init_seed", t.net.init_seed}};
    j["loss"] = {{"tau", t.loss.tau},
                 {"lambda_bc_ecl", t.loss.lambda_bc_ecl},
                 {"lambda_cc_ge", t.loss.lambda_cc_ge},
                 {"lambda_lc", t.loss.lambda_lc},
                 {"prototype_source", to_string(t.loss.proto_source)},
                 {"own_class_includes_anchor", t.loss.own_class_includes_anchor},
                 {"batch_priors", t.loss.batch_priors}};
    j["train"] = {{"epochs", t.epochs},
                  {"batch_size", t.batch_size},
                  {"lr", t.lr},
                  {"momentum", t.momentum},
                  {"weight_decay", t.weight_decay},
                  {"milestones", t.milestones},
                  {"lr_factor", t.lr_factor},
                  {"eval_every", t.eval_every},
                  {"enable_bc_ecl", t.mask[0]},
                  {"enable_cc_ge", t.mask[1]},
                  {"enable_lc", t.mask[2]},
                  {"compensated_inference", t.compensated_inference},
                  {"sd_on_extractor_features", t.sd_on_extractor_features},
                  {"fc_ms_on_extractor_features", t.fc_ms_on_extractor_features},
                  {"seed", t.seed}};
    return j;
}

void reject_unknown(const json& given, const json& schema,
                    const std::string& prefix) {
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!schema.contains(it.key()))
            throw ConfigError("unknown config key: " + path);
        if (it.value().is_object()) {
            if (!schema.at(it.key()).is_object())
                throw ConfigError("config key is not a section: " + path);
            reject_unknown(it.value(), schema.at(it.key()), path);
        }
    }
}

template <typename T>
void read_if(const json& j, const char* key, T& out, const std::string& prefix) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for config key: " + prefix + key);
    }
}

void from_json_into(const json& j, RunConfig& cfg) {
    reject_unknown(j, to_json(default_run_config()), "");
    TrainConfig& t = cfg.trainer;
    read_if(j, "seed", cfg.seed, "");
    read_if(j, "out", cfg.out_dir, "");
    if (j.contains("data")) {
        const json& d = j.at("data");
        read_if(d, "classes", t.data.num_classes, "data.");
        read_if(d, "input_dim", t.data.input_dim, "data.");
        read_if(d, "n_max", t.data.n_max, "data.");
        read_if(d, "imbalance", t.data.rho, "data.");
        if (d.contains("center_mode")) {
            std::string s;
            read_if(d, "center_mode", s, "data.");
            t.data.center_mode = center_mode_from_string(s);
        }
        read_if(d, "center_scale", t.data.center_scale, "data.");
        read_if(d, "min_center_dist", t.data.min_center_dist, "data.");
        read_if(d, "sigma_class", t.data.sigma_class, "data.");
        read_if(d, "sigma_aug", t.data.sigma_aug, "data.");
        if (d.contains("scale_jitter")) {
            std::vector<double> jit;
            read_if(d, "scale_jitter", jit, "data.");
            if (jit.size() != 2)
                throw ConfigError("data.scale_jitter needs exactly [lo, hi]");
            t.data.jitter_lo = jit[0];
            t.data.jitter_hi = jit[1];
        }
        read_if(d, "n_test_per_class", t.data.n_test_per_class, "data.");
        read_if(d, "seed", t.data.seed, "data.");
        read_if(d, "path", t.data_path, "data.");
    }
    if (j.contains("net")) {
        const json& n = j.at("net");
        read_if(n, "feature_dim", t.net.feature_dim, "net.");
        read_if(n, "hidden_dim", t.net.hidden_dim, "net.");
        read_if(n, "extractor_widths", t.net.extractor_widths, "net.");
        read_if(n, "init_seed", t.net.init_seed, "net.");
    }
    if (j.contains("loss")) {
        const json& l = j.at("loss");
        read_if(l, "tau", t.loss.tau, "loss.");
        read_if(l, "lambda_bc_ecl", t.loss.lambda_bc_ecl, "loss.");
        read_if(l, "lambda_cc_ge", t.loss.lambda_cc_ge, "loss.");
        read_if(l, "lambda_lc", t.loss.lambda_lc, "loss.");
        if (l.contains("prototype_source")) {
            std::string s;
            read_if(l, "prototype_source", s, "loss.");
            t.loss.proto_source = proto_source_from_string(s);
        }
        read_if(l, "own_class_includes_anchor", t.loss.own_class_includes_anchor,
                "loss.");
        read_if(l, "batch_priors", t.loss.batch_priors, "loss.");
    }
    if (j.contains("train")) {
        const json& tr = j.at("train");
        read_if(tr, "epochs", t.epochs, "train.");
        read_if(tr, "batch_size", t.batch_size, "train.");
        read_if(tr, "lr", t.lr, "train.");
        read_if(tr, "momentum", t.momentum, "train.");
        read_if(tr, "weight_decay", t.weight_decay, "train.");
        read_if(tr, "milestones", t.milestones, "train.");
        read_if(tr, "lr_factor", t.lr_factor, "train.");
        read_if(tr, "eval_every", t.eval_every, "train.");
        read_if(tr, "enable_bc_ecl", t.mask[0], "train.");
        read_if(tr, "enable_cc_ge", t.mask[1], "train.");
        read_if(tr, "enable_lc", t.mask[2], "train.");
        read_if(tr, "compensated_inference", t.compensated_inference, "train.");
        read_if(tr, "sd_on_extractor_features", t.sd_on_extractor_features,
                "train.");
        read_if(tr, "fc_ms_on_extractor_features", t.fc_ms_on_extractor_features,
                "train.");
        read_if(tr, "seed", t.seed, "train.");
    }
    // dims tied to the data section
    t.net.input_dim = t.data.input_dim;
    t.net.num_classes = t.data.num_classes;
}

}  // namespace

std::string RunConfig::resolved_json() const { return to_json(*this).dump(2) + "\n"; }

RunConfig default_run_config() {
    RunConfig cfg;
    cfg.trainer.net.input_dim = cfg.trainer.data.input_dim;
    cfg.trainer.net.num_classes = cfg.trainer.data.num_classes;
    cfg.trainer.eval_every = 1;
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    RunConfig cfg = default_run_config();
    if (path.empty()) return cfg;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("malformed config " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");
    from_json_into(j, cfg);
    return cfg;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must be key=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    json patch;
    json* cursor = &patch;
    std::size_t start = 0;
    std::vector<std::string> parts;
    while (true) {
        const auto dot = path.find('.', start);
        if (dot == std::string::npos) {
            parts.push_back(path.substr(start));
            break;
        }
        parts.push_back(path.substr(start, dot - start));
        start = dot + 1;
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        (*cursor)[parts[i]] = json::object();
        cursor = &(*cursor)[parts[i]];
    }
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;  // bare strings allowed
    }
    (*cursor)[parts.back()] = value;

    // merge current state with the patch, then re-read (keeps validation in
    // one place)
    json merged = json::parse(cfg.resolved_json());
    merged.merge_patch(patch);
    RunConfig next = default_run_config();
    from_json_into(merged, next);
    cfg = next;
}

void derive_seeds(RunConfig& cfg) {
    // Distinct streams per section, all pinned by the master seed.
    cfg.trainer.data.seed = cfg.seed * 0x9E3779B97F4A7C15ULL + 1;
    cfg.trainer.net.init_seed = cfg.seed * 0x9E3779B97F4A7C15ULL + 2;
    cfg.trainer.seed = cfg.seed * 0x9E3779B97F4A7C15ULL + 3;
}

}  // namespace ecl
