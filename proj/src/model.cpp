#include "ecl/model.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ecl/errors.hpp"
#include "ecl/rng.hpp"

namespace ecl {

void NetConfig::validate() const {
    if (input_dim < 1 || feature_dim < 1 || hidden_dim < 1)
        throw ConfigError("net config: dimensions must be >= 1");
    if (num_classes < 2) throw ConfigError("net config: needs >= 2 classes");
    for (int w : extractor_widths)
        if (w < 1) throw ConfigError("net config: extractor width must be >= 1");
}

bool ModelParams::all_finite() const {
    for (const auto& t : extractor_w)
        if (!t.all_finite()) return false;
    for (const auto& t : extractor_b)
        if (!t.all_finite()) return false;
    return proj_w1.all_finite() && proj_w2.all_finite() && clf_w.all_finite() &&
           clf_b.all_finite() && proto_t.all_finite() &&
           proto_w1.all_finite() && proto_w2.all_finite();
}

namespace {

Tensor uniform_init(Rng& rng, int rows, int cols, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor t(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) t.at(r, c) = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

ModelParams init_params(const NetConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.init_seed);
    ModelParams p;
    p.net = cfg;
    int in = cfg.input_dim;
    for (int w : cfg.extractor_widths) {
        p.extractor_w.push_back(uniform_init(rng, w, in, in));
        p.extractor_b.push_back(uniform_init(rng, 1, w, in));
        in = w;
    }
    p.extractor_w.push_back(uniform_init(rng, cfg.feature_dim, in, in));
    p.extractor_b.push_back(uniform_init(rng, 1, cfg.feature_dim, in));
    p.proj_w1 = uniform_init(rng, cfg.hidden_dim, cfg.feature_dim, cfg.feature_dim);
    p.proj_w2 = uniform_init(rng, cfg.feature_dim, cfg.hidden_dim, cfg.hidden_dim);
    p.clf_w = uniform_init(rng, cfg.num_classes, cfg.feature_dim, cfg.feature_dim);
    p.clf_b = uniform_init(rng, 1, cfg.num_classes, cfg.feature_dim);
    p.proto_t = Tensor::identity(cfg.feature_dim);
    p.proto_w1 = uniform_init(rng, cfg.hidden_dim, cfg.feature_dim, cfg.feature_dim);
    p.proto_w2 = uniform_init(rng, cfg.feature_dim, cfg.hidden_dim, cfg.hidden_dim);
    return p;
}

ParamLeaves make_leaves(Tape& t, const ModelParams& p) {
    ParamLeaves pl;
    for (const auto& w : p.extractor_w) pl.extractor_w.push_back(t.leaf(w));
    for (const auto& b : p.extractor_b) pl.extractor_b.push_back(t.leaf(b));
    pl.proj_w1 = t.leaf(p.proj_w1);
    pl.proj_w2 = t.leaf(p.proj_w2);
    pl.clf_w = t.leaf(p.clf_w);
    pl.clf_b = t.leaf(p.clf_b);
    pl.proto_t = t.leaf(p.proto_t);
    pl.proto_w1 = t.leaf(p.proto_w1);
    pl.proto_w2 = t.leaf(p.proto_w2);
    return pl;
}

namespace {

// x (n x in) * W^T (in x out) + broadcast bias.
Value linear(Tape& t, Value x, Value w, Value b) {
    Value h = t.matmul(x, t.transpose(w));
    Value ones = t.constant(Tensor::ones(t.value(x).rows(), 1));
    return t.add(h, t.matmul(ones, b));
}

}  // namespace

Value extract(Tape& t, const ParamLeaves& pl, Value x) {
    // relu between layers; the feature layer itself stays linear so rows
    // cannot die into the bias-free projector
    Value h = x;
    for (std::size_t l = 0; l < pl.extractor_w.size(); ++l) {
        if (l > 0) h = t.relu(h);
        h = linear(t, h, pl.extractor_w[l], pl.extractor_b[l]);
    }
    return h;
}

Value project(Tape& t, const ParamLeaves& pl, Value f) {
    Value h = t.relu(t.matmul(f, t.transpose(pl.proj_w1)));
    Value z = t.matmul(h, t.transpose(pl.proj_w2));
    return t.row_l2_normalize(z);
}

Value classify(Tape& t, const ParamLeaves& pl, Value f) {
    return linear(t, f, pl.clf_w, pl.clf_b);
}

Value prototypes(Tape& t, const ParamLeaves& pl, ProtoSource source,
                 Value z_for_means, const BatchIndex* idx) {
    switch (source) {
        case ProtoSource::linear_transform:
            return t.matmul(pl.proto_t, t.transpose(pl.clf_w));
        case ProtoSource::nonlinear_mlp:
            return t.matmul(pl.proto_w2,
                            t.relu(t.matmul(pl.proto_w1, t.transpose(pl.clf_w))));
        case ProtoSource::class_means: {
            if (!z_for_means.valid() || idx == nullptr)
                throw UnavailableError(
                    "class-means prototypes need a representation snapshot");
            const int n = t.value(z_for_means).rows();
            Tensor avg(idx->num_classes, n);
            for (int c = 0; c < idx->num_classes; ++c) {
                const auto& rows = idx->class_rows[static_cast<std::size_t>(c)];
                if (rows.empty())
                    throw UnavailableError(
                        "class-means prototypes: class " + std::to_string(c) +
                        " absent from the snapshot");
                for (int r : rows)
                    avg.at(c, r) = 1.0 / static_cast<double>(rows.size());
            }
            return t.transpose(t.matmul(t.constant(std::move(avg)), z_for_means));
        }
    }
    throw ConfigError("unknown prototype source");
}

Tensor extract_eval(const ModelParams& p, const Tensor& x) {
    Tape t;
    ParamLeaves pl = make_leaves(t, p);
    return t.value(extract(t, pl, t.constant(x)));
}

Tensor project_eval(const ModelParams& p, const Tensor& f) {
    Tape t;
    ParamLeaves pl = make_leaves(t, p);
    return t.value(project(t, pl, t.constant(f)));
}

Tensor classify_eval(const ModelParams& p, const Tensor& f) {
    Tape t;
    ParamLeaves pl = make_leaves(t, p);
    return t.value(classify(t, pl, t.constant(f)));
}

namespace {

using nlohmann::json;

json tensor_to_json(const Tensor& t) {
    json j;
    j["rows"] = t.rows();
    j["cols"] = t.cols();
    j["data"] = std::vector<double>(t.data(), t.data() + t.size());
    return j;
}

Tensor tensor_from_json(const json& j) {
    return Tensor::from_data(j.at("rows").get<int>(), j.at("cols").get<int>(),
                             j.at("data").get<std::vector<double>>());
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& p, int epoch) {
    json j;
    j["epoch"] = epoch;
    j["net"] = {{"input_dim", p.net.input_dim},
                {"feature_dim", p.net.feature_dim},
                {"hidden_dim", p.net.hidden_dim},
                {"num_classes", p.net.num_classes},
                {"extractor_widths", p.net.extractor_widths},
                {"init_seed", p.net.init_seed}};
    json params;
    json ew = json::array(), eb = json::array();
    for (const auto& t : p.extractor_w) ew.push_back(tensor_to_json(t));
    for (const auto& t : p.extractor_b) eb.push_back(tensor_to_json(t));
    params["extractor_w"] = std::move(ew);
    params["extractor_b"] = std::move(eb);
    params["proj_w1"] = tensor_to_json(p.proj_w1);
    params["proj_w2"] = tensor_to_json(p.proj_w2);
    params["clf_w"] = tensor_to_json(p.clf_w);
    params["clf_b"] = tensor_to_json(p.clf_b);
    params["proto_t"] = tensor_to_json(p.proto_t);
    params["proto_w1"] = tensor_to_json(p.proto_w1);
    params["proto_w2"] = tensor_to_json(p.proto_w2);
    j["params"] = std::move(params);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write checkpoint: " + path);
    out << j.dump(2) << "\n";
}

ModelParams load_checkpoint(const std::string& path, int* epoch_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read checkpoint: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("malformed checkpoint " + path + ": " + e.what());
    }
    ModelParams p;
    const json& net = j.at("net");
    p.net.input_dim = net.at("input_dim").get<int>();
    p.net.feature_dim = net.at("feature_dim").get<int>();
    p.net.hidden_dim = net.at("hidden_dim").get<int>();
    p.net.num_classes = net.at("num_classes").get<int>();
    p.net.extractor_widths = net.at("extractor_widths").get<std::vector<int>>();
    p.net.init_seed = net.at("init_seed").get<std::uint64_t>();
    const json& params = j.at("params");
    for (const auto& t : params.at("extractor_w"))
        p.extractor_w.push_back(tensor_from_json(t));
    for (const auto& t : params.at("extractor_b"))
        p.extractor_b.push_back(tensor_from_json(t));
    p.proj_w1 = tensor_from_json(params.at("proj_w1"));
    p.proj_w2 = tensor_from_json(params.at("proj_w2"));
    p.clf_w = tensor_from_json(params.at("clf_w"));
    p.clf_b = tensor_from_json(params.at("clf_b"));
    p.proto_t = tensor_from_json(params.at("proto_t"));
    p.proto_w1 = tensor_from_json(params.at("proto_w1"));
    p.proto_w2 = tensor_from_json(params.at("proto_w2"));
    if (epoch_out != nullptr) *epoch_out = j.at("epoch").get<int>();
    return p;
}

}  // namespace ecl
