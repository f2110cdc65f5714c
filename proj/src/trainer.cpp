#include "ecl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "ecl/errors.hpp"
#include "ecl/losses.hpp"

namespace ecl {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train config: batch size must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("train config: lr must be > 0");
    if (momentum < 0.0 || momentum >= 1.0)
        throw ConfigError("train config: momentum must be in [0,1)");
    if (weight_decay < 0.0) throw ConfigError("train config: negative weight decay");
    if (!(lr_factor > 0.0) || lr_factor > 1.0)
        throw ConfigError("train config: lr factor must be in (0,1]");
    for (std::size_t i = 1; i < milestones.size(); ++i)
        if (milestones[i] <= milestones[i - 1])
            throw ConfigError("train config: milestones must be strictly increasing");
    if (eval_every < 1) throw ConfigError("train config: eval_every must be >= 1");
    loss.validate();
    net.validate();
}

std::vector<int> TrainConfig::effective_milestones() const {
    if (!milestones.empty()) return milestones;
    const int m1 = static_cast<int>(std::lround(0.8 * epochs));
    const int m2 = static_cast<int>(std::lround(0.9 * epochs));
    if (m1 < 1 || m2 <= m1) return {};
    return {m1, m2};
}

void sgd_step(Tensor& param, const Tensor& grad, Tensor& velocity, double lr,
              double momentum, double weight_decay) {
    require_same_shape(param, grad, "sgd_step");
    require_same_shape(param, velocity, "sgd_step");
    for (std::size_t k = 0; k < param.size(); ++k) {
        const double g = grad.data()[k] + weight_decay * param.data()[k];
        velocity.data()[k] = momentum * velocity.data()[k] + g;
        param.data()[k] -= lr * velocity.data()[k];
    }
}

double lr_schedule(int epoch, double base_lr, const std::vector<int>& milestones,
                   double factor) {
    double lr = base_lr;
    for (int m : milestones)
        if (m <= epoch) lr *= factor;
    return lr;
}

Evaluation evaluate(const ModelParams& params, const Dataset& test,
                    const std::vector<double>& priors,
                    bool compensated_inference, bool sd_on_extractor_features,
                    bool fc_ms_on_extractor_features) {
    if (test.size() == 0) throw ShapeError("evaluate: empty test set");
    for (int c = 0; c < test.num_classes; ++c)
        if (test.class_counts[static_cast<std::size_t>(c)] == 0)
            throw UnavailableError("evaluate: class " + std::to_string(c) +
                                   " missing from the test set");

    Evaluation ev;
    ev.f = extract_eval(params, test.inputs);
    Tensor logits = classify_eval(params, ev.f);
    if (compensated_inference) {
        if (static_cast<int>(priors.size()) != test.num_classes)
            throw ConfigError("evaluate: priors size mismatch");
        for (int i = 0; i < logits.rows(); ++i)
            for (int c = 0; c < logits.cols(); ++c)
                logits.at(i, c) += std::log(priors[static_cast<std::size_t>(c)]);
    }

    std::vector<int> correct(static_cast<std::size_t>(test.num_classes), 0);
    int total_correct = 0;
    for (int i = 0; i < logits.rows(); ++i) {
        int arg = 0;
        for (int c = 1; c < logits.cols(); ++c)
            if (logits.at(i, c) > logits.at(i, arg)) arg = c;
        const int y = test.labels[static_cast<std::size_t>(i)];
        if (arg == y) {
            ++correct[static_cast<std::size_t>(y)];
            ++total_correct;
        }
    }
    ev.acc_overall = static_cast<double>(total_correct) / test.size();
    ev.acc_per_class.resize(static_cast<std::size_t>(test.num_classes));
    for (int c = 0; c < test.num_classes; ++c)
        ev.acc_per_class[static_cast<std::size_t>(c)] =
            static_cast<double>(correct[static_cast<std::size_t>(c)]) /
            test.class_counts[static_cast<std::size_t>(c)];

    ev.z = project_eval(params, ev.f);
    const Tensor& fcms_space = fc_ms_on_extractor_features ? ev.f : ev.z;
    const Tensor& sd_space = sd_on_extractor_features ? ev.f : ev.z;
    ev.geometry.fc = fc_metric(fcms_space, test.labels, test.num_classes);
    ev.geometry.ms = ms_metric(fcms_space, test.labels, test.num_classes);
    ev.geometry.sd = sd_metric(params.clf_w, sd_space, test.labels, test.num_classes);
    ev.geometry.class_means = class_means(ev.z, test.labels, test.num_classes);
    ev.geometry.global_mean = Tensor(1, ev.geometry.class_means.cols());
    for (int c = 0; c < test.num_classes; ++c)
        for (int k = 0; k < ev.geometry.class_means.cols(); ++k)
            ev.geometry.global_mean.at(0, k) +=
                ev.geometry.class_means.at(c, k) / test.num_classes;
    ev.geometry.mean_cosines = mean_cosines(ev.geometry.class_means);
    try {
        ev.geometry.pca_coords = pca2(ev.z).coords;
    } catch (const DegenerateError&) {
        ev.geometry.pca_coords = Tensor();  // geometry too collapsed to project
    }
    return ev;
}

namespace {

struct ParamRefs {
    std::vector<Tensor*> tensors;
    std::vector<Value> leaves;  // refreshed every batch
};

std::vector<Tensor*> list_params(ModelParams& p, ProtoSource source) {
    std::vector<Tensor*> out;
    for (auto& t : p.extractor_w) out.push_back(&t);
    for (auto& t : p.extractor_b) out.push_back(&t);
    out.push_back(&p.proj_w1);
    out.push_back(&p.proj_w2);
    out.push_back(&p.clf_w);
    out.push_back(&p.clf_b);
    if (source == ProtoSource::linear_transform) out.push_back(&p.proto_t);
    if (source == ProtoSource::nonlinear_mlp) {
        out.push_back(&p.proto_w1);
        out.push_back(&p.proto_w2);
    }
    return out;
}

std::vector<Value> list_leaves(const ParamLeaves& pl, ProtoSource source) {
    std::vector<Value> out;
    for (Value v : pl.extractor_w) out.push_back(v);
    for (Value v : pl.extractor_b) out.push_back(v);
    out.push_back(pl.proj_w1);
    out.push_back(pl.proj_w2);
    out.push_back(pl.clf_w);
    out.push_back(pl.clf_b);
    if (source == ProtoSource::linear_transform) out.push_back(pl.proto_t);
    if (source == ProtoSource::nonlinear_mlp) {
        out.push_back(pl.proto_w1);
        out.push_back(pl.proto_w2);
    }
    return out;
}

Tensor gather_rows(const Tensor& src, const std::vector<int>& rows) {
    Tensor out(static_cast<int>(rows.size()), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int c = 0; c < src.cols(); ++c)
            out.at(static_cast<int>(i), c) = src.at(rows[i], c);
    return out;
}

Tensor vstack(const Tensor& a, const Tensor& b) {
    Tensor out(a.rows() + b.rows(), a.cols());
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c) out.at(r, c) = a.at(r, c);
    for (int r = 0; r < b.rows(); ++r)
        for (int c = 0; c < b.cols(); ++c) out.at(a.rows() + r, c) = b.at(r, c);
    return out;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& train_set,
                  const Dataset& test_set) {
    cfg.validate();
    if (train_set.num_classes != cfg.net.num_classes)
        throw ConfigError("train: dataset has " +
                          std::to_string(train_set.num_classes) +
                          " classes, net expects " +
                          std::to_string(cfg.net.num_classes));
    if (train_set.inputs.cols() != cfg.net.input_dim)
        throw ConfigError("train: dataset dim mismatch");

    const auto t0 = std::chrono::steady_clock::now();

    TrainResult result;
    result.params = init_params(cfg.net);
    ModelParams& params = result.params;

    const ProtoSource source = cfg.loss.proto_source;
    std::vector<Tensor*> plist = list_params(params, source);
    std::vector<Tensor> velocity;
    velocity.reserve(plist.size());
    for (Tensor* t : plist) velocity.emplace_back(t->rows(), t->cols());

    // Disabling a loss via the mask is exactly lambda = 0.
    const double lam_bc = cfg.mask[0] ? cfg.loss.lambda_bc_ecl : 0.0;
    const double lam_cc = cfg.mask[1] ? cfg.loss.lambda_cc_ge : 0.0;
    const double lam_lc = cfg.mask[2] ? cfg.loss.lambda_lc : 0.0;

    std::vector<double> dataset_priors = train_set.priors;
    const auto milestones = cfg.effective_milestones();

    Rng rng(cfg.seed);
    const int n_train = train_set.size();

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = lr_schedule(epoch, cfg.lr, milestones, cfg.lr_factor);
        const auto batches = make_batches(n_train, cfg.batch_size, rng);

        double sum_bc = 0.0, sum_cc = 0.0, sum_lc = 0.0, sum_total = 0.0;
        int batch_no = 0;
        for (const auto& batch_rows : batches) {
            ++batch_no;
            Tensor xb = gather_rows(train_set.inputs, batch_rows);
            std::vector<int> yb;
            yb.reserve(batch_rows.size());
            for (int r : batch_rows)
                yb.push_back(train_set.labels[static_cast<std::size_t>(r)]);

            Tensor view1 = augment(xb, 1, cfg.data, rng);
            Tensor view2 = augment(xb, 2, cfg.data, rng);
            Tensor view3 = augment(xb, 3, cfg.data, rng);
            Tensor x_cl = vstack(view2, view3);
            std::vector<int> y_cl = yb;
            y_cl.insert(y_cl.end(), yb.begin(), yb.end());
            const BatchIndex idx = BatchIndex::build(y_cl, cfg.net.num_classes);

            Tape tape;
            ParamLeaves pl = make_leaves(tape, params);
            Value z = project(tape, pl, extract(tape, pl, tape.constant(x_cl)));
            Value protos = prototypes(tape, pl, source, z, &idx);
            Value logits = classify(tape, pl, extract(tape, pl, tape.constant(view1)));

            const std::vector<double> priors =
                cfg.loss.batch_priors
                    ? batch_frequency_priors(yb, cfg.net.num_classes)
                    : dataset_priors;

            Value l_bc = tapeops::bc_ecl_loss(tape, z, idx, protos, cfg.loss.tau,
                                              cfg.loss.own_class_includes_anchor);
            Value l_cc = tapeops::cc_ge_loss(tape, pl.clf_w, protos);
            Value l_lc = tapeops::lc_loss(tape, logits, yb, priors);
            Value total =
                tapeops::total_loss(tape, l_bc, l_cc, l_lc, lam_bc, lam_cc, lam_lc);

            const double v_bc = tape.value(l_bc).at(0, 0);
            const double v_cc = tape.value(l_cc).at(0, 0);
            const double v_lc = tape.value(l_lc).at(0, 0);
            const double v_total = tape.value(total).at(0, 0);
            if (!std::isfinite(v_total))
                throw NumericError(
                    "non-finite loss at epoch " + std::to_string(epoch) +
                    " batch " + std::to_string(batch_no) +
                    ": bc_ecl=" + std::to_string(v_bc) +
                    " cc_ge=" + std::to_string(v_cc) +
                    " lc=" + std::to_string(v_lc));
            sum_bc += v_bc;
            sum_cc += v_cc;
            sum_lc += v_lc;
            sum_total += v_total;

            tape.backward(total);
            std::vector<Value> leaves = list_leaves(pl, source);
            for (std::size_t k = 0; k < plist.size(); ++k)
                sgd_step(*plist[k], tape.grad(leaves[k]), velocity[k], lr,
                         cfg.momentum, cfg.weight_decay);
        }

        if (!params.all_finite())
            throw NumericError("non-finite parameter after epoch " +
                               std::to_string(epoch));

        if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
            Evaluation ev = evaluate(params, test_set, dataset_priors,
                                     cfg.compensated_inference,
                                     cfg.sd_on_extractor_features,
                                     cfg.fc_ms_on_extractor_features);
            EpochRecord rec;
            rec.epoch = epoch;
            const double nb = static_cast<double>(batches.size());
            rec.l_bc_ecl = sum_bc / nb;
            rec.l_cc_ge = sum_cc / nb;
            rec.l_lc = sum_lc / nb;
            rec.l_total = sum_total / nb;
            rec.lr = lr;
            rec.acc_overall = ev.acc_overall;
            rec.acc_per_class = ev.acc_per_class;
            rec.geometry = std::move(ev.geometry);
            result.history.records.push_back(std::move(rec));
        }
    }

    const auto t1 = std::chrono::steady_clock::now();
    result.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.mean_epoch_ms = 1000.0 * result.wall_seconds / cfg.epochs;
    return result;
}

}  // namespace ecl
