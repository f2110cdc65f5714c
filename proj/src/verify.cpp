#include "ecl/verify.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ecl/data.hpp"
#include "ecl/errors.hpp"
#include "ecl/kernels.hpp"
#include "ecl/losses.hpp"
#include "ecl/metrics.hpp"
#include "ecl/model.hpp"

namespace ecl {

namespace {

Tensor random_unit_rows(Rng& rng, int n, int dim) {
    Tensor t(n, dim);
    for (int r = 0; r < n; ++r) {
        double sq = 0.0;
        while (sq < 1e-6) {
            sq = 0.0;
            for (int c = 0; c < dim; ++c) {
                t.at(r, c) = rng.normal();
                sq += t.at(r, c) * t.at(r, c);
            }
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (int c = 0; c < dim; ++c) t.at(r, c) *= inv;
    }
    return t;
}

// Random orthogonal matrix by Gram-Schmidt on a Gaussian sample.
Tensor random_rotation(Rng& rng, int dim) {
    Tensor q(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (;;) {
            for (int c = 0; c < dim; ++c) q.at(i, c) = rng.normal();
            for (int j = 0; j < i; ++j) {
                const double d = kernels::dot(q.row_ptr(i), q.row_ptr(j),
                                              static_cast<std::size_t>(dim));
                kernels::axpy(q.row_ptr(i), -d, q.row_ptr(j),
                              static_cast<std::size_t>(dim));
            }
            const double nrm = std::sqrt(kernels::sqnorm(
                q.row_ptr(i), static_cast<std::size_t>(dim)));
            if (nrm > 1e-3) {
                kernels::scale(q.row_ptr(i), q.row_ptr(i), 1.0 / nrm,
                               static_cast<std::size_t>(dim));
                break;
            }
        }
    }
    return q;
}

}  // namespace

RandomBatch random_unit_batch(Rng& rng, int num_classes, int feature_dim,
                              int pairs) {
    std::vector<int> labels;
    for (int p = 0; p < pairs; ++p) {
        const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes)));
        labels.push_back(y);
        labels.push_back(y);
    }
    Tensor z = random_unit_rows(rng, static_cast<int>(labels.size()), feature_dim);
    RandomBatch rb;
    rb.batch = ContrastBatch::make(std::move(z), std::move(labels), num_classes);
    rb.protos.p = t_transpose(random_unit_rows(rng, num_classes, feature_dim));
    return rb;
}

CollapsedBatch collapsed_symmetric_batch(Rng& rng, int num_classes,
                                         int feature_dim) {
    if (feature_dim < num_classes + 1)
        throw ConfigError("collapsed batch needs feature_dim >= C+1");
    const Tensor verts = simplex_centers(num_classes, feature_dim, 1.0);
    // Shared direction orthogonal to every vertex.
    Tensor w(1, feature_dim);
    w.at(0, num_classes) = 1.0;

    const Tensor q = random_rotation(rng, feature_dim);
    auto rotate = [&](const double* v, double* out) {
        for (int i = 0; i < feature_dim; ++i)
            out[i] = kernels::dot(q.row_ptr(i), v,
                                  static_cast<std::size_t>(feature_dim));
    };

    const double tilt = rng.uniform(0.4, 1.1);
    Tensor protos(feature_dim, num_classes);
    std::vector<Tensor> class_vec;
    Tensor wr(1, feature_dim);
    rotate(w.row_ptr(0), wr.row_ptr(0));
    for (int c = 0; c < num_classes; ++c) {
        Tensor u(1, feature_dim);
        rotate(verts.row_ptr(c), u.row_ptr(0));
        const double nrm = std::sqrt(kernels::sqnorm(
            u.row_ptr(0), static_cast<std::size_t>(feature_dim)));
        kernels::scale(u.row_ptr(0), u.row_ptr(0), 1.0 / nrm,
                       static_cast<std::size_t>(feature_dim));
        for (int k = 0; k < feature_dim; ++k)
            protos.at(k, c) =
                std::cos(tilt) * u.at(0, k) + std::sin(tilt) * wr.at(0, k);
        class_vec.push_back(std::move(u));
    }

    std::vector<int> labels;
    std::vector<const Tensor*> rows;
    for (int c = 0; c < num_classes; ++c) {
        const int n_c = 2 + static_cast<int>(rng.below(4));
        for (int k = 0; k < n_c; ++k) {
            labels.push_back(c);
            rows.push_back(&class_vec[static_cast<std::size_t>(c)]);
        }
    }
    Tensor z(static_cast<int>(labels.size()), feature_dim);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int k = 0; k < feature_dim; ++k)
            z.at(static_cast<int>(r), k) = rows[r]->at(0, k);

    CollapsedBatch cb;
    cb.batch = ContrastBatch::make(std::move(z), std::move(labels), num_classes);
    cb.protos.p = std::move(protos);
    cb.tau = rng.uniform(0.2, 1.0);
    return cb;
}

std::string serialize_instance(const ContrastBatch& batch,
                               const PrototypeSet& protos, double tau) {
    nlohmann::json j;
    j["tau"] = tau;
    j["num_classes"] = batch.index.num_classes;
    j["labels"] = batch.index.labels;
    std::vector<std::vector<double>> z;
    for (int r = 0; r < batch.z.rows(); ++r)
        z.emplace_back(batch.z.row_ptr(r), batch.z.row_ptr(r) + batch.z.cols());
    j["z"] = z;
    std::vector<std::vector<double>> p;
    for (int r = 0; r < protos.p.rows(); ++r)
        p.emplace_back(protos.p.row_ptr(r), protos.p.row_ptr(r) + protos.p.cols());
    j["protos"] = p;
    return j.dump();
}

SuiteReport run_bounds_suite(int instances, std::uint64_t seed) {
    SuiteReport rep;
    rep.name = "bounds";
    rep.instances = instances;
    rep.max_violation = -std::numeric_limits<double>::infinity();
    Rng rng(seed);
    for (int i = 0; i < instances; ++i) {
        const int c_n = 2 + static_cast<int>(rng.below(3));   // 2..4
        const int f = 2 + static_cast<int>(rng.below(7));     // 2..8
        const int pairs = 2 + static_cast<int>(rng.below(7)); // |B| in 4..16
        RandomBatch rb = random_unit_batch(rng, c_n, f, pairs);

        const double l1 = bc_ecl_loss(rb.batch, rb.protos, 1.0);
        const double b1 = bc_ecl_bound(rb.batch, rb.protos);
        const double l2 = bcl_loss(rb.batch, rb.protos, 1.0);
        const double b2 = bcl_bound(rb.batch, rb.protos);
        const double gap = std::max(b1 - l1, b2 - l2);
        if (gap > rep.max_violation) rep.max_violation = gap;
        if (gap > 1e-9) {
            ++rep.violations;
            if (rep.failing_instance_json.empty())
                rep.failing_instance_json =
                    serialize_instance(rb.batch, rb.protos, 1.0);
        }
    }
    return rep;
}

namespace {

// Pre-activations too close to zero make central differences step across the
// relu kink; resample such instances.
bool relu_margins_ok(const Tensor& preact, double margin) {
    for (std::size_t k = 0; k < preact.size(); ++k)
        if (std::abs(preact.data()[k]) < margin) return false;
    return true;
}

Tensor uniform_tensor(Rng& rng, int rows, int cols, double lo, double hi) {
    Tensor t(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) t.at(r, c) = rng.uniform(lo, hi);
    return t;
}

Tensor nonzero_rows_tensor(Rng& rng, int rows, int cols) {
    Tensor t(rows, cols);
    for (int r = 0; r < rows; ++r) {
        double sq = 0.0;
        while (sq < 0.09) {
            sq = 0.0;
            for (int c = 0; c < cols; ++c) {
                t.at(r, c) = rng.uniform(-1.0, 1.0);
                sq += t.at(r, c) * t.at(r, c);
            }
        }
    }
    return t;
}

}  // namespace

SuiteReport run_gradients_suite(int instances_per_loss, std::uint64_t seed) {
    SuiteReport rep;
    rep.name = "gradients";
    rep.instances = instances_per_loss * 5;
    Rng rng(seed);
    constexpr double kEps = 1e-5;
    double worst = 0.0;

    // bc_ecl / bcl over raw z-producing input and raw prototypes
    for (int which = 0; which < 2; ++which) {
        for (int i = 0; i < instances_per_loss; ++i) {
            const int c_n = 2 + static_cast<int>(rng.below(3));
            const int f = 2 + static_cast<int>(rng.below(4));
            const int pairs = 2 + static_cast<int>(rng.below(3));
            std::vector<int> labels;
            for (int p = 0; p < pairs; ++p) {
                const int y = static_cast<int>(rng.below(c_n));
                labels.push_back(y);
                labels.push_back(y);
            }
            const BatchIndex idx = BatchIndex::build(labels, c_n);
            const double tau = rng.uniform(0.25, 1.0);
            Tensor raw = nonzero_rows_tensor(rng, static_cast<int>(labels.size()), f);
            Tensor praw = t_transpose(nonzero_rows_tensor(rng, c_n, f));
            const bool bcl = which == 1;
            auto fn = [&idx, tau, bcl](Tape& t, const std::vector<Value>& ls) {
                Value z = t.row_l2_normalize(ls[0]);
                return bcl ? tapeops::bcl_loss(t, z, idx, ls[1], tau)
                           : tapeops::bc_ecl_loss(t, z, idx, ls[1], tau);
            };
            worst = std::max(worst, check_gradient(fn, {raw, praw}, kEps));
        }
    }

    // cc_ge over (W, T) through P = T W^T
    for (int i = 0; i < instances_per_loss; ++i) {
        const int c_n = 2 + static_cast<int>(rng.below(3));
        const int f = 2 + static_cast<int>(rng.below(4));
        Tensor w = nonzero_rows_tensor(rng, c_n, f);
        Tensor tr = nonzero_rows_tensor(rng, f, f);
        auto fn = [](Tape& t, const std::vector<Value>& ls) {
            Value p = t.matmul(ls[1], t.transpose(ls[0]));
            return tapeops::cc_ge_loss(t, ls[0], p);
        };
        worst = std::max(worst, check_gradient(fn, {w, tr}, kEps));
    }

    // lc over logits
    for (int i = 0; i < instances_per_loss; ++i) {
        const int c_n = 2 + static_cast<int>(rng.below(3));
        const int n = 2 + static_cast<int>(rng.below(7));
        std::vector<int> labels;
        for (int k = 0; k < n; ++k)
            labels.push_back(static_cast<int>(rng.below(c_n)));
        std::vector<double> h(static_cast<std::size_t>(c_n));
        double s = 0.0;
        for (auto& v : h) {
            v = rng.uniform(0.05, 1.0);
            s += v;
        }
        for (auto& v : h) v /= s;
        Tensor logits = uniform_tensor(rng, n, c_n, -1.0, 1.0);
        auto fn = [&labels, &h](Tape& t, const std::vector<Value>& ls) {
            return tapeops::lc_loss(t, ls[0], labels, h);
        };
        worst = std::max(worst, check_gradient(fn, {logits}, kEps));
    }

    // total loss through the full model (C=3, F=4, D=2, H=8, |B|=12)
    for (int i = 0; i < instances_per_loss; ++i) {
        NetConfig net;
        net.input_dim = 2;
        net.feature_dim = 4;
        net.hidden_dim = 8;
        net.num_classes = 3;
        net.extractor_widths = {6};
        net.init_seed = rng.next_u64();

        const int sources = 6;  // CL batch 2*6 = 12
        std::vector<int> yb;
        for (int k = 0; k < sources; ++k)
            yb.push_back(static_cast<int>(rng.below(3)));
        std::vector<int> y_cl = yb;
        y_cl.insert(y_cl.end(), yb.begin(), yb.end());
        const BatchIndex idx = BatchIndex::build(y_cl, 3);
        std::vector<double> h = {0.5, 0.3, 0.2};

        // Resample until every relu pre-activation and projector row norm
        // clears the finite-difference step by a wide margin.
        Tensor x_cl, x1;
        ModelParams params;
        for (;;) {
            net.init_seed = rng.next_u64();
            params = init_params(net);
            x_cl = uniform_tensor(rng, 2 * sources, 2, -1.0, 1.0);
            x1 = uniform_tensor(rng, sources, 2, -1.0, 1.0);
            auto margins_ok = [&](const Tensor& x) {
                Tape probe;
                ParamLeaves pl = make_leaves(probe, params);
                Value xc = probe.constant(x);
                Value ones = probe.constant(Tensor::ones(x.rows(), 1));
                // relu inputs: the hidden extractor layer and the projector
                // hidden layer
                Value pre1 = probe.add(
                    probe.matmul(xc, probe.transpose(pl.extractor_w[0])),
                    probe.matmul(ones, pl.extractor_b[0]));
                if (!relu_margins_ok(probe.value(pre1), 2e-3)) return false;
                Value f = probe.add(
                    probe.matmul(probe.relu(pre1),
                                 probe.transpose(pl.extractor_w[1])),
                    probe.matmul(ones, pl.extractor_b[1]));
                Value prep = probe.matmul(f, probe.transpose(pl.proj_w1));
                if (!relu_margins_ok(probe.value(prep), 2e-3)) return false;
                const Tensor& z1 = probe.value(
                    probe.matmul(probe.relu(prep), probe.transpose(pl.proj_w2)));
                for (int r = 0; r < z1.rows(); ++r) {
                    const double nrm = std::sqrt(kernels::sqnorm(
                        z1.row_ptr(r), static_cast<std::size_t>(z1.cols())));
                    if (nrm < 1e-3) return false;
                }
                return true;
            };
            if (margins_ok(x_cl) && margins_ok(x1)) break;
        }

        std::vector<Tensor> leaves_t = {params.extractor_w[0], params.extractor_b[0],
                                        params.extractor_w[1], params.extractor_b[1],
                                        params.proj_w1, params.proj_w2,
                                        params.clf_w, params.clf_b, params.proto_t};
        auto fn = [&](Tape& t, const std::vector<Value>& ls) {
            ParamLeaves pl;
            pl.extractor_w = {ls[0], ls[2]};
            pl.extractor_b = {ls[1], ls[3]};
            pl.proj_w1 = ls[4];
            pl.proj_w2 = ls[5];
            pl.clf_w = ls[6];
            pl.clf_b = ls[7];
            pl.proto_t = ls[8];
            Value z = project(t, pl, extract(t, pl, t.constant(x_cl)));
            Value protos = prototypes(t, pl, ProtoSource::linear_transform);
            Value logits = classify(t, pl, extract(t, pl, t.constant(x1)));
            Value lb = tapeops::bc_ecl_loss(t, z, idx, protos, 0.5);
            Value lcge = tapeops::cc_ge_loss(t, pl.clf_w, protos);
            Value llc = tapeops::lc_loss(t, logits, yb, h);
            return tapeops::total_loss(t, lb, lcge, llc, 0.5, 3.0, 0.5);
        };
        worst = std::max(worst, check_gradient(fn, leaves_t, kEps));
    }

    rep.max_violation = worst;
    if (worst > 1e-6) ++rep.violations;
    return rep;
}

SuiteReport run_trivials_suite() {
    SuiteReport rep;
    rep.name = "trivials";
    double worst = 0.0;
    auto check = [&](double got, double want) {
        worst = std::max(worst, std::abs(got - want));
    };

    // full collapse, C = 2: every similarity equals 1
    {
        Tensor z(4, 3);
        for (int r = 0; r < 4; ++r) z.at(r, 0) = 1.0;
        ContrastBatch b = ContrastBatch::make(z, {0, 0, 1, 1}, 2);
        PrototypeSet ps;
        ps.p = Tensor(3, 2);
        ps.p.at(0, 0) = 1.0;
        ps.p.at(0, 1) = 1.0;
        check(bc_ecl_loss(b, ps, 1.0), std::log(4.0));
        check(bcl_loss(b, ps, 1.0), std::log(2.0));
        check(bc_ecl_bound(b, ps), std::log(2.0));
        check(bcl_bound(b, ps), std::log(2.0));
    }
    // cc_ge identities
    {
        Rng rng(99);
        Tensor w = uniform_tensor(rng, 3, 5, -1.0, 1.0);
        PrototypeSet same{t_transpose(w), ProtoSource::linear_transform};
        check(cc_ge_loss(w, same), 0.0);
        PrototypeSet anti{t_scale(t_transpose(w), -1.0), ProtoSource::linear_transform};
        check(cc_ge_loss(w, anti), 4.0);
    }
    // lc uniform
    {
        Tensor logits(3, 2);
        check(lc_loss(logits, {0, 1, 0}, {0.5, 0.5}), std::log(2.0));
    }
    // sd with W^T proportional to M
    {
        Tensor feats = Tensor::from_rows({{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}});
        std::vector<int> labels = {0, 0, 1, 1};
        Tensor means = class_means(feats, labels, 2);
        Tensor w(2, 2);
        const double mx = 0.5 * (means.at(0, 0) + means.at(1, 0));
        const double my = 0.5 * (means.at(0, 1) + means.at(1, 1));
        for (int c = 0; c < 2; ++c) {
            w.at(c, 0) = 2.0 * (means.at(c, 0) - mx);
            w.at(c, 1) = 2.0 * (means.at(c, 1) - my);
        }
        check(sd_metric(w, feats, labels, 2), 0.0);
    }

    rep.instances = 8;
    rep.max_violation = worst;
    if (worst > 1e-12) ++rep.violations;
    return rep;
}

}  // namespace ecl
