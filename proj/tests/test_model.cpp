#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ecl/errors.hpp"
#include "ecl/model.hpp"
#include "test_support.hpp"

using ecl::ModelParams;
using ecl::NetConfig;
using ecl::ParamLeaves;
using ecl::Tape;
using ecl::Tensor;
using ecl::Value;

namespace {

NetConfig tiny_net() {
    NetConfig net;
    net.input_dim = 2;
    net.feature_dim = 2;
    net.hidden_dim = 8;
    net.num_classes = 2;
    net.extractor_widths = {};
    net.init_seed = 5;
    return net;
}

}  // namespace

TEST_CASE("extractor trivial cases") {
    SUBCASE("identity single layer passes the identity through") {
        ModelParams p = init_params(tiny_net());
        p.extractor_w[0] = Tensor::identity(2);
        p.extractor_b[0] = Tensor(1, 2);
        const Tensor f = extract_eval(p, Tensor::identity(2));
        CHECK(f == Tensor::identity(2));
    }
    SUBCASE("zero weights give zero features") {
        ModelParams p = init_params(tiny_net());
        p.extractor_w[0] = Tensor(2, 2);
        p.extractor_b[0] = Tensor(1, 2);
        ecl::Rng rng(9);
        const Tensor f = extract_eval(p, testsup::random_tensor(rng, 5, 2));
        CHECK(ecl::t_frobenius(f) == 0.0);
    }
    SUBCASE("shape mismatch rejected") {
        ModelParams p = init_params(tiny_net());
        CHECK_THROWS_AS(extract_eval(p, Tensor(3, 4)), ecl::ShapeError);
    }
}

TEST_CASE("projector normalizes and keeps unit rows") {
    ModelParams p = init_params(tiny_net());
    SUBCASE("identity layers reduce to plain normalization") {
        NetConfig net = tiny_net();
        net.hidden_dim = 2;
        ModelParams q = init_params(net);
        q.proj_w1 = Tensor::identity(2);
        q.proj_w2 = Tensor::identity(2);
        const Tensor z = project_eval(q, Tensor::from_rows({{3.0, 4.0}}));
        CHECK(z.at(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
        CHECK(z.at(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
    }
    SUBCASE("rows come out unit for generic weights") {
        ecl::Rng rng(13);
        const Tensor f = testsup::random_tensor(rng, 7, 2, 0.2, 1.0);
        const Tensor z = project_eval(p, f);
        for (int r = 0; r < z.rows(); ++r) {
            double sq = 0.0;
            for (int c = 0; c < z.cols(); ++c) sq += z.at(r, c) * z.at(r, c);
            CHECK(std::abs(std::sqrt(sq) - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("classifier affine map") {
    ModelParams p = init_params(tiny_net());
    SUBCASE("zero weights, zero bias give zero logits") {
        p.clf_w = Tensor(2, 2);
        p.clf_b = Tensor(1, 2);
        const Tensor l = classify_eval(p, Tensor::from_rows({{1.0, -2.0}}));
        CHECK(l == Tensor(1, 2));
    }
    SUBCASE("identity weights pass basis vectors through") {
        p.clf_w = Tensor::identity(2);
        p.clf_b = Tensor(1, 2);
        const Tensor l = classify_eval(p, Tensor::identity(2));
        CHECK(l == Tensor::identity(2));
    }
}

TEST_CASE("prototype sources") {
    NetConfig net = tiny_net();
    net.feature_dim = 3;
    net.num_classes = 2;
    ModelParams p = init_params(net);

    SUBCASE("identity transform returns classifier weights") {
        Tape t;
        ParamLeaves pl = make_leaves(t, p);
        const Tensor& protos = t.value(
            prototypes(t, pl, ecl::ProtoSource::linear_transform));
        const Tensor want = ecl::t_transpose(p.clf_w);  // T = I at init
        for (int r = 0; r < want.rows(); ++r)
            for (int c = 0; c < want.cols(); ++c)
                CHECK(protos.at(r, c) == doctest::Approx(want.at(r, c)));
    }
    SUBCASE("linear transform matches a direct product") {
        ecl::Rng rng(17);
        p.proto_t = testsup::random_tensor(rng, 3, 3);
        Tape t;
        ParamLeaves pl = make_leaves(t, p);
        const Tensor& protos = t.value(
            prototypes(t, pl, ecl::ProtoSource::linear_transform));
        const Tensor want = ecl::t_matmul(p.proto_t, ecl::t_transpose(p.clf_w));
        for (int r = 0; r < want.rows(); ++r)
            for (int c = 0; c < want.cols(); ++c)
                CHECK(protos.at(r, c) ==
                      doctest::Approx(want.at(r, c)).epsilon(1e-12));
    }
    SUBCASE("class means of identical rows reproduce the row") {
        Tensor z = Tensor::from_rows(
            {{0.6, 0.8, 0.0}, {0.6, 0.8, 0.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}});
        const ecl::BatchIndex idx = ecl::BatchIndex::build({0, 0, 1, 1}, 2);
        Tape t;
        ParamLeaves pl = make_leaves(t, p);
        Value zv = t.constant(z);
        const Tensor& protos =
            t.value(prototypes(t, pl, ecl::ProtoSource::class_means, zv, &idx));
        CHECK(protos.at(0, 0) == doctest::Approx(0.6));
        CHECK(protos.at(1, 0) == doctest::Approx(0.8));
        CHECK(protos.at(2, 1) == doctest::Approx(1.0));
    }
    SUBCASE("class means with an absent class fail by name") {
        Tensor z = Tensor::from_rows({{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}});
        const ecl::BatchIndex idx = ecl::BatchIndex::build({0, 0}, 2);
        Tape t;
        ParamLeaves pl = make_leaves(t, p);
        Value zv = t.constant(z);
        CHECK_THROWS_WITH_AS(
            prototypes(t, pl, ecl::ProtoSource::class_means, zv, &idx),
            doctest::Contains("class 1"), ecl::UnavailableError);
    }
}

TEST_CASE("initialization is deterministic") {
    NetConfig net;
    net.init_seed = 123;
    ModelParams a = init_params(net);
    ModelParams b = init_params(net);
    CHECK(a.clf_w == b.clf_w);
    CHECK(a.proj_w1 == b.proj_w1);
    CHECK(a.extractor_w[0] == b.extractor_w[0]);
    CHECK(a.proto_t == Tensor::identity(net.feature_dim));
    net.init_seed = 124;
    ModelParams c = init_params(net);
    CHECK(!(a.clf_w == c.clf_w));
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    NetConfig net;
    net.extractor_widths = {5, 3};
    net.init_seed = 31337;
    ModelParams p = init_params(net);
    // irrational-ish values exercise the shortest-round-trip serialization
    p.clf_b.at(0, 0) = std::nextafter(0.1, 1.0);
    const auto path =
        (std::filesystem::temp_directory_path() / "ecl_ckpt_test.json").string();
    ecl::save_checkpoint(path, p, 42);
    int epoch = 0;
    ModelParams q = ecl::load_checkpoint(path, &epoch);
    CHECK(epoch == 42);
    CHECK(q.net.extractor_widths == net.extractor_widths);
    CHECK(q.clf_w == p.clf_w);
    CHECK(q.clf_b == p.clf_b);
    CHECK(q.proj_w1 == p.proj_w1);
    CHECK(q.proj_w2 == p.proj_w2);
    CHECK(q.proto_t == p.proto_t);
    CHECK(q.extractor_w[0] == p.extractor_w[0]);
    CHECK(q.extractor_w[1] == p.extractor_w[1]);
    CHECK(q.extractor_b[1] == p.extractor_b[1]);
    std::remove(path.c_str());
}

TEST_CASE("gradients flow through the whole stack") {
    // gradient of a composed head w.r.t. extractor and projector weights
    ecl::Rng rng(23);
    NetConfig net = tiny_net();
    net.init_seed = 77;
    ModelParams p = init_params(net);
    const Tensor x = testsup::random_tensor(rng, 4, 2, 0.3, 1.0);

    std::vector<Tensor> leaves = {p.extractor_w[0], p.extractor_b[0], p.proj_w1,
                                  p.proj_w2, p.clf_w, p.clf_b};
    const double err = ecl::check_gradient(
        [&](Tape& t, const std::vector<Value>& ls) {
            ParamLeaves pl;
            pl.extractor_w = {ls[0]};
            pl.extractor_b = {ls[1]};
            pl.proj_w1 = ls[2];
            pl.proj_w2 = ls[3];
            pl.clf_w = ls[4];
            pl.clf_b = ls[5];
            Value f = extract(t, pl, t.constant(x));
            Value z = project(t, pl, f);
            Value logits = classify(t, pl, f);
            return t.add(t.frobenius_norm(z), t.frobenius_norm(logits));
        },
        leaves, 1e-5);
    CHECK(err <= 1e-6);
}
