#include <doctest.h>

#include <cmath>

#include "ecl/errors.hpp"
#include "ecl/tape.hpp"
#include "test_support.hpp"

using ecl::Tape;
using ecl::Tensor;
using ecl::Value;

TEST_CASE("primitive forward values") {
    Tape t;
    SUBCASE("matmul identity") {
        Value a = t.leaf(Tensor::from_rows({{1.5, -2.0}, {0.25, 4.0}}));
        Value i2 = t.leaf(Tensor::identity(2));
        CHECK(t.value(t.matmul(i2, a)) == t.value(a));
    }
    SUBCASE("row l2 normalize 3-4-5") {
        Value a = t.leaf(Tensor::from_rows({{3.0, 4.0}}));
        const Tensor& z = t.value(t.row_l2_normalize(a));
        CHECK(z.at(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
        CHECK(z.at(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
    }
    SUBCASE("exp log round trip") {
        ecl::Rng rng(5);
        Tensor x = testsup::random_tensor(rng, 4, 6, 0.1, 3.0);
        Value a = t.leaf(x);
        const Tensor& back = t.value(t.exp(t.log(a)));
        for (int r = 0; r < x.rows(); ++r)
            for (int c = 0; c < x.cols(); ++c)
                CHECK(back.at(r, c) == doctest::Approx(x.at(r, c)).epsilon(1e-12));
    }
}

TEST_CASE("shape and domain errors carry context") {
    Tape t;
    Value a = t.leaf(Tensor(2, 3));
    Value b = t.leaf(Tensor(3, 2));
    CHECK_THROWS_WITH_AS(t.add(a, b), doctest::Contains("2x3"), ecl::ShapeError);
    CHECK_THROWS_AS(t.matmul(a, a), ecl::ShapeError);

    Value neg = t.leaf(Tensor::from_rows({{1.0, 2.0}, {-1.0, 3.0}}));
    CHECK_THROWS_WITH_AS(t.log(neg), doctest::Contains("row 1"), ecl::DomainError);
    Value zrow = t.leaf(Tensor::from_rows({{1.0, 1.0}, {0.0, 0.0}}));
    CHECK_THROWS_WITH_AS(t.row_l2_normalize(zrow), doctest::Contains("row 1"),
                         ecl::DomainError);
}

TEST_CASE("backward trivial cases") {
    SUBCASE("sum gives all-ones gradient") {
        Tape t;
        Value p = t.leaf(Tensor(3, 4));
        t.backward(t.sum(p));
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) CHECK(t.grad(p).at(r, c) == 1.0);
    }
    SUBCASE("squared frobenius norm of identity gives 2I") {
        Tape t;
        Value p = t.leaf(Tensor::identity(2));
        Value n = t.frobenius_norm(p);
        t.backward(t.multiply(n, n));
        CHECK(t.grad(p).at(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(t.grad(p).at(0, 1) == doctest::Approx(0.0));
        CHECK(t.grad(p).at(1, 1) == doctest::Approx(2.0).epsilon(1e-14));
    }
    SUBCASE("non-scalar root rejected") {
        Tape t;
        Value p = t.leaf(Tensor(2, 2));
        CHECK_THROWS_AS(t.backward(p), ecl::ShapeError);
    }
    SUBCASE("fan-out accumulates additively") {
        Tape t;
        Value p = t.leaf(Tensor::from_rows({{2.0}}));
        Value s = t.add(p, p);
        t.backward(s);
        CHECK(t.grad(p).at(0, 0) == 2.0);
    }
}

TEST_CASE("every primitive matches central differences") {
    ecl::Rng rng(17);
    constexpr double kEps = 1e-5;
    constexpr double kTol = 1e-7;

    auto check1 = [&](const ecl::TapeFn& fn, const Tensor& x) {
        CHECK(ecl::check_gradient(fn, {x}, kEps) <= kTol);
    };

    Tensor a = testsup::random_tensor(rng, 3, 4);
    Tensor b = testsup::random_tensor(rng, 3, 4);
    Tensor m = testsup::random_tensor(rng, 4, 2);
    Tensor pos = testsup::random_tensor(rng, 3, 4, 0.2, 1.0);

    CHECK(ecl::check_gradient(
              [](Tape& t, const std::vector<Value>& l) {
                  return t.sum(t.add(l[0], l[1]));
              },
              {a, b}, kEps) <= kTol);
    CHECK(ecl::check_gradient(
              [](Tape& t, const std::vector<Value>& l) {
                  return t.sum(t.subtract(l[0], l[1]));
              },
              {a, b}, kEps) <= kTol);
    CHECK(ecl::check_gradient(
              [](Tape& t, const std::vector<Value>& l) {
                  return t.sum(t.multiply(l[0], l[1]));
              },
              {a, b}, kEps) <= kTol);
    CHECK(ecl::check_gradient(
              [](Tape& t, const std::vector<Value>& l) {
                  return t.sum(t.matmul(l[0], l[1]));
              },
              {a, m}, kEps) <= kTol);
    check1([](Tape& t, const std::vector<Value>& l) {
        return t.sum(t.scale(t.transpose(l[0]), -1.3));
    }, a);
    check1([](Tape& t, const std::vector<Value>& l) {
        return t.sum(t.exp(l[0]));
    }, a);
    check1([](Tape& t, const std::vector<Value>& l) {
        return t.sum(t.log(l[0]));
    }, pos);
    check1([](Tape& t, const std::vector<Value>& l) {
        return t.sum(t.row_l2_normalize(l[0]));
    }, pos);
    check1([](Tape& t, const std::vector<Value>& l) {
        return t.frobenius_norm(l[0]);
    }, pos);
    check1([](Tape& t, const std::vector<Value>& l) {
        std::vector<int> rows = {0, 2};
        return t.sum(t.mean_over_rows(l[0], rows));
    }, a);
    CHECK(ecl::check_gradient(
              [](Tape& t, const std::vector<Value>& l) {
                  return t.dot_row(l[0], 1, l[1], 2);
              },
              {a, b}, kEps) <= kTol);
    CHECK(ecl::check_gradient(
              [](Tape& t, const std::vector<Value>& l) {
                  return t.dot_row(l[0], 0, l[0], 2);  // aliased operands
              },
              {a}, kEps) <= kTol);
    CHECK(ecl::check_gradient(
              [](Tape& t, const std::vector<Value>& l) {
                  return t.sum(t.scale_by(l[0], t.reciprocal(t.frobenius_norm(l[1]))));
              },
              {a, pos}, kEps) <= kTol);
    // relu away from the kink
    Tensor far = testsup::random_tensor(rng, 3, 4);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c)
            if (std::abs(far.at(r, c)) < 0.1) far.at(r, c) = 0.5;
    check1([](Tape& t, const std::vector<Value>& l) {
        return t.sum(t.relu(l[0]));
    }, far);
}

TEST_CASE("relu adjoint at exactly zero is zero") {
    Tape t;
    Value x = t.leaf(Tensor::from_rows({{0.0, -1.0, 2.0}}));
    t.backward(t.sum(t.relu(x)));
    CHECK(t.grad(x).at(0, 0) == 0.0);
    CHECK(t.grad(x).at(0, 1) == 0.0);
    CHECK(t.grad(x).at(0, 2) == 1.0);
}

TEST_CASE("forward evaluation is deterministic") {
    ecl::Rng rng(23);
    Tensor a = testsup::random_tensor(rng, 5, 5);
    Tensor b = testsup::random_tensor(rng, 5, 5);
    auto run = [&]() {
        Tape t;
        Value r = t.sum(t.exp(t.scale(t.matmul(t.leaf(a), t.leaf(b)), 0.1)));
        return t.value(r).at(0, 0);
    };
    const double v1 = run();
    const double v2 = run();
    CHECK(v1 == v2);
}

TEST_CASE("gradient accumulation is order-independent to 1e-14") {
    ecl::Rng rng(29);
    Tensor a = testsup::random_tensor(rng, 4, 4);
    // same function, two construction orders for the fan-out sums
    auto grad_of = [&](bool swap) {
        Tape t;
        Value x = t.leaf(a);
        Value e = t.exp(x);
        Value lhs = t.sum(t.multiply(e, x));
        Value rhs = t.frobenius_norm(e);
        Value root = swap ? t.add(rhs, lhs) : t.add(lhs, rhs);
        t.backward(root);
        return t.grad(x);
    };
    const Tensor g1 = grad_of(false);
    const Tensor g2 = grad_of(true);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            CHECK(std::abs(g1.at(r, c) - g2.at(r, c)) <= 1e-14);
}

TEST_CASE("check_gradient on x squared") {
    Tensor x = Tensor::from_rows({{3.0}});
    const double err = ecl::check_gradient(
        [](Tape& t, const std::vector<Value>& l) {
            return t.multiply(l[0], l[0]);
        },
        {x}, 1e-5);
    CHECK(err <= 1e-9);
}

TEST_CASE("check_gradient flags bad probe points") {
    SUBCASE("domain violation when the probe crosses zero") {
        Tensor x = Tensor::from_rows({{0.5e-5}});
        CHECK_THROWS_AS(ecl::check_gradient(
                            [](Tape& t, const std::vector<Value>& l) {
                                return t.sum(t.log(l[0]));
                            },
                            {x}, 1e-5),
                        ecl::DomainError);
    }
    SUBCASE("overflow to infinity names the coordinate") {
        // exp(exp(x)) overflows on the +eps side only
        Tensor x = Tensor::from_rows({{std::log(709.7827)}});
        CHECK_THROWS_WITH_AS(ecl::check_gradient(
                                 [](Tape& t, const std::vector<Value>& l) {
                                     return t.sum(t.exp(t.exp(l[0])));
                                 },
                                 {x}, 1e-5),
                             doctest::Contains("(0,0)"), ecl::NumericError);
    }
}
