#include <catch2/catch_amalgamated.hpp>

#include "cif/fusion.hpp"
#include "cif/rng.hpp"
#include "helpers.hpp"
#include "reference_impls.hpp"

using namespace cif;
using test_helpers::random_tensor;

namespace {

Tensor single_row(std::vector<double> channels) {
    const std::size_t width = channels.size();
    return Tensor({1, 1, width}, std::move(channels));
}

CifConfig make_cfg(int t, std::size_t n, double a, double b) {
    CifConfig cfg;
    cfg.side = t;
    cfg.width = n;
    cfg.a = a;
    cfg.b = b;
    return cfg;
}

}  // namespace

TEST_CASE("apply_cif matches the pseudocode hand traces") {
    Tensor x = single_row({1, 2, 3});
    CHECK(apply_cif(x, make_cfg(1, 1, 1, 1)).values() == std::vector<double>{4, 2, 3});
    CHECK(apply_cif(x, make_cfg(-1, 1, 1, 1)).values() == std::vector<double>{1, 2, 4});

    Tensor y = random_tensor({3, 7, 6}, 5);
    CHECK(apply_cif(y, make_cfg(1, 2, 1, 0)).values() == y.values());
}

TEST_CASE("apply_cif validates its configuration") {
    Tensor x = single_row({1, 2, 3});
    CHECK_THROWS_AS(apply_cif(x, make_cfg(1, 2, 1, 1)), ConfigError);   // 2n > C
    CHECK_THROWS_AS(apply_cif(x, make_cfg(1, 0, 1, 1)), ConfigError);   // n < 1
    CHECK_THROWS_AS(apply_cif(Tensor({2, 2}, {1, 2, 3, 4}), make_cfg(1, 1, 1, 1)), DimensionError);
}

TEST_CASE("apply_cif preserves shape and non-fused channels bit-exactly") {
    Tensor x = random_tensor({2, 9, 8}, 17);
    for (int t : {1, -1}) {
        for (std::size_t n : {1u, 2u, 4u}) {
            Tensor out = apply_cif(x, make_cfg(t, n, 0.7, -1.9));
            REQUIRE(out.shape() == x.shape());
            const std::size_t channels = 8;
            const std::size_t dest = t > 0 ? 0 : channels - n;
            for (std::size_t bt = 0; bt < 2 * 9; ++bt)
                for (std::size_t c = 0; c < channels; ++c) {
                    if (c >= dest && c < dest + n) continue;
                    CHECK(out.values()[bt * channels + c] == x.values()[bt * channels + c]);
                }
        }
    }
}

TEST_CASE("apply_cif is linear in x and obeys the coefficient identities") {
    Tensor x = random_tensor({2, 5, 6}, 23);
    const CifConfig cfg = make_cfg(1, 2, 1.3, -0.4);

    const double alpha = -2.5;
    std::vector<double> scaled_values(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) scaled_values[i] = alpha * x.values()[i];
    Tensor lhs = apply_cif(Tensor(x.shape(), scaled_values), cfg);
    Tensor rhs = apply_cif(x, cfg);
    for (std::size_t i = 0; i < lhs.size(); ++i)
        CHECK(lhs.values()[i] == Catch::Approx(alpha * rhs.values()[i]).margin(1e-12));

    // (a=1, b=0, t>0) is the identity; (a=0, b=1, t>0) copies back onto front.
    CHECK(apply_cif(x, make_cfg(1, 2, 1, 0)).values() == x.values());
    Tensor copied = apply_cif(x, make_cfg(1, 2, 0, 1));
    for (std::size_t bt = 0; bt < 2 * 5; ++bt)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(copied.values()[bt * 6 + j] == x.values()[bt * 6 + 4 + j]);
}

TEST_CASE("apply_cif agrees with the straight-line pseudocode reference bit-exactly") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t batch = 1 + rng.below(3);
        const std::size_t steps = 1 + rng.below(6);
        const std::size_t channels = 2 + rng.below(7);
        const std::size_t n = 1 + rng.below(channels / 2);
        const int t = rng.uniform() < 0.5 ? 1 : -1;
        const double a = rng.normal();
        const double b = rng.normal();
        Tensor x = random_tensor({batch, steps, channels}, 1000 + trial);
        Tensor out = apply_cif(x, make_cfg(t, n, a, b));
        const auto expected = reference::cif(x.values(), batch, steps, channels, t, n, a, b);
        CHECK(out.values() == expected);
    }
}

TEST_CASE("apply_psf matches its hand traces") {
    Tensor x = single_row({1, 2, 3, 4});
    CHECK(apply_psf(x, {{0, 1, 0}}, 1, 1).values() == std::vector<double>{3, 2, 3, 4});
    CHECK(apply_psf(x, {}, 1, 1).values() == x.values());
    CHECK(apply_psf(single_row({1, 2}), {{0, 1, 0}}, 0, 1).values() == std::vector<double>{2, 2});

    CHECK_THROWS_AS(apply_psf(x, {{0, 1, 2}, {1, 0, 2}}, 1, 1), ConfigError);  // duplicate dest
    CHECK_THROWS_AS(apply_psf(x, {{0, 9, 0}}, 1, 1), ConfigError);             // out of range
}

TEST_CASE("front/back fusion is expressible as a pair map, bit-exactly") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t channels = 2 + rng.below(8);
        const std::size_t n = 1 + rng.below(channels / 2);
        const int t = rng.uniform() < 0.5 ? 1 : -1;
        const CifConfig cfg = make_cfg(t, n, rng.normal(), rng.normal());
        Tensor x = random_tensor({2, 4, channels}, 4000 + trial);
        Tensor direct = apply_cif(x, cfg);
        Tensor via_pairs = apply_psf(x, cif_as_pairs(cfg, channels), cfg.a, cfg.b);
        CHECK(direct.values() == via_pairs.values());
    }
}

TEST_CASE("cif_coefficient_gradients matches the hand inner products") {
    // X_i = channel 0 over time = [1, 2]; X_j = channel 1 = [3, 4].
    Tensor x({1, 2, 2}, {1, 3, 2, 4});
    CifConfig cfg = make_cfg(1, 1, 1.0, 1.0);

    Tensor ones({1, 2, 1}, {1, 1});
    auto [da, db] = cif_coefficient_gradients(ones, x, cfg);
    CHECK(da == 3.0);
    CHECK(db == 7.0);

    Tensor zeros = Tensor::zeros({1, 2, 1});
    auto [za, zb] = cif_coefficient_gradients(zeros, x, cfg);
    CHECK(za == 0.0);
    CHECK(zb == 0.0);

    CHECK_THROWS_AS(cif_coefficient_gradients(Tensor::zeros({1, 2, 2}), x, cfg), DimensionError);
}

TEST_CASE("coefficient gradients agree with autodiff and finite differences") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t channels = 4 + rng.below(4);
        const std::size_t n = 1 + rng.below(channels / 2);
        const int t = rng.uniform() < 0.5 ? 1 : -1;
        const double a0 = rng.normal();
        const double b0 = rng.normal();
        Tensor x = random_tensor({2, 6, channels}, 5000 + trial);
        Tensor w = random_tensor({2, 6, channels}, 6000 + trial);  // fixed loss weights
        CifConfig cfg = make_cfg(t, n, a0, b0);

        // Autodiff route.
        Tensor a_param = Tensor::scalar(a0, true);
        Tensor b_param = Tensor::scalar(b0, true);
        Tensor loss = sum(mul(w, apply_cif(x, cfg, a_param, b_param)));
        backward(loss);

        // Closed-form route: upstream over the fused block is the weight block.
        const std::size_t dest = t > 0 ? 0 : channels - n;
        std::vector<double> upstream(2 * 6 * n);
        for (std::size_t bt = 0; bt < 2 * 6; ++bt)
            for (std::size_t j = 0; j < n; ++j)
                upstream[bt * n + j] = w.values()[bt * channels + dest + j];
        auto [da, db] = cif_coefficient_gradients(Tensor({2, 6, n}, upstream), x, cfg);

        CHECK(a_param.grad()[0] == Catch::Approx(da).margin(1e-10));
        CHECK(b_param.grad()[0] == Catch::Approx(db).margin(1e-10));

        // Finite-difference route over the scalar coefficients.
        const double h = 1e-5;
        auto loss_at = [&](double av, double bv) {
            CifConfig c = cfg;
            c.a = av;
            c.b = bv;
            return sum(mul(w, apply_cif(x, c))).value();
        };
        const double fd_a = (loss_at(a0 + h, b0) - loss_at(a0 - h, b0)) / (2 * h);
        const double fd_b = (loss_at(a0, b0 + h) - loss_at(a0, b0 - h)) / (2 * h);
        CHECK(max_relative_error({da}, {fd_a}) < 1e-5);
        CHECK(max_relative_error({db}, {fd_b}) < 1e-5);
    }
}

TEST_CASE("autodiff through apply_cif routes input gradients correctly") {
    Tensor x = random_tensor({2, 4, 6}, 77);
    CifConfig cfg = make_cfg(1, 2, 0.8, -1.1);
    auto f = [&](const Tensor& probe) { return sum(gelu(apply_cif(probe, cfg))); };
    CHECK(finite_difference_check(f, x) < 1e-5);

    std::vector<ChannelPair> pairs = {{0, 5, 0}, {1, 4, 3}};
    auto g = [&](const Tensor& probe) { return sum(gelu(apply_psf(probe, pairs, 0.6, -0.9))); };
    CHECK(finite_difference_check(g, x) < 1e-5);
}

TEST_CASE("constrain_coefficients projects onto the demanded sign orthant") {
    SECTION("fixed mode is the identity") {
        auto [a, b] = constrain_coefficients(-3.0, 0.0, CoefficientMode::Fixed);
        CHECK(a == -3.0);
        CHECK(b == 0.0);
    }
    SECTION("coupling demands a > 0 and b > 0") {
        auto [a, b] = constrain_coefficients(-0.5, 2.0, CoefficientMode::LearnableCoupling);
        CHECK(a == 1e-6);
        CHECK(b == 2.0);
    }
    SECTION("suppression demands a > 0 and b < 0") {
        auto [a, b] = constrain_coefficients(0.3, 0.2, CoefficientMode::LearnableSuppression);
        CHECK(a == 0.3);
        CHECK(b == -1e-6);
        auto [a2, b2] = constrain_coefficients(1e-9, -4.0, CoefficientMode::LearnableSuppression);
        CHECK(a2 == 1e-6);
        CHECK(b2 == -4.0);
    }
    SECTION("signs hold after arbitrary simulated updates") {
        Rng rng(13);
        for (int i = 0; i < 1000; ++i) {
            const double a = 10.0 * rng.normal();
            const double b = 10.0 * rng.normal();
            auto [ca, cb] = constrain_coefficients(a, b, CoefficientMode::LearnableCoupling);
            CHECK(ca > 0.0);
            CHECK(cb > 0.0);
            auto [sa, sb] = constrain_coefficients(a, b, CoefficientMode::LearnableSuppression);
            CHECK(sa > 0.0);
            CHECK(sb < 0.0);
        }
    }
}
