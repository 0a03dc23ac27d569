#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "msr/rng.hpp"
#include "msr/tensor.hpp"

using namespace msr;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double bound = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
    return t;
}

// Relative error with an absolute floor so comparisons near zero stay sane.
double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("linear computes the affine map") {
    Tape tape;
    ValueId x = tape.input(Tensor({1, 2}, {1.0, 0.0}));
    ValueId w = tape.input(Tensor({2, 2}, {2.0, 0.0, 0.0, 3.0}));
    ValueId b = tape.input(Tensor({2}, {1.0, 1.0}));
    ValueId y = tape.linear(x, w, b);
    CHECK(tape.value(y).data == std::vector<double>{3.0, 1.0});

    ValueId eye = tape.input(Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0}));
    ValueId zero = tape.input(Tensor::zeros({2}));
    ValueId same = tape.linear(x, eye, zero);
    CHECK(tape.value(same).data == tape.value(x).data);

    ValueId bad = tape.input(Tensor::zeros({3, 2}));
    CHECK_THROWS_AS(tape.linear(x, bad, b), std::invalid_argument);
}

TEST_CASE("activations match closed forms") {
    Tape tape;
    ValueId x = tape.input(Tensor({1, 3}, {-1.0, 0.0, 2.0}));
    CHECK(tape.value(tape.relu(x)).data == std::vector<double>{0.0, 0.0, 2.0});
    CHECK(tape.value(tape.softplus(tape.input(Tensor::scalar(0.0)))).data[0] ==
          doctest::Approx(std::log(2.0)).epsilon(1e-15));

    Rng rng(3);
    for (int i = 0; i < 10000; ++i) {
        double z = rng.uniform(-40.0, 40.0);
        Tape t2;
        double sp = t2.value(t2.softplus(t2.input(Tensor::scalar(z)))).data[0];
        REQUIRE(sp > 0.0);
        REQUIRE(std::isfinite(sp));
    }
}

TEST_CASE("normalize_l1 rows sum to one and stay non-negative") {
    Tape tape;
    double l2 = std::log(2.0);
    ValueId x = tape.input(Tensor({1, 2}, {l2, l2}));
    ValueId y = tape.normalize_l1(x);
    CHECK(tape.value(y).data[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tape.value(y).data[1] == doctest::Approx(0.5).epsilon(1e-15));

    // Idempotent on an already-normalized row.
    ValueId z = tape.normalize_l1(y);
    CHECK(tape.value(z).data == tape.value(y).data);

    ValueId tiny = tape.input(Tensor({1, 2}, {0.0, 1e-31}));
    CHECK_THROWS_AS(tape.normalize_l1(tiny), std::runtime_error);

    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        Tape t2;
        Tensor in = Tensor::zeros({3, 4});
        for (double& v : in.data) v = rng.uniform(0.001, 5.0);
        const Tensor& out = t2.value(t2.normalize_l1(t2.input(in)));
        for (std::size_t r = 0; r < 3; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                REQUIRE(out.at(r, c) >= 0.0);
                sum += out.at(r, c);
            }
            REQUIRE(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("distance and pooling reductions") {
    Tape tape;
    ValueId u = tape.input(Tensor({1, 2}, {1.0, 2.0}));
    ValueId v = tape.input(Tensor({1, 2}, {0.0, 4.0}));
    CHECK(tape.scalar_value(tape.l1_distance(u, v)) == 3.0);

    ValueId r = tape.input(Tensor({1, 3}, {3.0, 2.0, 0.0}));
    ValueId s = tape.input(Tensor({1, 3}, {2.0, 1.0, 1.0}));
    CHECK(tape.scalar_value(tape.min_pool_sum(r, s)) == 3.0);

    ValueId rows = tape.input(Tensor({2, 3}, {1.0, 2.0, 3.0, 10.0, 20.0, 30.0}));
    CHECK(tape.value(tape.sum_rows(rows)).data == std::vector<double>{11.0, 22.0, 33.0});
}

TEST_CASE("ties route zero gradient to both sides of l1 and min") {
    Tape tape;
    ValueId u = tape.input(Tensor({1, 2}, {1.0, 3.0}));
    ValueId v = tape.input(Tensor({1, 2}, {1.0, 2.0}));
    ValueId d = tape.l1_distance(u, v);
    tape.backward(d);
    CHECK(tape.grad(u).data[0] == 0.0);
    CHECK(tape.grad(v).data[0] == 0.0);
    CHECK(tape.grad(u).data[1] == 1.0);
    CHECK(tape.grad(v).data[1] == -1.0);

    Tape tape2;
    ValueId u2 = tape2.input(Tensor({1, 2}, {1.0, 3.0}));
    ValueId v2 = tape2.input(Tensor({1, 2}, {1.0, 2.0}));
    ValueId m = tape2.min_pool_sum(u2, v2);
    tape2.backward(m);
    CHECK(tape2.grad(u2).data[0] == 0.0);
    CHECK(tape2.grad(v2).data[0] == 0.0);
    CHECK(tape2.grad(u2).data[1] == 0.0);
    CHECK(tape2.grad(v2).data[1] == 1.0);
}

TEST_CASE("finite differences recover simple gradients") {
    ParameterStore store;
    store.add("p", Tensor::scalar(3.0));
    auto quad = [](const ParameterStore& s) {
        double p = s.value("p").data[0];
        return p * p;
    };
    auto g = finite_difference_gradient(quad, store);
    CHECK(std::abs(g.at("p").data[0] - 6.0) <= 1e-6);

    auto constant = [](const ParameterStore&) { return 42.0; };
    auto gc = finite_difference_gradient(constant, store);
    CHECK(gc.at("p").data[0] == 0.0);
}

TEST_CASE("tape gradients of a two-layer net match finite differences") {
    Rng rng(9);
    for (int draw = 0; draw < 20; ++draw) {
        ParameterStore store;
        store.add("w1", random_tensor(rng, {3, 4}));
        store.add("b1", random_tensor(rng, {4}));
        store.add("w2", random_tensor(rng, {4, 2}));
        store.add("b2", random_tensor(rng, {2}));
        Tensor x = random_tensor(rng, {2, 3});
        Tensor target = random_tensor(rng, {1, 2});

        auto forward = [&](Tape& tape, const ParameterStore& params,
                           std::map<std::string, ValueId>* ids_out) {
            std::map<std::string, ValueId> ids;
            for (const auto& [name, slot] : params.params) ids[name] = tape.input(slot.value);
            ValueId h = tape.relu(tape.linear(tape.input(x), ids["w1"], ids["b1"]));
            ValueId y = tape.linear(h, ids["w2"], ids["b2"]);
            ValueId pooled = tape.sum_rows(y);
            ValueId loss = tape.l1_distance(pooled, tape.input(target));
            if (ids_out) *ids_out = ids;
            return loss;
        };

        Tape tape;
        std::map<std::string, ValueId> ids;
        ValueId loss = forward(tape, store, &ids);
        if (tape.min_kink_gap() < 1e-4) continue;  // oracle window would straddle a kink
        tape.backward(loss);

        auto loss_at = [&](const ParameterStore& params) {
            Tape t2;
            return t2.scalar_value(forward(t2, params, nullptr));
        };
        auto fd = finite_difference_gradient(loss_at, store);
        for (const auto& [name, grad] : fd) {
            const Tensor& got = tape.grad(ids[name]);
            REQUIRE(got.numel() == grad.numel());
            for (std::size_t i = 0; i < grad.numel(); ++i)
                REQUIRE(rel_err(got.data[i], grad.data[i]) <= 1e-4);
        }
    }
}

TEST_CASE("adam first step moves by roughly the learning rate against the gradient") {
    AdamConfig cfg;
    cfg.learning_rate = 1e-3;
    ParameterStore store;
    store.add("p", Tensor::scalar(1.0));
    std::map<std::string, Tensor> grads{{"p", Tensor::scalar(0.4)}};
    adam_step(store, grads, cfg);
    // Bias-corrected first step is -lr * g / (|g| + eps').
    CHECK(store.value("p").data[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
    CHECK(store.step == 1);
}

TEST_CASE("adam with zero gradients leaves parameters unchanged") {
    AdamConfig cfg;
    ParameterStore store;
    store.add("p", Tensor({2}, {1.5, -2.5}));
    adam_step(store, {}, cfg);
    adam_step(store, {{"p", Tensor::zeros({2})}}, cfg);
    CHECK(store.value("p").data == std::vector<double>{1.5, -2.5});
    CHECK(store.step == 2);
}

TEST_CASE("adam moves monotonically under a constant gradient") {
    AdamConfig cfg;
    cfg.learning_rate = 1e-2;
    ParameterStore store;
    store.add("p", Tensor::scalar(0.0));
    double prev = 0.0;
    for (int i = 0; i < 10; ++i) {
        adam_step(store, {{"p", Tensor::scalar(2.0)}}, cfg);
        double cur = store.value("p").data[0];
        REQUIRE(cur < prev);
        prev = cur;
    }
}

TEST_CASE("adam is deterministic and rejects bad gradients") {
    AdamConfig cfg;
    auto run = [&] {
        ParameterStore store;
        store.add("p", Tensor({2}, {0.25, -1.0}));
        for (int i = 0; i < 50; ++i)
            adam_step(store, {{"p", Tensor({2}, {0.3 * i, -0.1})}}, cfg);
        return store.value("p").data;
    };
    CHECK(run() == run());

    ParameterStore store;
    store.add("p", Tensor::scalar(0.0));
    CHECK_THROWS_AS(
        adam_step(store, {{"p", Tensor::scalar(std::numeric_limits<double>::quiet_NaN())}}, cfg),
        std::runtime_error);
    CHECK_THROWS_AS(adam_step(store, {{"p", Tensor::zeros({3})}}, cfg), std::invalid_argument);
}

TEST_CASE("parameter store round-trips through the binary format") {
    Rng rng(21);
    ParameterStore store;
    store.add("phi.0.W", random_tensor(rng, {3, 5}));
    store.add("phi.0.b", random_tensor(rng, {5}));
    store.add("rho1.0.W", random_tensor(rng, {5, 2}));
    for (int i = 0; i < 7; ++i)
        adam_step(store, {{"phi.0.W", random_tensor(rng, {3, 5})}}, AdamConfig{});

    std::string path = temp_path("msr_test_params.bin");
    save_parameters(store, path);
    ParameterStore back = load_parameters(path);
    REQUIRE(back.params.size() == store.params.size());
    CHECK(back.step == store.step);
    for (const auto& [name, slot] : store.params) {
        REQUIRE(back.has(name));
        CHECK(back.params.at(name).value.data == slot.value.data);
        CHECK(back.params.at(name).value.shape == slot.value.shape);
        CHECK(back.params.at(name).adam_m.data == slot.adam_m.data);
        CHECK(back.params.at(name).adam_v.data == slot.adam_v.data);
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint header bytes follow the documented layout") {
    ParameterStore store;
    store.add("w", Tensor({1, 2}, {1.0, 2.0}));
    std::string path = temp_path("msr_test_header.bin");
    save_parameters(store, path);

    std::ifstream in(path, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() > 16);
    CHECK(bytes[0] == 'M');
    CHECK(bytes[1] == 'S');
    CHECK(bytes[2] == 'L');
    CHECK(bytes[3] == 'B');
    // version 1, little-endian
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 0);
    // tensor count: value + two moments + step counter
    CHECK(bytes[8] == 4);
    // first tensor name: length 1, "w"
    CHECK(bytes[12] == 1);
    CHECK(bytes[16] == 'w');
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_parameters(temp_path("msr_does_not_exist.bin")), std::runtime_error);
}
