#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "aq/errors.hpp"
#include "aq/nn/lstm.hpp"
#include "aq/nn/ops.hpp"
#include "aq/nn/param_set.hpp"
#include "aq/nn/tensor.hpp"
#include "oracles.hpp"

using namespace aq;
using nn::Tape;
using nn::Tensor;

TEST_SUITE_BEGIN("nn-core");

TEST_CASE("tensor invariants") {
    Tensor t({2, 3});
    CHECK(t.numel() == 6);
    CHECK_THROWS_AS(Tensor({0, 3}), ShapeError);
    CHECK_THROWS_AS(Tensor({2}, {1.0, 2.0, 3.0}), ShapeError);
    t.ensure_grad();
    CHECK(t.grad().size() == t.numel());

    Tensor shared = t;
    shared.data()[0] = 9.0;
    CHECK(t.data()[0] == 9.0);
    Tensor deep = t.clone();
    deep.data()[0] = -1.0;
    CHECK(t.data()[0] == 9.0);
    CHECK_FALSE(deep.has_grad());
}

TEST_CASE("matmul examples") {
    Tensor identity({2, 2}, {1, 0, 0, 1});
    Tensor a({2, 2}, {1, 2, 3, 4});
    Tensor out = nn::matmul(identity, a, nullptr);
    CHECK(out.data() == std::vector<double>{1, 2, 3, 4});

    Tensor b({2, 1}, {5, 6});
    Tensor prod = nn::matmul(a, b, nullptr);
    CHECK(prod.data()[0] == doctest::Approx(17));
    CHECK(prod.data()[1] == doctest::Approx(39));

    Tensor bad1({2, 3});
    Tensor bad2({4, 2});
    CHECK_THROWS_WITH_AS(nn::matmul(bad1, bad2, nullptr),
                         doctest::Contains("(2,3)"), ShapeError);
}

TEST_CASE("matmul random vs loop oracle") {
    std::mt19937_64 rng(11);
    for (int iter = 0; iter < 25; ++iter) {
        std::uniform_int_distribution<std::size_t> d(1, 5);
        const std::size_t m = d(rng), k = d(rng), n = d(rng);
        Tensor a = oracles::random_tensor({m, k}, rng);
        Tensor b = oracles::random_tensor({k, n}, rng);
        Tensor c = nn::matmul(a, b, nullptr);
        auto want = oracles::matmul_loop(a.data(), b.data(), m, k, n);
        for (std::size_t i = 0; i < want.size(); ++i)
            CHECK(c.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("depthwise_conv examples") {
    Tensor ones({1, 3, 3}, std::vector<double>(9, 1.0));
    Tensor kones({1, 3, 3}, std::vector<double>(9, 1.0));
    Tensor out = nn::depthwise_conv(ones, kones, 1, 0, nullptr);
    CHECK(out.shape() == nn::Shape{1, 1, 1});
    CHECK(out.data()[0] == doctest::Approx(9.0));

    // centre-one kernel with pad 1 reproduces the input
    std::mt19937_64 rng(3);
    Tensor x = oracles::random_tensor({2, 4, 5}, rng);
    Tensor centre({2, 3, 3}, std::vector<double>(18, 0.0));
    centre.data()[4] = 1.0;
    centre.data()[9 + 4] = 1.0;
    Tensor same = nn::depthwise_conv(x, centre, 1, 1, nullptr);
    REQUIRE(same.shape() == x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(same.data()[i] == x.data()[i]);

    Tensor small({1, 2, 2});
    Tensor bigk({1, 5, 5});
    CHECK_THROWS_AS(nn::depthwise_conv(small, bigk, 1, 0, nullptr), ShapeError);
}

TEST_CASE("depthwise_conv random vs sliding-window oracle") {
    std::mt19937_64 rng(21);
    for (int iter = 0; iter < 20; ++iter) {
        std::uniform_int_distribution<std::size_t> dc(1, 3), dh(3, 7), dk(1, 3);
        std::uniform_int_distribution<int> ds(1, 2), dp(0, 2);
        const std::size_t c = dc(rng), h = dh(rng), w = dh(rng), kh = dk(rng), kw = dk(rng);
        const int stride = ds(rng), pad = dp(rng);
        Tensor x = oracles::random_tensor({c, h, w}, rng);
        Tensor k = oracles::random_tensor({c, kh, kw}, rng);
        Tensor out = nn::depthwise_conv(x, k, stride, pad, nullptr);
        const std::size_t oh = out.extent(1), ow = out.extent(2);
        auto want = oracles::depthwise_loop(x.data(), k.data(), c, h, w, kh, kw, stride, pad, oh, ow);
        for (std::size_t i = 0; i < want.size(); ++i)
            CHECK(out.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("depthwise channel isolation") {
    std::mt19937_64 rng(5);
    Tensor x = oracles::random_tensor({3, 6, 6}, rng);
    Tensor k = oracles::random_tensor({3, 3, 3}, rng);
    Tensor base = nn::depthwise_conv(x, k, 1, 1, nullptr);
    Tensor poked = x.clone();
    poked.data()[1 * 36 + 14] += 0.5;  // channel 1 only
    Tensor out = nn::depthwise_conv(poked, k, 1, 1, nullptr);
    for (std::size_t ch = 0; ch < 3; ++ch) {
        bool changed = false;
        for (std::size_t p = 0; p < 36; ++p) {
            if (out.data()[ch * 36 + p] != base.data()[ch * 36 + p]) changed = true;
        }
        CHECK(changed == (ch == 1));
    }
}

TEST_CASE("pointwise_conv examples") {
    std::mt19937_64 rng(7);
    Tensor x = oracles::random_tensor({3, 4, 4}, rng);
    Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor same = nn::pointwise_conv(x, eye, nullptr);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(same.data()[i] == x.data()[i]);

    Tensor two({2, 2, 2}, {1, 2, 3, 4, 10, 20, 30, 40});
    Tensor sum_w({1, 2}, {1, 1});
    Tensor summed = nn::pointwise_conv(two, sum_w, nullptr);
    CHECK(summed.data() == std::vector<double>{11, 22, 33, 44});

    Tensor w = oracles::random_tensor({5, 3}, rng);
    Tensor out = nn::pointwise_conv(x, w, nullptr);
    auto want = oracles::pointwise_loop(x.data(), w.data(), 3, 5, 16);
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(out.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));

    Tensor badw({4, 2});
    CHECK_THROWS_AS(nn::pointwise_conv(x, badw, nullptr), ShapeError);
}

TEST_CASE("global_avg_pool examples") {
    Tensor constant = Tensor::full({2, 3, 3}, 0.0);
    for (std::size_t p = 0; p < 9; ++p) constant.data()[p] = 4.5;
    for (std::size_t p = 9; p < 18; ++p) constant.data()[p] = -2.0;
    Tensor pooled = nn::global_avg_pool(constant, nullptr);
    REQUIRE(pooled.shape() == nn::Shape{2});
    CHECK(pooled.data()[0] == doctest::Approx(4.5));
    CHECK(pooled.data()[1] == doctest::Approx(-2.0));

    Tensor chan({1, 2, 2}, {1, 2, 3, 4});
    CHECK(nn::global_avg_pool(chan, nullptr).data()[0] == doctest::Approx(2.5));
}

TEST_CASE("dense_concat examples") {
    std::mt19937_64 rng(13);
    Tensor a = oracles::random_tensor({2, 3, 3}, rng);
    Tensor only = nn::dense_concat({a}, nullptr);
    CHECK(only.storage_id() == a.storage_id());

    Tensor b = oracles::random_tensor({3, 3, 3}, rng);
    Tensor cat = nn::dense_concat({a, b}, nullptr);
    REQUIRE(cat.shape() == nn::Shape{5, 3, 3});
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(cat.data()[i] == a.data()[i]);
    for (std::size_t i = 0; i < b.numel(); ++i) CHECK(cat.data()[a.numel() + i] == b.data()[i]);

    Tensor bad = oracles::random_tensor({1, 4, 3}, rng);
    CHECK_THROWS_AS(nn::dense_concat({a, bad}, nullptr), ShapeError);
}

TEST_CASE("lstm_cell hand examples") {
    std::mt19937_64 rng(1);
    nn::LstmWeights w = nn::LstmWeights::init(2, 3, rng);
    for (auto* t : {&w.w_forget, &w.w_input, &w.w_cell, &w.w_output, &w.b_forget, &w.b_input,
                    &w.b_cell, &w.b_output}) {
        for (auto& v : t->data()) v = 0.0;
    }
    Tensor x({2}, {0.3, -0.7});
    Tensor h0({3}, {0.1, 0.2, 0.3});

    Tensor c_zero({3}, {0, 0, 0});
    auto [h1, c1] = nn::lstm_cell(x, h0, c_zero, w, nullptr);
    for (double v : c1.data()) CHECK(v == doctest::Approx(0.0));
    for (double v : h1.data()) CHECK(v == doctest::Approx(0.0));

    Tensor c_two({3}, {2, 2, 2});
    auto [h2, c2] = nn::lstm_cell(x, h0, c_two, w, nullptr);
    for (double v : c2.data()) CHECK(v == doctest::Approx(1.0));
    for (double v : h2.data()) CHECK(v == doctest::Approx(0.5 * std::tanh(1.0)).epsilon(1e-6));
    CHECK(h2.data()[0] == doctest::Approx(0.38079).epsilon(1e-4));
}

TEST_CASE("lstm_cell matches scalar transcription") {
    std::mt19937_64 rng(77);
    for (int iter = 0; iter < 20; ++iter) {
        std::uniform_int_distribution<std::size_t> d(1, 4);
        const std::size_t input = d(rng), hidden = d(rng);
        nn::LstmWeights w = nn::LstmWeights::init(input, hidden, rng);
        Tensor x = oracles::random_tensor({input}, rng);
        Tensor h = oracles::random_tensor({hidden}, rng);
        Tensor c = oracles::random_tensor({hidden}, rng);
        auto [ht, ct] = nn::lstm_cell(x, h, c, w, nullptr);
        auto want = oracles::lstm_scalar(
            x.data(), h.data(), c.data(),
            {w.w_forget.data(), w.w_input.data(), w.w_cell.data(), w.w_output.data()},
            {w.b_forget.data(), w.b_input.data(), w.b_cell.data(), w.b_output.data()}, hidden,
            input);
        for (std::size_t j = 0; j < hidden; ++j) {
            CHECK(ht.data()[j] == doctest::Approx(want.h[j]).epsilon(1e-12));
            CHECK(ct.data()[j] == doctest::Approx(want.c[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("lstm_cell batched rows equal independent rows") {
    std::mt19937_64 rng(31);
    nn::LstmWeights w = nn::LstmWeights::init(3, 4, rng);
    Tensor xb = oracles::random_tensor({5, 3}, rng);
    Tensor hb = oracles::random_tensor({5, 4}, rng);
    Tensor cb = oracles::random_tensor({5, 4}, rng);
    auto [hout, cout] = nn::lstm_cell(xb, hb, cb, w, nullptr);
    for (std::size_t r = 0; r < 5; ++r) {
        Tensor x({3}, {xb.data()[r * 3], xb.data()[r * 3 + 1], xb.data()[r * 3 + 2]});
        Tensor h({4}, {hb.data()[r * 4], hb.data()[r * 4 + 1], hb.data()[r * 4 + 2],
                       hb.data()[r * 4 + 3]});
        Tensor c({4}, {cb.data()[r * 4], cb.data()[r * 4 + 1], cb.data()[r * 4 + 2],
                       cb.data()[r * 4 + 3]});
        auto [h1, c1] = nn::lstm_cell(x, h, c, w, nullptr);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(hout.data()[r * 4 + j] == doctest::Approx(h1.data()[j]).epsilon(1e-14));
            CHECK(cout.data()[r * 4 + j] == doctest::Approx(c1.data()[j]).epsilon(1e-14));
        }
    }
}

TEST_CASE("softmax_cross_entropy examples") {
    Tensor equal({1, 3}, {0.4, 0.4, 0.4});
    CHECK(nn::softmax_cross_entropy(equal, {1}, nullptr).value() ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));

    Tensor confident({1, 3}, {60.0, 0.0, 0.0});
    CHECK(nn::softmax_cross_entropy(confident, {0}, nullptr).value() ==
          doctest::Approx(0.0).epsilon(1e-12));

    Tensor two({1, 2}, {1.0, 2.0});
    CHECK(nn::softmax_cross_entropy(two, {0}, nullptr).value() ==
          doctest::Approx(1.3133).epsilon(1e-4));

    CHECK_THROWS_AS(nn::softmax_cross_entropy(two, {2}, nullptr), ValueError);
}

TEST_CASE("backward basics") {
    // f(w) = w^2 at w = 3 -> gradient 6
    Tensor w = Tensor::scalar(3.0);
    Tape tape;
    Tensor loss = nn::mse_loss(w, Tensor::scalar(0.0), &tape);
    nn::backward(loss);
    CHECK(w.grad()[0] == doctest::Approx(6.0));
    CHECK(tape.empty());  // graph reset

    // loss independent of a parameter -> exactly zero gradient
    Tensor unused = Tensor::scalar(5.0);
    unused.zero_grad();
    Tape tape2;
    Tensor loss2 = nn::mse_loss(w, Tensor::scalar(1.0), &tape2);
    nn::backward(loss2);
    CHECK(unused.grad()[0] == 0.0);

    // non-scalar loss rejected
    Tape tape3;
    Tensor vec = oracles::random_tensor({3}, *(new std::mt19937_64(1)));
    Tensor doubled = nn::stack_rows({vec, vec}, &tape3);
    CHECK_THROWS_AS(nn::backward(doubled), ValueError);
}

TEST_CASE("gradients of every primitive match central finite differences") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> d(1, 4);
    double worst = 0.0;
    int cases = 0;

    auto track = [&](double err) {
        worst = std::max(worst, err);
        ++cases;
    };

    for (int iter = 0; iter < 15; ++iter) {
        // matmul
        {
            const std::size_t m = d(rng), k = d(rng), n = d(rng);
            Tensor a = oracles::random_tensor({m, k}, rng);
            Tensor b = oracles::random_tensor({k, n}, rng);
            track(oracles::max_fd_rel_error(
                [&](Tape* t) { return std::vector<Tensor>{nn::matmul(a, b, t)}; }, {a, b}, rng));
        }
        // depthwise_conv
        {
            Tensor x = oracles::random_tensor({2, 5, 5}, rng);
            Tensor k = oracles::random_tensor({2, 3, 3}, rng);
            const int stride = 1 + (iter % 2), pad = iter % 3;
            track(oracles::max_fd_rel_error(
                [&](Tape* t) {
                    return std::vector<Tensor>{nn::depthwise_conv(x, k, stride, pad, t)};
                },
                {x, k}, rng));
        }
        // pointwise_conv
        {
            Tensor x = oracles::random_tensor({3, 3, 3}, rng);
            Tensor w = oracles::random_tensor({2, 3}, rng);
            track(oracles::max_fd_rel_error(
                [&](Tape* t) { return std::vector<Tensor>{nn::pointwise_conv(x, w, t)}; }, {x, w},
                rng));
        }
        // global_avg_pool
        {
            Tensor x = oracles::random_tensor({3, 4, 4}, rng);
            track(oracles::max_fd_rel_error(
                [&](Tape* t) { return std::vector<Tensor>{nn::global_avg_pool(x, t)}; }, {x}, rng));
        }
        // dense_concat
        {
            Tensor a = oracles::random_tensor({1, 3, 3}, rng);
            Tensor b = oracles::random_tensor({2, 3, 3}, rng);
            track(oracles::max_fd_rel_error(
                [&](Tape* t) { return std::vector<Tensor>{nn::dense_concat({a, b}, t)}; }, {a, b},
                rng));
        }
        // relu — keep activations away from the kink
        {
            Tensor x = oracles::random_tensor({2, 3, 3}, rng);
            for (auto& v : x.data()) {
                if (std::abs(v) < 1e-2) v = v < 0 ? v - 0.5 : v + 0.5;
            }
            track(oracles::max_fd_rel_error(
                [&](Tape* t) { return std::vector<Tensor>{nn::relu(x, t)}; }, {x}, rng));
        }
        // linear
        {
            const std::size_t n = d(rng), m = d(rng);
            Tensor x = oracles::random_tensor({n}, rng);
            Tensor w = oracles::random_tensor({m, n}, rng);
            Tensor b = oracles::random_tensor({m}, rng);
            track(oracles::max_fd_rel_error(
                [&](Tape* t) { return std::vector<Tensor>{nn::linear(x, w, b, t)}; }, {x, w, b},
                rng));
        }
        // add_row_bias / concat_cols / transpose / stack_rows
        {
            Tensor x = oracles::random_tensor({3, 2}, rng);
            Tensor b = oracles::random_tensor({2}, rng);
            track(oracles::max_fd_rel_error(
                [&](Tape* t) { return std::vector<Tensor>{nn::add_row_bias(x, b, t)}; }, {x, b},
                rng));
            Tensor y = oracles::random_tensor({3, 4}, rng);
            track(oracles::max_fd_rel_error(
                [&](Tape* t) { return std::vector<Tensor>{nn::concat_cols(x, y, t)}; }, {x, y},
                rng));
            track(oracles::max_fd_rel_error(
                [&](Tape* t) { return std::vector<Tensor>{nn::transpose(y, t)}; }, {y}, rng));
            Tensor r0 = oracles::random_tensor({4}, rng);
            Tensor r1 = oracles::random_tensor({4}, rng);
            track(oracles::max_fd_rel_error(
                [&](Tape* t) { return std::vector<Tensor>{nn::stack_rows({r0, r1}, t)}; },
                {r0, r1}, rng));
        }
        // lstm_cell (batched)
        {
            const std::size_t input = d(rng), hidden = d(rng), batch = d(rng);
            nn::LstmWeights w = nn::LstmWeights::init(input, hidden, rng);
            Tensor x = oracles::random_tensor({batch, input}, rng);
            Tensor h = oracles::random_tensor({batch, hidden}, rng);
            Tensor c = oracles::random_tensor({batch, hidden}, rng);
            track(oracles::max_fd_rel_error(
                [&](Tape* t) {
                    auto [ht, ct] = nn::lstm_cell(x, h, c, w, t);
                    return std::vector<Tensor>{ht, ct};
                },
                {x, h, c, w.w_forget, w.w_input, w.w_cell, w.w_output, w.b_forget, w.b_input,
                 w.b_cell, w.b_output},
                rng));
        }
        // softmax cross entropy
        {
            const std::size_t batch = d(rng), classes = 2 + d(rng);
            Tensor logits = oracles::random_tensor({batch, classes}, rng, -2.0, 2.0);
            std::vector<std::size_t> labels(batch);
            std::uniform_int_distribution<std::size_t> lab(0, classes - 1);
            for (auto& l : labels) l = lab(rng);
            track(oracles::max_fd_rel_error(
                [&](Tape* t) {
                    return std::vector<Tensor>{nn::softmax_cross_entropy(logits, labels, t)};
                },
                {logits}, rng));
        }
        // mse
        {
            Tensor p = oracles::random_tensor({2, 3}, rng);
            Tensor t0 = oracles::random_tensor({2, 3}, rng);
            track(oracles::max_fd_rel_error(
                [&](Tape* t) { return std::vector<Tensor>{nn::mse_loss(p, t0, t)}; }, {p}, rng));
        }
    }

    CHECK(cases >= 100);
    CHECK(worst < 1e-4);
}

TEST_CASE("linearity of the linear primitives") {
    std::mt19937_64 rng(99);
    Tensor x1 = oracles::random_tensor({2, 4, 4}, rng);
    Tensor x2 = oracles::random_tensor({2, 4, 4}, rng);
    Tensor w = oracles::random_tensor({3, 2}, rng);
    const double alpha = -1.7;

    auto axpy = [&](const Tensor& a, const Tensor& b) {
        Tensor out(a.shape());
        for (std::size_t i = 0; i < a.numel(); ++i)
            out.data()[i] = alpha * a.data()[i] + b.data()[i];
        return out;
    };
    auto expect_linear = [&](auto&& f) {
        Tensor lhs = f(axpy(x1, x2));
        Tensor f1 = f(x1);
        Tensor f2 = f(x2);
        for (std::size_t i = 0; i < lhs.numel(); ++i) {
            CHECK(lhs.data()[i] ==
                  doctest::Approx(alpha * f1.data()[i] + f2.data()[i]).epsilon(1e-12));
        }
    };

    expect_linear([&](const Tensor& v) { return nn::pointwise_conv(v, w, nullptr); });
    expect_linear([&](const Tensor& v) { return nn::global_avg_pool(v, nullptr); });
    // concatenation is linear in all of its inputs jointly
    expect_linear([&](const Tensor& v) { return nn::dense_concat({v, v}, nullptr); });

    Tensor m1 = oracles::random_tensor({3, 3}, rng);
    Tensor m2 = oracles::random_tensor({3, 3}, rng);
    Tensor rhs = oracles::random_tensor({3, 2}, rng);
    Tensor combined({3, 3});
    for (std::size_t i = 0; i < 9; ++i)
        combined.data()[i] = alpha * m1.data()[i] + m2.data()[i];
    Tensor lhs = nn::matmul(combined, rhs, nullptr);
    Tensor p1 = nn::matmul(m1, rhs, nullptr);
    Tensor p2 = nn::matmul(m2, rhs, nullptr);
    for (std::size_t i = 0; i < lhs.numel(); ++i)
        CHECK(lhs.data()[i] == doctest::Approx(alpha * p1.data()[i] + p2.data()[i]).epsilon(1e-12));
}

TEST_CASE("forward and gradients are bit-deterministic") {
    auto run = [](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        Tensor x = oracles::random_tensor({2, 5, 5}, rng);
        Tensor k = oracles::random_tensor({2, 3, 3}, rng);
        Tensor w = oracles::random_tensor({4, 2}, rng);
        Tape tape;
        Tensor conv = nn::depthwise_conv(x, k, 1, 1, &tape);
        Tensor mixed = nn::pointwise_conv(conv, w, &tape);
        Tensor act = nn::relu(mixed, &tape);
        Tensor pooled = nn::global_avg_pool(act, &tape);
        Tensor loss = nn::mse_loss(pooled, Tensor({4}, {0.1, 0.2, 0.3, 0.4}), &tape);
        const double loss_v = loss.value();
        nn::backward(loss);
        std::vector<double> flat;
        flat.push_back(loss_v);
        flat.insert(flat.end(), x.grad().begin(), x.grad().end());
        flat.insert(flat.end(), k.grad().begin(), k.grad().end());
        flat.insert(flat.end(), w.grad().begin(), w.grad().end());
        return flat;
    };
    auto a = run(42), b = run(42);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("sgd_step examples and loop oracle") {
    nn::ParamSet p;
    Tensor w = Tensor::scalar(1.0);
    w.zero_grad();
    w.grad()[0] = 2.0;
    p.add("w", w);
    nn::sgd_step(p, 0.1);
    CHECK(p.get("w").value() == doctest::Approx(0.8));

    nn::sgd_step(p, 0.0);
    CHECK(p.get("w").value() == doctest::Approx(0.8));

    // random set vs element-wise loop
    std::mt19937_64 rng(6);
    nn::ParamSet q;
    q.add("a", oracles::random_tensor({3, 2}, rng));
    q.add("b", oracles::random_tensor({4}, rng));
    std::vector<std::vector<double>> want;
    const double lr = 0.05, lam = 0.3;
    for (auto& [name, t] : q) {
        t.zero_grad();
        for (auto& g : t.grad()) g = std::uniform_real_distribution<double>(-1, 1)(rng);
        std::vector<double> exp_v(t.numel());
        for (std::size_t i = 0; i < t.numel(); ++i)
            exp_v[i] = t.data()[i] - lr * (t.grad()[i] + lam * t.data()[i]);
        want.push_back(exp_v);
    }
    nn::sgd_step(q, lr, lam);
    for (std::size_t e = 0; e < q.size(); ++e) {
        for (std::size_t i = 0; i < q.entry(e).second.numel(); ++i)
            CHECK(q.entry(e).second.data()[i] == doctest::Approx(want[e][i]).epsilon(1e-15));
    }

    nn::ParamSet missing;
    missing.add("m", Tensor::scalar(1.0));
    CHECK_THROWS_AS(nn::sgd_step(missing, 0.1), ValueError);
}

TEST_CASE("param set alignment and ordering") {
    nn::ParamSet a;
    a.add("w1", Tensor({2, 2}, {1, 2, 3, 4}));
    a.add("b1", Tensor({2}, {0.5, -0.5}));
    CHECK_THROWS_AS(a.add("w1", Tensor::scalar(0.0)), ValueError);

    nn::ParamSet b = a.clone();
    CHECK(a.aligned_with(b));
    b.get("w1").data()[0] = 99;  // values differ, still aligned
    CHECK(a.aligned_with(b));

    nn::ParamSet c;
    c.add("b1", Tensor({2}));
    c.add("w1", Tensor({2, 2}));
    std::string why;
    CHECK_FALSE(a.aligned_with(c, &why));  // order matters
    CHECK(why.find("w1") != std::string::npos);
}

TEST_CASE("param set binary round-trip is bit-exact") {
    std::mt19937_64 rng(17);
    nn::ParamSet p;
    p.add("block0.layer0.dw", oracles::random_tensor({6, 3, 3}, rng));
    p.add("block0.layer0.pw", oracles::random_tensor({8, 6}, rng));
    p.add("head.w", oracles::random_tensor({3, 8}, rng));
    p.add("head.b", Tensor({3}, {1e-300, -0.0, 3.14159265358979}));

    auto bytes = p.to_bytes();
    nn::ParamSet q = nn::ParamSet::from_bytes(bytes);
    REQUIRE(p.aligned_with(q));
    for (std::size_t e = 0; e < p.size(); ++e) {
        const auto& pa = p.entry(e).second.data();
        const auto& qa = q.entry(e).second.data();
        CHECK(std::memcmp(pa.data(), qa.data(), pa.size() * sizeof(double)) == 0);
    }
    // byte-stable: serialize -> parse -> serialize is identical
    CHECK(q.to_bytes() == bytes);

    // 32-bit stream: parse succeeds, second round-trip is exact
    auto bytes32 = p.to_bytes(nn::Precision::F32);
    nn::ParamSet r = nn::ParamSet::from_bytes(bytes32);
    CHECK(r.to_bytes(nn::Precision::F32) == bytes32);

    std::stringstream ss;
    p.save(ss);
    nn::ParamSet s = nn::ParamSet::load(ss);
    CHECK(s.to_bytes() == bytes);

    CHECK_THROWS_AS(nn::ParamSet::from_bytes(bytes.data(), 10), IoError);
}

TEST_SUITE_END();
