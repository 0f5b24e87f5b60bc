#pragma once

// Independent reference implementations used by the test suites. Everything
// here is written as plainly as possible (scalar loops, direct formula
// transcriptions) and stays decoupled from the library's compute paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "aq/nn/ops.hpp"
#include "aq/nn/tensor.hpp"

namespace oracles {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> out(n);
    for (auto& v : out) v = dist(rng);
    return out;
}

inline aq::nn::Tensor random_tensor(aq::nn::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                    double hi = 1.0) {
    auto n = aq::nn::shape_numel(shape);
    return aq::nn::Tensor(std::move(shape), random_values(n, rng, lo, hi));
}

// --- plain-loop references -------------------------------------------------

inline std::vector<double> matmul_loop(const std::vector<double>& a, const std::vector<double>& b,
                                       std::size_t m, std::size_t k, std::size_t n) {
    std::vector<double> c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t kk = 0; kk < k; ++kk) c[i * n + j] += a[i * k + kk] * b[kk * n + j];
    return c;
}

// Sliding-window depthwise convolution, one scalar at a time.
inline std::vector<double> depthwise_loop(const std::vector<double>& x,
                                          const std::vector<double>& ker, std::size_t c,
                                          std::size_t h, std::size_t w, std::size_t kh,
                                          std::size_t kw, int stride, int pad, std::size_t oh,
                                          std::size_t ow) {
    std::vector<double> out(c * oh * ow, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (std::size_t ky = 0; ky < kh; ++ky)
                    for (std::size_t kx = 0; kx < kw; ++kx) {
                        const long iy = static_cast<long>(oy) * stride - pad + static_cast<long>(ky);
                        const long ix = static_cast<long>(ox) * stride - pad + static_cast<long>(kx);
                        if (iy < 0 || iy >= static_cast<long>(h) || ix < 0 ||
                            ix >= static_cast<long>(w))
                            continue;
                        acc += x[(ch * h + static_cast<std::size_t>(iy)) * w +
                                 static_cast<std::size_t>(ix)] *
                               ker[(ch * kh + ky) * kw + kx];
                    }
                out[(ch * oh + oy) * ow + ox] = acc;
            }
    return out;
}

// Per-pixel matrix-vector product across channels.
inline std::vector<double> pointwise_loop(const std::vector<double>& x,
                                          const std::vector<double>& w, std::size_t c,
                                          std::size_t n, std::size_t hw) {
    std::vector<double> out(n * hw, 0.0);
    for (std::size_t p = 0; p < hw; ++p)
        for (std::size_t oc = 0; oc < n; ++oc) {
            double acc = 0.0;
            for (std::size_t ic = 0; ic < c; ++ic) acc += w[oc * c + ic] * x[ic * hw + p];
            out[oc * hw + p] = acc;
        }
    return out;
}

// Scalar transcription of the LSTM gate equations for a batch of one.
struct LstmScalarOut {
    std::vector<double> h, c;
};
inline LstmScalarOut lstm_scalar(const std::vector<double>& x, const std::vector<double>& h_prev,
                                 const std::vector<double>& c_prev,
                                 const std::vector<std::vector<double>>& w,  // f,i,C,o
                                 const std::vector<std::vector<double>>& b, std::size_t hidden,
                                 std::size_t input) {
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    std::vector<double> z;
    z.insert(z.end(), h_prev.begin(), h_prev.end());
    z.insert(z.end(), x.begin(), x.end());
    const std::size_t zc = hidden + input;
    LstmScalarOut out;
    out.h.resize(hidden);
    out.c.resize(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
        double af = b[0][j], ai = b[1][j], ac = b[2][j], ao = b[3][j];
        for (std::size_t k = 0; k < zc; ++k) {
            af += w[0][j * zc + k] * z[k];
            ai += w[1][j * zc + k] * z[k];
            ac += w[2][j * zc + k] * z[k];
            ao += w[3][j * zc + k] * z[k];
        }
        const double f = sig(af), i = sig(ai), g = std::tanh(ac), o = sig(ao);
        out.c[j] = f * c_prev[j] + i * g;
        out.h[j] = o * std::tanh(out.c[j]);
    }
    return out;
}

// --- finite differences ----------------------------------------------------

// Central finite differences of a scalar functional wrt every element of t.
template <typename F>
std::vector<double> central_diff(F&& eval, aq::nn::Tensor& t, double step = 1e-5) {
    std::vector<double> g(t.numel());
    auto& d = t.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double keep = d[i];
        d[i] = keep + step;
        const double up = eval();
        d[i] = keep - step;
        const double dn = eval();
        d[i] = keep;
        g[i] = (up - dn) / (2.0 * step);
    }
    return g;
}

inline double rel_error(double a, double n) {
    const double denom = std::max({std::abs(a), std::abs(n), 1e-6});
    return std::abs(a - n) / denom;
}

// Runs `fwd` once with a tape, projects all outputs to a scalar with fixed
// random weights, backpropagates, and compares each `wrt` gradient against
// central finite differences of the same projection. Returns the max
// relative error.
inline double max_fd_rel_error(const std::function<std::vector<aq::nn::Tensor>(aq::nn::Tape*)>& fwd,
                               std::vector<aq::nn::Tensor> wrt, std::mt19937_64& rng,
                               double step = 1e-5) {
    using aq::nn::Tape;
    using aq::nn::Tensor;

    std::vector<Tensor> probe = fwd(nullptr);
    std::vector<std::vector<double>> weights;
    weights.reserve(probe.size());
    for (const auto& o : probe) weights.push_back(random_values(o.numel(), rng));

    const auto project = [&](const std::vector<Tensor>& outs) {
        double acc = 0.0;
        for (std::size_t i = 0; i < outs.size(); ++i) acc += dot(outs[i].data(), weights[i]);
        return acc;
    };

    // Analytic gradients.
    Tape tape;
    std::vector<Tensor> outs = fwd(&tape);
    Tensor loss;
    for (std::size_t i = 0; i < outs.size(); ++i) {
        Tensor term = aq::nn::weighted_sum(outs[i], weights[i], &tape);
        if (i == 0) {
            loss = term;
        } else {
            // accumulate scalars: loss = loss + term via weighted_sum on a stack
            loss = aq::nn::weighted_sum(aq::nn::stack_rows({loss, term}, &tape), {1.0, 1.0}, &tape);
        }
    }
    for (auto& t : wrt) t.zero_grad();
    aq::nn::backward(loss);
    std::vector<std::vector<double>> analytic;
    for (auto& t : wrt) analytic.push_back(t.grad());

    double worst = 0.0;
    const auto eval = [&]() { return project(fwd(nullptr)); };
    for (std::size_t ti = 0; ti < wrt.size(); ++ti) {
        auto numeric = central_diff(eval, wrt[ti], step);
        for (std::size_t i = 0; i < numeric.size(); ++i) {
            worst = std::max(worst, rel_error(analytic[ti][i], numeric[i]));
        }
    }
    return worst;
}

}  // namespace oracles
