#include "aq/nn/lstm.hpp"

#include <cmath>

#include "aq/errors.hpp"
#include "aq/nn/param_set.hpp"

namespace aq::nn {

namespace {

double sigmoid(double v) {
    if (v >= 0.0) {
        return 1.0 / (1.0 + std::exp(-v));
    }
    const double e = std::exp(v);
    return e / (1.0 + e);
}

Tensor uniform_tensor(Shape shape, double limit, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

}  // namespace

std::size_t LstmWeights::hidden_size() const { return w_forget.extent(0); }

std::size_t LstmWeights::input_size() const { return w_forget.extent(1) - w_forget.extent(0); }

void LstmWeights::validate() const {
    const Shape& ws = w_forget.shape();
    if (ws.size() != 2 || ws[1] <= ws[0]) {
        throw ShapeError("lstm weights must be [hidden, hidden+input], got " + shape_str(ws));
    }
    for (const Tensor* w : {&w_input, &w_cell, &w_output}) {
        if (w->shape() != ws) {
            throw ShapeError("lstm gate weight shapes differ: " + shape_str(ws) + " vs " +
                             shape_str(w->shape()));
        }
    }
    for (const Tensor* b : {&b_forget, &b_input, &b_cell, &b_output}) {
        if (b->rank() != 1 || b->extent(0) != ws[0]) {
            throw ShapeError("lstm bias must be [hidden]=" + std::to_string(ws[0]) + ", got " +
                             shape_str(b->shape()));
        }
    }
}

LstmWeights LstmWeights::init(std::size_t input, std::size_t hidden, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(hidden + input));
    LstmWeights w;
    w.w_forget = uniform_tensor({hidden, hidden + input}, limit, rng);
    w.w_input = uniform_tensor({hidden, hidden + input}, limit, rng);
    w.w_cell = uniform_tensor({hidden, hidden + input}, limit, rng);
    w.w_output = uniform_tensor({hidden, hidden + input}, limit, rng);
    w.b_forget = Tensor({hidden});
    w.b_input = Tensor({hidden});
    w.b_cell = Tensor({hidden});
    w.b_output = Tensor({hidden});
    // Positive forget bias keeps early cell state from washing out.
    for (auto& v : w.b_forget.data()) v = 1.0;
    return w;
}

void LstmWeights::register_params(ParamSet& params, const std::string& prefix) const {
    params.add(prefix + ".w_forget", w_forget);
    params.add(prefix + ".w_input", w_input);
    params.add(prefix + ".w_cell", w_cell);
    params.add(prefix + ".w_output", w_output);
    params.add(prefix + ".b_forget", b_forget);
    params.add(prefix + ".b_input", b_input);
    params.add(prefix + ".b_cell", b_cell);
    params.add(prefix + ".b_output", b_output);
}

LstmWeights LstmWeights::from_params(const ParamSet& params, const std::string& prefix) {
    LstmWeights w;
    w.w_forget = params.get(prefix + ".w_forget");
    w.w_input = params.get(prefix + ".w_input");
    w.w_cell = params.get(prefix + ".w_cell");
    w.w_output = params.get(prefix + ".w_output");
    w.b_forget = params.get(prefix + ".b_forget");
    w.b_input = params.get(prefix + ".b_input");
    w.b_cell = params.get(prefix + ".b_cell");
    w.b_output = params.get(prefix + ".b_output");
    w.validate();
    return w;
}

std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                                    const LstmWeights& w, Tape* tape) {
    w.validate();
    const std::size_t hidden = w.hidden_size();
    const std::size_t input = w.input_size();

    const bool flat = x.rank() == 1;
    if (flat && (h_prev.rank() != 1 || c_prev.rank() != 1)) {
        throw ShapeError("lstm_cell: mixed ranks: x " + shape_str(x.shape()) + ", h " +
                         shape_str(h_prev.shape()) + ", c " + shape_str(c_prev.shape()));
    }
    const std::size_t batch = flat ? 1 : x.extent(0);
    auto check = [&](const Tensor& t, std::size_t want, const char* name) {
        const std::size_t cols = flat ? t.extent(0) : t.extent(1);
        const std::size_t rows = flat ? 1 : t.extent(0);
        if (t.rank() != (flat ? 1u : 2u) || cols != want || rows != batch) {
            throw ShapeError(std::string("lstm_cell: ") + name + " shape " + shape_str(t.shape()) +
                             " incompatible with weights " + shape_str(w.w_forget.shape()));
        }
    };
    check(x, input, "x");
    check(h_prev, hidden, "h_prev");
    check(c_prev, hidden, "c_prev");

    const std::size_t z_cols = hidden + input;
    // Cached intermediates for the backward pass.
    std::vector<double> z(batch * z_cols);
    std::vector<double> f(batch * hidden), i_g(batch * hidden), g(batch * hidden),
        o(batch * hidden), tanh_c(batch * hidden);

    Tensor h_t(flat ? Shape{hidden} : Shape{batch, hidden});
    Tensor c_t(flat ? Shape{hidden} : Shape{batch, hidden});
    {
        const auto& xv = x.data();
        const auto& hv = h_prev.data();
        const auto& cv = c_prev.data();
        auto& ho = h_t.data();
        auto& co = c_t.data();
        for (std::size_t bi = 0; bi < batch; ++bi) {
            double* zr = &z[bi * z_cols];
            for (std::size_t j = 0; j < hidden; ++j) zr[j] = hv[bi * hidden + j];
            for (std::size_t j = 0; j < input; ++j) zr[hidden + j] = xv[bi * input + j];

            for (std::size_t j = 0; j < hidden; ++j) {
                double af = w.b_forget.data()[j];
                double ai = w.b_input.data()[j];
                double ac = w.b_cell.data()[j];
                double ao = w.b_output.data()[j];
                const double* wf = &w.w_forget.data()[j * z_cols];
                const double* wi = &w.w_input.data()[j * z_cols];
                const double* wc = &w.w_cell.data()[j * z_cols];
                const double* wo = &w.w_output.data()[j * z_cols];
                for (std::size_t kk = 0; kk < z_cols; ++kk) {
                    const double zv = zr[kk];
                    af += wf[kk] * zv;
                    ai += wi[kk] * zv;
                    ac += wc[kk] * zv;
                    ao += wo[kk] * zv;
                }
                const std::size_t idx = bi * hidden + j;
                f[idx] = sigmoid(af);
                i_g[idx] = sigmoid(ai);
                g[idx] = std::tanh(ac);
                o[idx] = sigmoid(ao);
                co[idx] = f[idx] * cv[idx] + i_g[idx] * g[idx];
                tanh_c[idx] = std::tanh(co[idx]);
                ho[idx] = o[idx] * tanh_c[idx];
            }
        }
    }

    if (tape) {
        h_t.attach(tape);
        c_t.attach(tape);
        Tensor xc = x, hc = h_prev, cc = c_prev, hto = h_t, cto = c_t;
        LstmWeights wc = w;
        tape->record(
            {x, h_prev, c_prev, w.w_forget, w.w_input, w.w_cell, w.w_output, w.b_forget, w.b_input,
             w.b_cell, w.b_output},
            {h_t, c_t},
            [xc, hc, cc, hto, cto, wc, z, f, i_g, g, o, tanh_c, batch, hidden, input,
             z_cols]() mutable {
                const auto& gh = hto.grad();
                const auto& gc_out = cto.grad();
                const auto& cv = cc.data();
                auto& gx = xc.grad();
                auto& ghp = hc.grad();
                auto& gcp = cc.grad();
                auto& gwf = wc.w_forget.grad();
                auto& gwi = wc.w_input.grad();
                auto& gwc = wc.w_cell.grad();
                auto& gwo = wc.w_output.grad();
                auto& gbf = wc.b_forget.grad();
                auto& gbi = wc.b_input.grad();
                auto& gbc = wc.b_cell.grad();
                auto& gbo = wc.b_output.grad();

                std::vector<double> gz(z_cols);
                for (std::size_t bi = 0; bi < batch; ++bi) {
                    std::fill(gz.begin(), gz.end(), 0.0);
                    const double* zr = &z[bi * z_cols];
                    for (std::size_t j = 0; j < hidden; ++j) {
                        const std::size_t idx = bi * hidden + j;
                        const double dh = gh[idx];
                        const double d_o = dh * tanh_c[idx];
                        double dc = gc_out[idx] + dh * o[idx] * (1.0 - tanh_c[idx] * tanh_c[idx]);
                        const double df = dc * cv[idx];
                        const double di = dc * g[idx];
                        const double dg = dc * i_g[idx];
                        gcp[idx] += dc * f[idx];

                        const double daf = df * f[idx] * (1.0 - f[idx]);
                        const double dai = di * i_g[idx] * (1.0 - i_g[idx]);
                        const double dac = dg * (1.0 - g[idx] * g[idx]);
                        const double dao = d_o * o[idx] * (1.0 - o[idx]);

                        gbf[j] += daf;
                        gbi[j] += dai;
                        gbc[j] += dac;
                        gbo[j] += dao;

                        double* gwf_row = &gwf[j * z_cols];
                        double* gwi_row = &gwi[j * z_cols];
                        double* gwc_row = &gwc[j * z_cols];
                        double* gwo_row = &gwo[j * z_cols];
                        const double* wf = &wc.w_forget.data()[j * z_cols];
                        const double* wi = &wc.w_input.data()[j * z_cols];
                        const double* wcd = &wc.w_cell.data()[j * z_cols];
                        const double* wo = &wc.w_output.data()[j * z_cols];
                        for (std::size_t kk = 0; kk < z_cols; ++kk) {
                            const double zv = zr[kk];
                            gwf_row[kk] += daf * zv;
                            gwi_row[kk] += dai * zv;
                            gwc_row[kk] += dac * zv;
                            gwo_row[kk] += dao * zv;
                            gz[kk] += daf * wf[kk] + dai * wi[kk] + dac * wcd[kk] + dao * wo[kk];
                        }
                    }
                    for (std::size_t j = 0; j < hidden; ++j) ghp[bi * hidden + j] += gz[j];
                    for (std::size_t j = 0; j < input; ++j) gx[bi * input + j] += gz[hidden + j];
                }
            });
    }
    return {h_t, c_t};
}

}  // namespace aq::nn
