#include "aq/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aq/errors.hpp"

namespace aq::nn {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         " tensor, got shape " + shape_str(t.shape()));
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b, Tape* tape) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.extent(0), k = a.extent(1), k2 = b.extent(0), n = b.extent(1);
    require(k == k2, "matmul: inner extents differ: " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));

    Tensor out({m, n});
    {
        const auto& av = a.data();
        const auto& bv = b.data();
        auto& cv = out.data();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t kk = 0; kk < k; ++kk) {
                const double aik = av[i * k + kk];
                const double* brow = &bv[kk * n];
                double* crow = &cv[i * n];
                for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
            }
        }
    }

    if (tape) {
        out.attach(tape);
        Tensor ac = a, bc = b, oc = out;
        tape->record({a, b}, {out}, [ac, bc, oc, m, k, n]() mutable {
            const auto& go = oc.grad();
            const auto& av = ac.data();
            const auto& bv = bc.data();
            auto& ga = ac.grad();
            auto& gb = bc.grad();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t kk = 0; kk < k; ++kk) {
                    const double* brow = &bv[kk * n];
                    const double* grow = &go[i * n];
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                    ga[i * k + kk] += acc;
                }
            }
            for (std::size_t kk = 0; kk < k; ++kk) {
                for (std::size_t i = 0; i < m; ++i) {
                    const double aik = av[i * k + kk];
                    const double* grow = &go[i * n];
                    double* gbrow = &gb[kk * n];
                    for (std::size_t j = 0; j < n; ++j) gbrow[j] += aik * grow[j];
                }
            }
        });
    }
    return out;
}

Tensor depthwise_conv(const Tensor& x, const Tensor& kernel, int stride, int pad, Tape* tape) {
    require_rank(x, 3, "depthwise_conv");
    require_rank(kernel, 3, "depthwise_conv");
    if (stride < 1) throw ValueError("depthwise_conv: stride must be >= 1");
    if (pad < 0) throw ValueError("depthwise_conv: pad must be >= 0");
    const std::size_t c = x.extent(0), h = x.extent(1), w = x.extent(2);
    const std::size_t kh = kernel.extent(1), kw = kernel.extent(2);
    require(kernel.extent(0) == c, "depthwise_conv: channel mismatch: input " +
                                       shape_str(x.shape()) + ", kernel " +
                                       shape_str(kernel.shape()));
    const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(h) + 2 * pad;
    const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(w) + 2 * pad;
    require(static_cast<std::ptrdiff_t>(kh) <= ph && static_cast<std::ptrdiff_t>(kw) <= pw,
            "depthwise_conv: kernel " + shape_str(kernel.shape()) +
                " larger than padded input " + shape_str(x.shape()) + " with pad " +
                std::to_string(pad));
    const std::size_t oh = static_cast<std::size_t>((ph - static_cast<std::ptrdiff_t>(kh)) / stride) + 1;
    const std::size_t ow = static_cast<std::size_t>((pw - static_cast<std::ptrdiff_t>(kw)) / stride) + 1;

    Tensor out({c, oh, ow});
    {
        const auto& xv = x.data();
        const auto& kv = kernel.data();
        auto& ov = out.data();
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* xc = &xv[ch * h * w];
            const double* kc = &kv[ch * kh * kw];
            double* oc = &ov[ch * oh * ow];
            for (std::size_t oy = 0; oy < oh; ++oy) {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    double acc = 0.0;
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const std::ptrdiff_t iy =
                            static_cast<std::ptrdiff_t>(oy) * stride - pad + static_cast<std::ptrdiff_t>(ky);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox) * stride - pad + static_cast<std::ptrdiff_t>(kx);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            acc += xc[iy * static_cast<std::ptrdiff_t>(w) + ix] * kc[ky * kw + kx];
                        }
                    }
                    oc[oy * ow + ox] = acc;
                }
            }
        }
    }

    if (tape) {
        out.attach(tape);
        Tensor xc = x, kc = kernel, oc = out;
        tape->record({x, kernel}, {out}, [xc, kc, oc, c, h, w, kh, kw, oh, ow, stride, pad]() mutable {
            const auto& go = oc.grad();
            const auto& xv = xc.data();
            const auto& kv = kc.data();
            auto& gx = xc.grad();
            auto& gk = kc.grad();
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double* xp = &xv[ch * h * w];
                const double* kp = &kv[ch * kh * kw];
                const double* gop = &go[ch * oh * ow];
                double* gxp = &gx[ch * h * w];
                double* gkp = &gk[ch * kh * kw];
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const double g = gop[oy * ow + ox];
                        if (g == 0.0) continue;
                        for (std::size_t ky = 0; ky < kh; ++ky) {
                            const std::ptrdiff_t iy =
                                static_cast<std::ptrdiff_t>(oy) * stride - pad + static_cast<std::ptrdiff_t>(ky);
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                            for (std::size_t kx = 0; kx < kw; ++kx) {
                                const std::ptrdiff_t ix =
                                    static_cast<std::ptrdiff_t>(ox) * stride - pad + static_cast<std::ptrdiff_t>(kx);
                                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                                const std::size_t xi =
                                    static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix);
                                gxp[xi] += g * kp[ky * kw + kx];
                                gkp[ky * kw + kx] += g * xp[xi];
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor pointwise_conv(const Tensor& x, const Tensor& w, Tape* tape) {
    require_rank(x, 3, "pointwise_conv");
    require_rank(w, 2, "pointwise_conv");
    const std::size_t c = x.extent(0), h = x.extent(1), width = x.extent(2);
    const std::size_t n = w.extent(0);
    require(w.extent(1) == c, "pointwise_conv: channel mismatch: input " + shape_str(x.shape()) +
                                  ", weights " + shape_str(w.shape()));
    const std::size_t hw = h * width;

    Tensor out({n, h, width});
    {
        const auto& xv = x.data();
        const auto& wv = w.data();
        auto& ov = out.data();
        for (std::size_t oc = 0; oc < n; ++oc) {
            double* op = &ov[oc * hw];
            for (std::size_t ic = 0; ic < c; ++ic) {
                const double wi = wv[oc * c + ic];
                if (wi == 0.0) continue;
                const double* xp = &xv[ic * hw];
                for (std::size_t p = 0; p < hw; ++p) op[p] += wi * xp[p];
            }
        }
    }

    if (tape) {
        out.attach(tape);
        Tensor xc = x, wc = w, oc = out;
        tape->record({x, w}, {out}, [xc, wc, oc, c, n, hw]() mutable {
            const auto& go = oc.grad();
            const auto& xv = xc.data();
            const auto& wv = wc.data();
            auto& gx = xc.grad();
            auto& gw = wc.grad();
            for (std::size_t och = 0; och < n; ++och) {
                const double* gop = &go[och * hw];
                for (std::size_t ic = 0; ic < c; ++ic) {
                    const double wi = wv[och * c + ic];
                    const double* xp = &xv[ic * hw];
                    double* gxp = &gx[ic * hw];
                    double acc = 0.0;
                    for (std::size_t p = 0; p < hw; ++p) {
                        gxp[p] += wi * gop[p];
                        acc += gop[p] * xp[p];
                    }
                    gw[och * c + ic] += acc;
                }
            }
        });
    }
    return out;
}

Tensor global_avg_pool(const Tensor& x, Tape* tape) {
    require_rank(x, 3, "global_avg_pool");
    const std::size_t c = x.extent(0), h = x.extent(1), w = x.extent(2);
    const std::size_t hw = h * w;
    Tensor out({c});
    {
        const auto& xv = x.data();
        auto& ov = out.data();
        for (std::size_t ch = 0; ch < c; ++ch) {
            double acc = 0.0;
            const double* xp = &xv[ch * hw];
            for (std::size_t p = 0; p < hw; ++p) acc += xp[p];
            ov[ch] = acc / static_cast<double>(hw);
        }
    }

    if (tape) {
        out.attach(tape);
        Tensor xc = x, oc = out;
        tape->record({x}, {out}, [xc, oc, c, hw]() mutable {
            const auto& go = oc.grad();
            auto& gx = xc.grad();
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double g = go[ch] / static_cast<double>(hw);
                double* gxp = &gx[ch * hw];
                for (std::size_t p = 0; p < hw; ++p) gxp[p] += g;
            }
        });
    }
    return out;
}

Tensor dense_concat(const std::vector<Tensor>& maps, Tape* tape) {
    if (maps.empty()) throw ShapeError("dense_concat: need at least one input map");
    if (maps.size() == 1) return maps[0];
    const std::size_t h = maps[0].extent(1), w = maps[0].extent(2);
    std::size_t total_c = 0;
    for (const auto& m : maps) {
        require_rank(m, 3, "dense_concat");
        require(m.extent(1) == h && m.extent(2) == w,
                "dense_concat: spatial mismatch: " + shape_str(maps[0].shape()) + " vs " +
                    shape_str(m.shape()));
        total_c += m.extent(0);
    }
    const std::size_t hw = h * w;

    Tensor out({total_c, h, w});
    {
        auto& ov = out.data();
        std::size_t offset = 0;
        for (const auto& m : maps) {
            const auto& mv = m.data();
            std::copy(mv.begin(), mv.end(), ov.begin() + static_cast<std::ptrdiff_t>(offset));
            offset += mv.size();
        }
    }

    if (tape) {
        out.attach(tape);
        std::vector<Tensor> ins = maps;
        Tensor oc = out;
        tape->record(maps, {out}, [ins, oc, hw]() mutable {
            (void)hw;
            const auto& go = oc.grad();
            std::size_t offset = 0;
            for (auto& m : ins) {
                auto& gm = m.grad();
                for (std::size_t i = 0; i < gm.size(); ++i) gm[i] += go[offset + i];
                offset += gm.size();
            }
        });
    }
    return out;
}

Tensor relu(const Tensor& x, Tape* tape) {
    Tensor out(x.shape());
    {
        const auto& xv = x.data();
        auto& ov = out.data();
        for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    }
    if (tape) {
        out.attach(tape);
        Tensor xc = x, oc = out;
        tape->record({x}, {out}, [xc, oc]() mutable {
            const auto& go = oc.grad();
            const auto& xv = xc.data();
            auto& gx = xc.grad();
            for (std::size_t i = 0; i < xv.size(); ++i) {
                if (xv[i] > 0.0) gx[i] += go[i];
            }
        });
    }
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b, Tape* tape) {
    require_rank(x, 1, "linear");
    require_rank(w, 2, "linear");
    require_rank(b, 1, "linear");
    const std::size_t n = x.extent(0), m = w.extent(0);
    require(w.extent(1) == n, "linear: weight shape " + shape_str(w.shape()) +
                                  " does not match input " + shape_str(x.shape()));
    require(b.extent(0) == m, "linear: bias shape " + shape_str(b.shape()) +
                                  " does not match weight " + shape_str(w.shape()));

    Tensor out({m});
    {
        const auto& xv = x.data();
        const auto& wv = w.data();
        const auto& bv = b.data();
        auto& ov = out.data();
        for (std::size_t i = 0; i < m; ++i) {
            double acc = bv[i];
            const double* wrow = &wv[i * n];
            for (std::size_t j = 0; j < n; ++j) acc += wrow[j] * xv[j];
            ov[i] = acc;
        }
    }

    if (tape) {
        out.attach(tape);
        Tensor xc = x, wc = w, bc = b, oc = out;
        tape->record({x, w, b}, {out}, [xc, wc, bc, oc, m, n]() mutable {
            const auto& go = oc.grad();
            const auto& xv = xc.data();
            const auto& wv = wc.data();
            auto& gx = xc.grad();
            auto& gw = wc.grad();
            auto& gb = bc.grad();
            for (std::size_t i = 0; i < m; ++i) {
                const double g = go[i];
                gb[i] += g;
                const double* wrow = &wv[i * n];
                double* gwrow = &gw[i * n];
                for (std::size_t j = 0; j < n; ++j) {
                    gx[j] += g * wrow[j];
                    gwrow[j] += g * xv[j];
                }
            }
        });
    }
    return out;
}

Tensor add_row_bias(const Tensor& x, const Tensor& b, Tape* tape) {
    require_rank(x, 2, "add_row_bias");
    require_rank(b, 1, "add_row_bias");
    const std::size_t r = x.extent(0), c = x.extent(1);
    require(b.extent(0) == c, "add_row_bias: bias " + shape_str(b.shape()) +
                                  " does not match rows of " + shape_str(x.shape()));
    Tensor out({r, c});
    {
        const auto& xv = x.data();
        const auto& bv = b.data();
        auto& ov = out.data();
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) ov[i * c + j] = xv[i * c + j] + bv[j];
        }
    }
    if (tape) {
        out.attach(tape);
        Tensor xc = x, bc = b, oc = out;
        tape->record({x, b}, {out}, [xc, bc, oc, r, c]() mutable {
            const auto& go = oc.grad();
            auto& gx = xc.grad();
            auto& gb = bc.grad();
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    gx[i * c + j] += go[i * c + j];
                    gb[j] += go[i * c + j];
                }
            }
        });
    }
    return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b, Tape* tape) {
    require_rank(a, 2, "concat_cols");
    require_rank(b, 2, "concat_cols");
    const std::size_t r = a.extent(0), c1 = a.extent(1), c2 = b.extent(1);
    require(b.extent(0) == r, "concat_cols: row mismatch: " + shape_str(a.shape()) + " vs " +
                                  shape_str(b.shape()));
    Tensor out({r, c1 + c2});
    {
        const auto& av = a.data();
        const auto& bv = b.data();
        auto& ov = out.data();
        for (std::size_t i = 0; i < r; ++i) {
            std::copy(av.begin() + static_cast<std::ptrdiff_t>(i * c1),
                      av.begin() + static_cast<std::ptrdiff_t>((i + 1) * c1),
                      ov.begin() + static_cast<std::ptrdiff_t>(i * (c1 + c2)));
            std::copy(bv.begin() + static_cast<std::ptrdiff_t>(i * c2),
                      bv.begin() + static_cast<std::ptrdiff_t>((i + 1) * c2),
                      ov.begin() + static_cast<std::ptrdiff_t>(i * (c1 + c2) + c1));
        }
    }
    if (tape) {
        out.attach(tape);
        Tensor ac = a, bc = b, oc = out;
        tape->record({a, b}, {out}, [ac, bc, oc, r, c1, c2]() mutable {
            const auto& go = oc.grad();
            auto& ga = ac.grad();
            auto& gb = bc.grad();
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c1; ++j) ga[i * c1 + j] += go[i * (c1 + c2) + j];
                for (std::size_t j = 0; j < c2; ++j) gb[i * c2 + j] += go[i * (c1 + c2) + c1 + j];
            }
        });
    }
    return out;
}

Tensor stack_rows(const std::vector<Tensor>& rows, Tape* tape) {
    if (rows.empty()) throw ShapeError("stack_rows: need at least one row");
    const std::size_t n = rows[0].numel();
    for (const auto& r : rows) {
        require_rank(r, 1, "stack_rows");
        require(r.numel() == n, "stack_rows: row length mismatch: " + shape_str(rows[0].shape()) +
                                    " vs " + shape_str(r.shape()));
    }
    Tensor out({rows.size(), n});
    {
        auto& ov = out.data();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& rv = rows[i].data();
            std::copy(rv.begin(), rv.end(), ov.begin() + static_cast<std::ptrdiff_t>(i * n));
        }
    }
    if (tape) {
        out.attach(tape);
        std::vector<Tensor> ins = rows;
        Tensor oc = out;
        tape->record(rows, {out}, [ins, oc, n]() mutable {
            const auto& go = oc.grad();
            for (std::size_t i = 0; i < ins.size(); ++i) {
                auto& gr = ins[i].grad();
                for (std::size_t j = 0; j < n; ++j) gr[j] += go[i * n + j];
            }
        });
    }
    return out;
}

Tensor transpose(const Tensor& x, Tape* tape) {
    require_rank(x, 2, "transpose");
    const std::size_t r = x.extent(0), c = x.extent(1);
    Tensor out({c, r});
    {
        const auto& xv = x.data();
        auto& ov = out.data();
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) ov[j * r + i] = xv[i * c + j];
        }
    }
    if (tape) {
        out.attach(tape);
        Tensor xc = x, oc = out;
        tape->record({x}, {out}, [xc, oc, r, c]() mutable {
            const auto& go = oc.grad();
            auto& gx = xc.grad();
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += go[j * r + i];
            }
        });
    }
    return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels,
                             Tape* tape) {
    require_rank(logits, 2, "softmax_cross_entropy");
    const std::size_t b = logits.extent(0), classes = logits.extent(1);
    if (labels.size() != b) {
        throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for batch of " + std::to_string(b));
    }
    for (std::size_t i = 0; i < b; ++i) {
        if (labels[i] >= classes) {
            throw ValueError("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                             " out of range [0," + std::to_string(classes) + ") at row " +
                             std::to_string(i));
        }
    }
    if (!logits.all_finite()) throw ValueError("softmax_cross_entropy: non-finite logits");

    // Cache softmax probabilities for the backward pass.
    std::vector<double> probs(b * classes);
    double total = 0.0;
    {
        const auto& lv = logits.data();
        for (std::size_t i = 0; i < b; ++i) {
            const double* row = &lv[i * classes];
            double mx = row[0];
            for (std::size_t cidx = 1; cidx < classes; ++cidx) mx = std::max(mx, row[cidx]);
            double denom = 0.0;
            for (std::size_t cidx = 0; cidx < classes; ++cidx) {
                probs[i * classes + cidx] = std::exp(row[cidx] - mx);
                denom += probs[i * classes + cidx];
            }
            for (std::size_t cidx = 0; cidx < classes; ++cidx) probs[i * classes + cidx] /= denom;
            total += (mx + std::log(denom)) - row[labels[i]];
        }
    }
    Tensor out = Tensor::scalar(total / static_cast<double>(b));

    if (tape) {
        out.attach(tape);
        Tensor lc = logits, oc = out;
        std::vector<std::size_t> lab = labels;
        tape->record({logits}, {out}, [lc, oc, lab, probs, b, classes]() mutable {
            const double g = oc.grad()[0] / static_cast<double>(b);
            auto& gl = lc.grad();
            for (std::size_t i = 0; i < b; ++i) {
                for (std::size_t cidx = 0; cidx < classes; ++cidx) {
                    const double delta = (cidx == lab[i]) ? 1.0 : 0.0;
                    gl[i * classes + cidx] += g * (probs[i * classes + cidx] - delta);
                }
            }
        });
    }
    return out;
}

Tensor mse_loss(const Tensor& pred, const Tensor& target, Tape* tape) {
    if (pred.shape() != target.shape()) {
        throw ShapeError("mse_loss: shape mismatch: " + shape_str(pred.shape()) + " vs " +
                         shape_str(target.shape()));
    }
    const std::size_t n = pred.numel();
    double acc = 0.0;
    {
        const auto& pv = pred.data();
        const auto& tv = target.data();
        for (std::size_t i = 0; i < n; ++i) {
            const double d = pv[i] - tv[i];
            acc += d * d;
        }
    }
    Tensor out = Tensor::scalar(acc / static_cast<double>(n));
    if (tape) {
        out.attach(tape);
        Tensor pc = pred, tc = target, oc = out;
        tape->record({pred}, {out}, [pc, tc, oc, n]() mutable {
            const double g = oc.grad()[0] * 2.0 / static_cast<double>(n);
            const auto& pv = pc.data();
            const auto& tv = tc.data();
            auto& gp = pc.grad();
            for (std::size_t i = 0; i < n; ++i) gp[i] += g * (pv[i] - tv[i]);
        });
    }
    return out;
}

Tensor weighted_sum(const Tensor& x, const std::vector<double>& weights, Tape* tape) {
    if (weights.size() != x.numel()) {
        throw ShapeError("weighted_sum: " + std::to_string(weights.size()) +
                         " weights for tensor " + shape_str(x.shape()));
    }
    double acc = 0.0;
    const auto& xv = x.data();
    for (std::size_t i = 0; i < xv.size(); ++i) acc += weights[i] * xv[i];
    Tensor out = Tensor::scalar(acc);
    if (tape) {
        out.attach(tape);
        Tensor xc = x, oc = out;
        std::vector<double> w = weights;
        tape->record({x}, {out}, [xc, oc, w]() mutable {
            const double g = oc.grad()[0];
            auto& gx = xc.grad();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * w[i];
        });
    }
    return out;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double denom = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        denom += out[i];
    }
    for (auto& v : out) v /= denom;
    return out;
}

}  // namespace aq::nn
