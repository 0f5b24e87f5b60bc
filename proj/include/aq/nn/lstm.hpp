#pragma once

#include <random>
#include <string>
#include <utility>

#include "aq/nn/tensor.hpp"

namespace aq::nn {

class ParamSet;

/**
 * Gate weights of one LSTM cell. Each W_* acts on the concatenation
 * [h_prev, x] and has shape [hidden, hidden + input]; each bias has
 * length hidden.
 */
struct LstmWeights {
    Tensor w_forget, w_input, w_cell, w_output;
    Tensor b_forget, b_input, b_cell, b_output;

    std::size_t hidden_size() const;
    std::size_t input_size() const;
    void validate() const;

    // Uniform init scaled by the concatenated fan-in.
    static LstmWeights init(std::size_t input, std::size_t hidden, std::mt19937_64& rng);

    void register_params(ParamSet& params, const std::string& prefix) const;
    static LstmWeights from_params(const ParamSet& params, const std::string& prefix);
};

/**
 * One LSTM step:
 *   f = sigma(W_f [h,x] + b_f)      i = sigma(W_i [h,x] + b_i)
 *   g = tanh (W_C [h,x] + b_C)      o = sigma(W_o [h,x] + b_o)
 *   c_t = f * c_prev + i * g        h_t = o * tanh(c_t)
 *
 * Inputs are [B, input] / [B, hidden] rows (1-D tensors are treated as a
 * batch of one and returned 1-D). Returns (h_t, c_t).
 */
std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                                    const LstmWeights& w, Tape* tape);

}  // namespace aq::nn
