#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aq/data/observations.hpp"
#include "aq/graph/stations.hpp"
#include "aq/nn/lstm.hpp"
#include "aq/nn/param_set.hpp"
#include "aq/nn/tensor.hpp"

namespace aq::graph {

struct GcLstmConfig {
    int window = 8;    // T input steps
    int horizon = 3;   // T' forecast steps
    int gc_out = 8;    // graph-convolution output width
    int hidden = 32;   // LSTM state size
    double lr = 0.05;
    int epochs = 30;
    std::uint64_t seed = 0;
    bool use_graph = true;  // false gives the plain-LSTM baseline

    void validate() const;
};

// One spectral propagation step: activation(P * J * W), J[N,F_in], W[F_in,F_out].
nn::Tensor gc_forward(const nn::Tensor& propagation, const nn::Tensor& signal,
                      const nn::Tensor& weights, nn::Tape* tape, bool rectify = true);

/**
 * Graph-convolutional LSTM forecaster. Per timestep the station signal X_t
 * is propagated through the graph, the result is concatenated onto X_t, and
 * a station-batched shared LSTM consumes the rows; the final hidden state
 * feeds a fully connected layer emitting all horizons at once ([T', N]).
 *
 * AQI values are standardized per station with training-split statistics and
 * de-standardized in forecast().
 */
class GcLstm {
public:
    GcLstm(const StationGraph& graph, std::size_t feature_count, GcLstmConfig cfg);

    const GcLstmConfig& config() const { return cfg_; }
    nn::ParamSet& params() { return params_; }
    const nn::ParamSet& params() const { return params_; }
    std::size_t station_count() const { return n_; }
    std::size_t feature_count() const { return m_; }

    // SGD over seeded-shuffled windows, one window per step; returns the
    // per-epoch mean training loss (standardized MSE).
    std::vector<double> fit(const std::vector<data::SeriesWindow>& train);

    // Differentiable forward pass; emits targets on the standardized scale
    // (identical to the raw scale until fit() installs statistics).
    nn::Tensor forward(const nn::Tensor& window_x, nn::Tape* tape) const;

    // Raw-scale multi-horizon forecast for one input window [T, N, M].
    nn::Tensor forecast(const nn::Tensor& window_x) const;

    void save(const std::string& dir) const;  // gclstm.bin + gclstm.arch
    static GcLstm load(const std::string& dir);

private:
    void set_stats_from(const std::vector<data::SeriesWindow>& train);

    GcLstmConfig cfg_;
    std::size_t n_ = 0;  // stations
    std::size_t m_ = 0;  // features per station row
    nn::Tensor propagation_;  // [N, N]
    std::vector<std::string> station_ids_;
    nn::ParamSet params_;
    std::vector<double> st_mean_, st_std_;
};

// RMSE per horizon step over a window set, for a trained model.
std::vector<double> rmse_per_horizon(const GcLstm& model,
                                     const std::vector<data::SeriesWindow>& windows);

// Repeat-last-observation baseline over the same windows.
std::vector<double> persistence_rmse_per_horizon(const std::vector<data::SeriesWindow>& windows);

}  // namespace aq::graph
