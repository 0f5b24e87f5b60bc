#include "aq/graph/gclstm.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "aq/data/metrics.hpp"
#include "aq/errors.hpp"
#include "aq/nn/ops.hpp"
#include "aq/util/digest.hpp"

namespace aq::graph {

namespace fs = std::filesystem;

void GcLstmConfig::validate() const {
    if (window < 1) throw ConfigError("window must be >= 1");
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (gc_out < 1) throw ConfigError("gc_out must be >= 1");
    if (hidden < 1) throw ConfigError("hidden must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
}

nn::Tensor gc_forward(const nn::Tensor& propagation, const nn::Tensor& signal,
                      const nn::Tensor& weights, nn::Tape* tape, bool rectify) {
    nn::Tensor mixed = nn::matmul(propagation, signal, tape);
    nn::Tensor projected = nn::matmul(mixed, weights, tape);
    return rectify ? nn::relu(projected, tape) : projected;
}

namespace {

nn::Tensor uniform_init(nn::Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    nn::Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

}  // namespace

GcLstm::GcLstm(const StationGraph& graph, std::size_t feature_count, GcLstmConfig cfg)
    : cfg_(cfg), n_(graph.size()), m_(feature_count) {
    cfg_.validate();
    if (n_ == 0) throw ConfigError("GcLstm: empty station graph");
    if (m_ == 0) throw ConfigError("GcLstm: need at least one feature per station");
    if (graph.propagation.size() != n_ * n_) {
        throw ShapeError("GcLstm: propagation matrix is not N x N");
    }
    propagation_ = nn::Tensor({n_, n_}, graph.propagation);
    for (const auto& s : graph.stations) station_ids_.push_back(s.id);

    std::mt19937_64 rng(cfg_.seed);
    const std::size_t hidden = static_cast<std::size_t>(cfg_.hidden);
    const std::size_t gc_out = static_cast<std::size_t>(cfg_.gc_out);
    const std::size_t lstm_in = m_ + (cfg_.use_graph ? gc_out : 0);
    if (cfg_.use_graph) {
        params_.add("gc.w", uniform_init({m_, gc_out}, m_, rng));
    }
    nn::LstmWeights lstm = nn::LstmWeights::init(lstm_in, hidden, rng);
    lstm.register_params(params_, "lstm");
    params_.add("fc.w",
                uniform_init({hidden, static_cast<std::size_t>(cfg_.horizon)}, hidden, rng));
    params_.add("fc.b", nn::Tensor({static_cast<std::size_t>(cfg_.horizon)}));

    st_mean_.assign(n_, 0.0);
    st_std_.assign(n_, 1.0);
}

void GcLstm::set_stats_from(const std::vector<data::SeriesWindow>& train) {
    std::vector<double> sum(n_, 0.0), sum_sq(n_, 0.0);
    std::size_t count = 0;
    for (const auto& w : train) {
        const auto& yv = w.y.data();
        const std::size_t horizons = w.y.extent(0);
        for (std::size_t h = 0; h < horizons; ++h) {
            for (std::size_t s = 0; s < n_; ++s) {
                sum[s] += yv[h * n_ + s];
                sum_sq[s] += yv[h * n_ + s] * yv[h * n_ + s];
            }
        }
        count += horizons;
    }
    if (count == 0) throw ConfigError("GcLstm: no training targets");
    for (std::size_t s = 0; s < n_; ++s) {
        st_mean_[s] = sum[s] / static_cast<double>(count);
        const double var = sum_sq[s] / static_cast<double>(count) - st_mean_[s] * st_mean_[s];
        st_std_[s] = std::sqrt(std::max(var, 1e-12));
    }
}

nn::Tensor GcLstm::forward(const nn::Tensor& window_x, nn::Tape* tape) const {
    if (window_x.rank() != 3 || window_x.extent(0) != static_cast<std::size_t>(cfg_.window) ||
        window_x.extent(1) != n_ || window_x.extent(2) != m_) {
        throw ShapeError("GcLstm: expected window (" + std::to_string(cfg_.window) + "," +
                         std::to_string(n_) + "," + std::to_string(m_) + "), got " +
                         nn::shape_str(window_x.shape()));
    }
    const std::size_t hidden = static_cast<std::size_t>(cfg_.hidden);
    const nn::LstmWeights lstm = nn::LstmWeights::from_params(params_, "lstm");

    nn::Tensor h({n_, hidden});
    nn::Tensor c({n_, hidden});
    const auto& xv = window_x.data();
    for (int t = 0; t < cfg_.window; ++t) {
        nn::Tensor xt({n_, m_});
        auto& xtv = xt.data();
        for (std::size_t s = 0; s < n_; ++s) {
            for (std::size_t f = 0; f < m_; ++f) {
                double v = xv[(static_cast<std::size_t>(t) * n_ + s) * m_ + f];
                if (f == 0) v = (v - st_mean_[s]) / st_std_[s];  // AQI column
                xtv[s * m_ + f] = v;
            }
        }
        nn::Tensor lstm_in = xt;
        if (cfg_.use_graph) {
            nn::Tensor gc = gc_forward(propagation_, xt, params_.get("gc.w"), tape);
            lstm_in = nn::concat_cols(xt, gc, tape);
        }
        auto [h_next, c_next] = nn::lstm_cell(lstm_in, h, c, lstm, tape);
        h = h_next;
        c = c_next;
    }
    nn::Tensor out = nn::matmul(h, params_.get("fc.w"), tape);           // [N, T']
    out = nn::add_row_bias(out, params_.get("fc.b"), tape);
    return nn::transpose(out, tape);                                     // [T', N]
}

std::vector<double> GcLstm::fit(const std::vector<data::SeriesWindow>& train) {
    if (train.empty()) throw ConfigError("GcLstm::fit: no training windows");
    set_stats_from(train);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg_.seed);

    std::vector<double> losses;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double acc = 0.0;
        for (std::size_t idx : order) {
            const auto& w = train[idx];
            nn::Tensor target(w.y.shape());
            const auto& yv = w.y.data();
            auto& tv = target.data();
            for (std::size_t h = 0; h < w.y.extent(0); ++h) {
                for (std::size_t s = 0; s < n_; ++s) {
                    tv[h * n_ + s] = (yv[h * n_ + s] - st_mean_[s]) / st_std_[s];
                }
            }
            nn::Tape tape;
            nn::Tensor pred = forward(w.x, &tape);
            nn::Tensor loss = nn::mse_loss(pred, target, &tape);
            const double v = loss.value();
            if (!std::isfinite(v)) throw ValueError("GcLstm::fit: non-finite loss");
            acc += v;
            params_.zero_grads();
            nn::backward(loss);
            nn::sgd_step(params_, cfg_.lr);
        }
        losses.push_back(acc / static_cast<double>(train.size()));
    }
    return losses;
}

nn::Tensor GcLstm::forecast(const nn::Tensor& window_x) const {
    nn::Tensor out = forward(window_x, nullptr);
    auto& ov = out.data();
    for (std::size_t h = 0; h < out.extent(0); ++h) {
        for (std::size_t s = 0; s < n_; ++s) {
            ov[h * n_ + s] = ov[h * n_ + s] * st_std_[s] + st_mean_[s];
        }
    }
    if (!out.all_finite()) throw ValueError("forecast produced non-finite values");
    return out;
}

void GcLstm::save(const std::string& dir) const {
    fs::create_directories(dir);
    nn::ParamSet blob = params_.clone();
    blob.add("norm.mean", nn::Tensor({n_}, st_mean_));
    blob.add("norm.std", nn::Tensor({n_}, st_std_));
    blob.add("graph.p", propagation_.clone());
    blob.save_file((fs::path(dir) / "gclstm.bin").string());

    std::ofstream arch(fs::path(dir) / "gclstm.arch");
    if (!arch) throw IoError("cannot write descriptor in " + dir);
    arch << "gclstm v1\n";
    arch << "window " << cfg_.window << "\n";
    arch << "horizon " << cfg_.horizon << "\n";
    arch << "gc_out " << cfg_.gc_out << "\n";
    arch << "hidden " << cfg_.hidden << "\n";
    arch << "lr " << cfg_.lr << "\n";
    arch << "epochs " << cfg_.epochs << "\n";
    arch << "seed " << cfg_.seed << "\n";
    arch << "use_graph " << (cfg_.use_graph ? 1 : 0) << "\n";
    arch << "stations " << n_ << "\n";
    arch << "features " << m_ << "\n";
    for (const auto& id : station_ids_) arch << "station " << id << "\n";
}

GcLstm GcLstm::load(const std::string& dir) {
    std::ifstream arch(fs::path(dir) / "gclstm.arch");
    if (!arch) throw IoError("cannot open descriptor in " + dir);
    GcLstmConfig cfg;
    std::size_t n = 0, m = 0;
    std::vector<std::string> ids;
    std::string key;
    std::string header;
    std::getline(arch, header);
    if (header != "gclstm v1") throw IoError("unrecognized descriptor header '" + header + "'");
    while (arch >> key) {
        if (key == "window") arch >> cfg.window;
        else if (key == "horizon") arch >> cfg.horizon;
        else if (key == "gc_out") arch >> cfg.gc_out;
        else if (key == "hidden") arch >> cfg.hidden;
        else if (key == "lr") arch >> cfg.lr;
        else if (key == "epochs") arch >> cfg.epochs;
        else if (key == "seed") arch >> cfg.seed;
        else if (key == "use_graph") { int b = 1; arch >> b; cfg.use_graph = b != 0; }
        else if (key == "stations") arch >> n;
        else if (key == "features") arch >> m;
        else if (key == "station") { std::string id; arch >> id; ids.push_back(id); }
        else throw IoError("unknown descriptor key '" + key + "'");
        if (!arch && !arch.eof()) throw IoError("malformed gclstm descriptor");
    }
    if (ids.size() != n) throw IoError("descriptor station list does not match count");

    nn::ParamSet blob = nn::ParamSet::load_file((fs::path(dir) / "gclstm.bin").string());

    StationGraph g;
    g.stations.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.stations[i].id = ids[i];
    g.adjacency.assign(n * n, 0.0);
    g.propagation = blob.get("graph.p").data();

    GcLstm model(g, m, cfg);
    model.st_mean_ = blob.get("norm.mean").data();
    model.st_std_ = blob.get("norm.std").data();
    nn::ParamSet trainable;
    for (const auto& [name, t] : blob) {
        if (name != "norm.mean" && name != "norm.std" && name != "graph.p") {
            trainable.add(name, t);
        }
    }
    std::string mismatch;
    if (!model.params_.aligned_with(trainable, &mismatch)) {
        throw IoError("saved parameters do not match descriptor: " + mismatch);
    }
    model.params_ = std::move(trainable);
    return model;
}

std::vector<double> rmse_per_horizon(const GcLstm& model,
                                     const std::vector<data::SeriesWindow>& windows) {
    if (windows.empty()) throw ConfigError("rmse_per_horizon: no windows");
    const std::size_t horizons = windows.front().y.extent(0);
    std::vector<std::vector<double>> truth(horizons), pred(horizons);
    for (const auto& w : windows) {
        nn::Tensor out = model.forecast(w.x);
        const std::size_t n = w.y.extent(1);
        for (std::size_t h = 0; h < horizons; ++h) {
            for (std::size_t s = 0; s < n; ++s) {
                truth[h].push_back(w.y.data()[h * n + s]);
                pred[h].push_back(out.data()[h * n + s]);
            }
        }
    }
    std::vector<double> out;
    for (std::size_t h = 0; h < horizons; ++h) out.push_back(data::rmse(truth[h], pred[h]));
    return out;
}

std::vector<double> persistence_rmse_per_horizon(const std::vector<data::SeriesWindow>& windows) {
    if (windows.empty()) throw ConfigError("persistence_rmse_per_horizon: no windows");
    const std::size_t horizons = windows.front().y.extent(0);
    std::vector<std::vector<double>> truth(horizons), pred(horizons);
    for (const auto& w : windows) {
        const std::size_t t = w.x.extent(0), n = w.x.extent(1), m = w.x.extent(2);
        for (std::size_t h = 0; h < horizons; ++h) {
            for (std::size_t s = 0; s < n; ++s) {
                truth[h].push_back(w.y.data()[h * n + s]);
                pred[h].push_back(w.x.data()[((t - 1) * n + s) * m]);  // last observed AQI
            }
        }
    }
    std::vector<double> out;
    for (std::size_t h = 0; h < horizons; ++h) out.push_back(data::rmse(truth[h], pred[h]));
    return out;
}

}  // namespace aq::graph
