#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <set>

#include "aq/errors.hpp"
#include "aq/fed/federation.hpp"
#include "aq/util/digest.hpp"
#include "oracles.hpp"

using namespace aq;
using dmnet::DenseMobileNet;
using dmnet::DenseMobileNetConfig;
using fed::ClientState;
using fed::ClientUpdate;
using fed::RoundConfig;

namespace {

DenseMobileNetConfig small_cfg() {
    DenseMobileNetConfig cfg;
    cfg.input_size = 8;
    cfg.input_channels = 6;
    cfg.blocks = {{1, 4}};
    cfg.kernel = 3;
    cfg.classes = 3;
    cfg.seed = 7;
    return cfg;
}

std::vector<dmnet::TrainSample> random_samples(const DenseMobileNetConfig& cfg, std::size_t count,
                                               std::mt19937_64& rng) {
    std::vector<dmnet::TrainSample> out;
    std::uniform_int_distribution<std::size_t> lab(0, static_cast<std::size_t>(cfg.classes) - 1);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back({oracles::random_tensor({cfg.input_channels, cfg.input_size, cfg.input_size},
                                              rng, 0.0, 1.0),
                       lab(rng)});
    }
    return out;
}

std::vector<ClientState> make_clients(const DenseMobileNetConfig& cfg, std::size_t k,
                                      std::size_t samples_each, std::mt19937_64& rng) {
    std::vector<ClientState> clients;
    for (std::size_t i = 0; i < k; ++i) {
        ClientState c;
        c.id = "uav" + std::to_string(i);
        c.dataset = random_samples(cfg, samples_each, rng);
        c.seed = 100 + i;
        c.swarm = i % 2 == 0 ? "A" : "B";
        clients.push_back(std::move(c));
    }
    return clients;
}

// true iff `needle` occurs as a contiguous byte run inside `hay`
bool contains_bytes(const std::vector<std::uint8_t>& hay, const double* needle, std::size_t n) {
    const auto* nb = reinterpret_cast<const std::uint8_t*>(needle);
    const std::size_t len = n * sizeof(double);
    if (len == 0 || len > hay.size()) return false;
    auto it = std::search(hay.begin(), hay.end(),
                          std::boyer_moore_horspool_searcher(nb, nb + len));
    return it != hay.end();
}

}  // namespace

TEST_SUITE_BEGIN("fed-sim");

TEST_CASE("client selection") {
    auto all = fed::select_clients(7, 1.0, 42);
    CHECK(all.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) CHECK(all[i] == i);

    auto a = fed::select_clients(10, 0.3, 5);
    auto b = fed::select_clients(10, 0.3, 5);
    CHECK(a == b);
    CHECK(a.size() == 3);
    std::set<std::size_t> uniq(a.begin(), a.end());
    CHECK(uniq.size() == a.size());

    CHECK(fed::select_clients(5, 0.01, 1).size() == 1);
    CHECK_THROWS_AS(fed::select_clients(5, 0.0, 1), ConfigError);
}

TEST_CASE("pretraining guards and delegation") {
    auto cfg = small_cfg();
    RoundConfig rc;
    rc.seed = 3;
    std::mt19937_64 rng(1);
    auto clients = make_clients(cfg, 2, 4, rng);

    // empty public set falls back to the seeded initialization
    auto init = fed::pretrain_global({}, 1, cfg, rc, clients);
    DenseMobileNet fresh(cfg);
    CHECK(init.l2_distance(fresh.params()) == 0.0);

    // one epoch over a public set equals one centralized epoch
    auto public_set = random_samples(cfg, 6, rng);
    auto trained = fed::pretrain_global(public_set, 1, cfg, rc, clients);
    DenseMobileNet reference(cfg);
    dmnet::train_epoch(reference, public_set, rc.batch, rc.lr, util::mix_seed(rc.seed, 7700));
    CHECK(trained.l2_distance(reference.params()) == 0.0);

    // overlap with a client's data is rejected, naming the client
    auto leaky = clients;
    auto poisoned = public_set;
    poisoned.push_back(leaky[1].dataset[2]);
    CHECK_THROWS_WITH_AS(fed::pretrain_global(poisoned, 1, cfg, rc, leaky),
                         doctest::Contains("uav1"), ValueError);
}

TEST_CASE("client local training") {
    auto cfg = small_cfg();
    RoundConfig rc;
    std::mt19937_64 rng(2);
    auto clients = make_clients(cfg, 1, 5, rng);
    DenseMobileNet global(cfg);

    // zero local epochs: parameters pass through unchanged, loss is reported
    RoundConfig rc0 = rc;
    rc0.local_epochs = 0;
    auto idle = fed::client_local_train(clients[0], global.params(), cfg, rc0, 1);
    CHECK(idle.params.l2_distance(global.params()) == 0.0);
    CHECK(idle.mean_loss > 0.0);
    CHECK(idle.sample_count == 5);

    auto update = fed::client_local_train(clients[0], global.params(), cfg, rc, 1);
    CHECK(update.sample_count == clients[0].dataset.size());
    CHECK(update.params.l2_distance(global.params()) > 0.0);
    // the shared global model is untouched by the client's step
    DenseMobileNet fresh(cfg);
    CHECK(global.params().l2_distance(fresh.params()) == 0.0);
}

TEST_CASE("updates serialize without leaking raw sample bytes") {
    auto cfg = small_cfg();
    RoundConfig rc;
    std::mt19937_64 rng(3);
    auto clients = make_clients(cfg, 1, 4, rng);
    DenseMobileNet global(cfg);
    auto update = fed::client_local_train(clients[0], global.params(), cfg, rc, 2);

    auto bytes = fed::serialize_update(update);
    auto parsed = fed::deserialize_update(bytes);
    CHECK(parsed.client_id == update.client_id);
    CHECK(parsed.sample_count == update.sample_count);
    CHECK(parsed.round == 2);
    CHECK(parsed.params.l2_distance(update.params) == 0.0);

    // schema check: only named tensors, no private image buffers
    for (const auto& s : clients[0].dataset) {
        CHECK_FALSE(contains_bytes(bytes, s.input.data().data(), s.input.numel()));
    }
}

TEST_CASE("aggregation weighting, convexity, and permutation invariance") {
    auto cfg = small_cfg();
    DenseMobileNet base(cfg);

    auto make_update = [&](const std::string& id, std::size_t count, double fill) {
        ClientUpdate u;
        u.client_id = id;
        u.sample_count = count;
        u.params = base.params().clone();
        for (auto& [name, t] : u.params) {
            for (auto& v : t.data()) v = fill;
        }
        return u;
    };

    // single client: identity
    auto single = fed::aggregate({make_update("a", 3, 0.7)});
    CHECK(single.entry(0).second.data()[0] == doctest::Approx(0.7));

    // equal weights: plain mean
    auto mean = fed::aggregate({make_update("a", 2, 0.0), make_update("b", 2, 4.0)});
    CHECK(mean.entry(0).second.data()[0] == doctest::Approx(2.0));

    // weighted: (1*0 + 3*4)/4
    auto weighted = fed::aggregate({make_update("a", 1, 0.0), make_update("b", 3, 4.0)});
    CHECK(weighted.entry(0).second.data()[0] == doctest::Approx(3.0));

    // permutation: bit-identical
    std::mt19937_64 rng(5);
    std::vector<ClientUpdate> ups;
    for (int i = 0; i < 4; ++i) {
        ClientUpdate u;
        u.client_id = "c" + std::to_string(i);
        u.sample_count = static_cast<std::size_t>(1 + i);
        u.params = base.params().clone();
        for (auto& [name, t] : u.params) {
            for (auto& v : t.data()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
        }
        ups.push_back(std::move(u));
    }
    auto agg1 = fed::aggregate(ups);
    std::vector<ClientUpdate> shuffled{ups[2], ups[0], ups[3], ups[1]};
    auto agg2 = fed::aggregate(shuffled);
    for (std::size_t e = 0; e < agg1.size(); ++e) {
        const auto& a = agg1.entry(e).second.data();
        const auto& b = agg2.entry(e).second.data();
        CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    }

    // convexity: every element stays inside the clients' envelope
    for (std::size_t e = 0; e < agg1.size(); ++e) {
        const auto& a = agg1.entry(e).second.data();
        for (std::size_t i = 0; i < a.size(); ++i) {
            double lo = 1e300, hi = -1e300;
            for (const auto& u : ups) {
                lo = std::min(lo, u.params.entry(e).second.data()[i]);
                hi = std::max(hi, u.params.entry(e).second.data()[i]);
            }
            CHECK(a[i] >= lo - 1e-12);
            CHECK(a[i] <= hi + 1e-12);
        }
    }

    // misalignment error names the first offending tensor
    auto broken = make_update("z", 1, 0.0);
    nn::ParamSet reordered;
    for (std::size_t e = broken.params.size(); e-- > 0;) {
        reordered.add(broken.params.entry(e).first, broken.params.entry(e).second);
    }
    broken.params = std::move(reordered);
    CHECK_THROWS_WITH_AS(fed::aggregate({make_update("a", 1, 0.0), broken}),
                         doctest::Contains("head"), ShapeError);
}

TEST_CASE("one full-batch round equals the centralized step on the pooled data") {
    auto cfg = small_cfg();
    std::mt19937_64 rng(11);
    auto clients = make_clients(cfg, 4, 3, rng);
    // unequal H_k so the weighting matters
    clients[2].dataset.push_back({oracles::random_tensor({6, 8, 8}, rng, 0.0, 1.0), 1});

    RoundConfig rc;
    rc.rounds = 1;
    rc.local_epochs = 1;
    rc.batch = 64;  // full batch everywhere
    rc.lr = 0.1;
    rc.convergence_tol = 0.0;
    rc.seed = 13;

    DenseMobileNet init(cfg);
    auto result = fed::run_federation(clients, cfg, rc, init.params().clone());

    // centralized: one full-batch step over the pooled dataset
    std::vector<dmnet::TrainSample> pooled;
    for (const auto& c : clients) {
        pooled.insert(pooled.end(), c.dataset.begin(), c.dataset.end());
    }
    DenseMobileNet central = DenseMobileNet::from_params(cfg, init.params().clone());
    dmnet::train_epoch(central, pooled, pooled.size(), rc.lr, 99);

    double worst = 0.0;
    for (std::size_t e = 0; e < result.model.size(); ++e) {
        const auto& a = result.model.entry(e).second.data();
        const auto& b = central.params().entry(e).second.data();
        for (std::size_t i = 0; i < a.size(); ++i) {
            worst = std::max(worst, std::abs(a[i] - b[i]));
        }
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("federation loop: log length, convergence stop, dropout") {
    auto cfg = small_cfg();
    std::mt19937_64 rng(21);
    auto clients = make_clients(cfg, 3, 4, rng);

    RoundConfig rc;
    rc.rounds = 3;
    rc.lr = 0.05;
    rc.convergence_tol = 0.0;  // never converges
    rc.seed = 17;
    auto result = fed::run_federation(clients, cfg, rc);
    CHECK(result.log.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(result.log[i].round == static_cast<int>(i) + 1);
        CHECK(result.log[i].responders.size() == 3);
    }

    RoundConfig huge = rc;
    huge.convergence_tol = 1e9;
    auto early = fed::run_federation(clients, cfg, huge);
    CHECK(early.log.size() == 1);

    // a failing client is skipped and logged; the round proceeds
    struct DropOne : fed::Transport {
        bool deliver(const std::string& id, int round) override {
            return !(id == "uav1" && round == 1);
        }
    } drop;
    auto partial = fed::run_federation(clients, cfg, rc, std::nullopt, nullptr, &drop);
    CHECK(partial.log[0].participants.size() == 3);
    CHECK(partial.log[0].responders.size() == 2);
    CHECK(std::find(partial.log[0].responders.begin(), partial.log[0].responders.end(), "uav1") ==
          partial.log[0].responders.end());
    CHECK(partial.log[1].responders.size() == 3);
}

TEST_CASE("federation log is deterministic in the seeds") {
    auto cfg = small_cfg();
    std::mt19937_64 rng(31);
    auto clients = make_clients(cfg, 3, 4, rng);
    RoundConfig rc;
    rc.rounds = 2;
    rc.convergence_tol = 0.0;
    rc.seed = 23;

    auto run = [&]() {
        auto r = fed::run_federation(clients, cfg, rc);
        std::vector<double> flat;
        for (const auto& e : r.log) {
            flat.push_back(e.train_loss);
            flat.push_back(e.delta_norm);
        }
        for (const auto& [name, t] : r.model) {
            flat.insert(flat.end(), t.data().begin(), t.data().end());
        }
        return flat;
    };
    auto a = run(), b = run();
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("global evaluation accuracy and confusion") {
    auto cfg = small_cfg();
    DenseMobileNet model(cfg);
    auto table = dmnet::AqiScaleTable::for_classes(3);

    // label everything with the model's own argmax: accuracy 1
    std::mt19937_64 rng(41);
    auto samples = random_samples(cfg, 10, rng);
    for (auto& s : samples) {
        auto logits = model.forward(s.input, nullptr);
        s.label = dmnet::predict_scale(logits.data(), table).index;
    }
    auto perfect = fed::evaluate_global(model, samples, table);
    CHECK(perfect.accuracy == doctest::Approx(1.0));

    // rotate every label: accuracy 0, confusion off-diagonal
    auto wrong = samples;
    for (auto& s : wrong) s.label = (s.label + 1) % 3;
    auto zero = fed::evaluate_global(model, wrong, table);
    CHECK(zero.accuracy == doctest::Approx(0.0));

    // hand tally
    std::size_t diag = 0;
    for (std::size_t c = 0; c < 3; ++c) diag += perfect.confusion[c][c];
    CHECK(diag == samples.size());
}

TEST_SUITE_END();
