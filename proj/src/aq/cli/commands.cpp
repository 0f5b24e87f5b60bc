#include "aq/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "aq/cli/run_config.hpp"
#include "aq/data/dataset.hpp"
#include "aq/data/metrics.hpp"
#include "aq/data/observations.hpp"
#include "aq/data/synth.hpp"
#include "aq/dmnet/model.hpp"
#include "aq/errors.hpp"
#include "aq/graph/gclstm.hpp"
#include "aq/graph/stations.hpp"
#include "aq/haze/features.hpp"
#include "aq/haze/image.hpp"
#include "aq/util/digest.hpp"

namespace aq::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError(path.string() + " is not valid JSON: " + e.what());
    }
    return doc;
}

void write_json_file(const json& doc, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("failed writing " + path.string());
}

// merge this run's sections into an existing report.json, if any
json merged_report_body(const fs::path& dir, const json& fresh) {
    const fs::path path = dir / "report.json";
    json body = fresh;
    if (fs::exists(path)) {
        json old = load_json_file(path);
        if (old.contains("metrics") && old.at("metrics").is_object()) {
            for (auto it = old.at("metrics").begin(); it != old.at("metrics").end(); ++it) {
                if (!body.at("metrics").contains(it.key())) {
                    body["metrics"][it.key()] = it.value();
                }
            }
        }
    }
    return body;
}

json round_to_json(const fed::RoundEntry& e) {
    json j{{"round", e.round},
           {"participants", e.participants},
           {"responders", e.responders},
           {"train_loss", e.train_loss},
           {"delta_norm", e.delta_norm}};
    if (e.accuracy) j["accuracy"] = *e.accuracy;
    return j;
}

struct ModelBundle {
    dmnet::DenseMobileNet model;
    data::ChannelStats stats;
};

void save_channel_stats(const data::ChannelStats& stats, const fs::path& dir) {
    nn::ParamSet blob;
    blob.add("channel_mean",
             nn::Tensor({haze::kFeatureChannels},
                        std::vector<double>(stats.mean.begin(), stats.mean.end())));
    blob.save_file((dir / "norm.bin").string());
}

data::ChannelStats load_channel_stats(const fs::path& dir) {
    nn::ParamSet blob = nn::ParamSet::load_file((dir / "norm.bin").string());
    const auto& v = blob.get("channel_mean").data();
    data::ChannelStats stats;
    std::copy(v.begin(), v.end(), stats.mean.begin());
    return stats;
}

ModelBundle load_model_bundle(const fs::path& dir) {
    return ModelBundle{dmnet::DenseMobileNet::load(dir.string()), load_channel_stats(dir)};
}

std::vector<dmnet::TrainSample> to_samples(const data::StackDataset& ds,
                                           const data::ChannelStats& stats) {
    std::vector<dmnet::TrainSample> out;
    out.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        out.push_back({data::to_model_input(s.stack, stats),
                       static_cast<std::size_t>(s.label)});
    }
    return out;
}

// --- subcommand bodies ---------------------------------------------------

int cmd_synth_data(const RunConfig& cfg, const std::string& out_dir, bool save_images) {
    data::HazeSynthesisSpec spec;
    spec.base_count = cfg.synth_samples;
    spec.image_size = cfg.synth_image_size;
    spec.extinctions = cfg.synth_extinctions;
    spec.airlight = cfg.synth_airlight;
    spec.depth_kind = cfg.depth_kind;
    spec.seed = cfg.seed;

    haze::FeatureConfig fcfg = cfg.feature;
    auto dataset = data::generate_haze_dataset(spec, fcfg, cfg.synth_classes);
    fs::create_directories(out_dir);
    data::save_dataset(dataset, out_dir);
    write_json_file(cfg.snapshot(), fs::path(out_dir) / "config.json");

    if (save_images) {
        fs::create_directories(fs::path(out_dir) / "images");
        for (std::size_t bi = 0; bi < spec.base_count; ++bi) {
            const auto base = data::make_base_image(spec.image_size, spec.image_size,
                                                    util::mix_seed(spec.seed, bi));
            const auto depth = data::make_depth_field(spec.depth_kind, base.height, base.width,
                                                      util::mix_seed(spec.seed, 1000003 + bi));
            const double ext = spec.extinctions[bi % spec.extinctions.size()];
            const auto hazy = data::synthesize_haze_image(base, ext, spec.airlight, depth);
            char name[32];
            std::snprintf(name, sizeof(name), "sample_%06zu.ppm", bi);
            haze::save_ppm(hazy, (fs::path(out_dir) / "images" / name).string());
        }
    }
    std::cout << "wrote " << dataset.samples.size() << " samples (" << dataset.classes
              << " classes, " << dataset.side << "x" << dataset.side << "x"
              << haze::kFeatureChannels << ") to " << out_dir << "\n";
    return 0;
}

int cmd_extract_features(const RunConfig& cfg, const std::string& input,
                         const std::string& output, const std::string& csv_path) {
    const haze::RgbImage img = haze::load_image(input);
    const haze::FeatureStack stack = haze::build_feature_stack(img, cfg.feature);

    nn::ParamSet blob;
    blob.add("features", stack.channels);
    blob.add("diagnostics",
             nn::Tensor({4}, {stack.rms_global, stack.entropy_global, stack.smoothness_avg,
                              static_cast<double>(stack.otsu_threshold)}));
    blob.save_file(output);

    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw IoError("cannot write " + csv_path);
        csv << "y,x";
        for (const char* name : haze::kFeatureChannelNames) csv << "," << name;
        csv << "\n";
        const std::size_t s = stack.side();
        const auto& v = stack.channels.data();
        for (std::size_t y = 0; y < s; ++y) {
            for (std::size_t x = 0; x < s; ++x) {
                csv << y << "," << x;
                for (std::size_t c = 0; c < haze::kFeatureChannels; ++c) {
                    csv << "," << fmt_double(v[(y * s + x) * haze::kFeatureChannels + c]);
                }
                csv << "\n";
            }
        }
    }
    std::cout << "features " << stack.side() << "x" << stack.side() << "x"
              << haze::kFeatureChannels << " -> " << output << "\n";
    return 0;
}

int cmd_train_federated(RunConfig cfg, const std::string& data_dir, const std::string& out_dir) {
    const auto t_start = std::chrono::steady_clock::now();
    auto dataset = data::load_dataset(data_dir);
    if (dataset.side != cfg.model.input_size) {
        warn("dataset stacks are " + std::to_string(dataset.side) + "px; adjusting model input");
        cfg.model.input_size = dataset.side;
    }
    cfg.model.classes = dataset.classes;
    cfg.model.seed = util::mix_seed(cfg.seed, 0xD0);

    data::SplitSpec split = cfg.split;
    split.seed = util::mix_seed(cfg.seed, 0x51);
    auto [train_set, test_set] = data::split_8_2(dataset, split);

    const auto stats = data::ChannelStats::fit(train_set);
    auto train_samples = to_samples(train_set, stats);
    auto test_samples = to_samples(test_set, stats);

    // optional public pretraining slice, removed from the client pool
    std::vector<dmnet::TrainSample> public_set;
    if (cfg.public_fraction > 0.0) {
        const std::size_t take = static_cast<std::size_t>(
            std::llround(cfg.public_fraction * static_cast<double>(train_samples.size())));
        public_set.assign(train_samples.begin(),
                          train_samples.begin() + static_cast<std::ptrdiff_t>(take));
        train_samples.erase(train_samples.begin(),
                            train_samples.begin() + static_cast<std::ptrdiff_t>(take));
    }

    // stratified round-robin partition over the clients
    if (cfg.clients < 1) throw ConfigError("need at least one client");
    std::vector<fed::ClientState> clients(static_cast<std::size_t>(cfg.clients));
    for (std::size_t k = 0; k < clients.size(); ++k) {
        clients[k].id = "uav" + std::to_string(k);
        clients[k].seed = util::mix_seed(cfg.seed, 0xC0 + k);
        clients[k].swarm = k % 2 == 0 ? "A" : "B";
    }
    {
        std::vector<std::size_t> counter(static_cast<std::size_t>(dataset.classes), 0);
        for (const auto& s : train_samples) {
            auto& c = counter[s.label];
            clients[c % clients.size()].dataset.push_back(s);
            ++c;
        }
    }
    for (const auto& c : clients) {
        if (c.dataset.empty()) {
            throw ConfigError("client " + c.id + " received no data; reduce the client count");
        }
    }

    fed::RoundConfig round_cfg = cfg.federation;
    round_cfg.seed = util::mix_seed(cfg.seed, 0xFE);

    auto initial =
        fed::pretrain_global(public_set, cfg.pretrain_epochs, cfg.model, round_cfg, clients);
    auto result = fed::run_federation(clients, cfg.model, round_cfg, std::move(initial),
                                      &test_samples);

    dmnet::DenseMobileNet model =
        dmnet::DenseMobileNet::from_params(cfg.model, result.model.clone());
    const auto table = dmnet::AqiScaleTable::for_classes(static_cast<std::size_t>(dataset.classes));
    const auto eval = fed::evaluate_global(model, test_samples, table);
    const auto summary = model.summary();

    fs::create_directories(out_dir);
    model.save(out_dir);
    save_channel_stats(stats, out_dir);
    table.save_csv((fs::path(out_dir) / "scale_table.csv").string());

    json rounds = json::array();
    for (const auto& e : result.log) rounds.push_back(round_to_json(e));
    json metrics{{"federated",
                  {{"test_accuracy", eval.accuracy},
                   {"confusion", eval.confusion},
                   {"rounds", rounds},
                   {"train_samples", train_samples.size()},
                   {"test_samples", test_samples.size()},
                   {"clients", cfg.clients},
                   {"model",
                    {{"params", summary.params},
                     {"macs", summary.macs},
                     {"std_conv_params", summary.std_params},
                     {"std_conv_macs", summary.std_macs},
                     {"dsc_ratio", summary.dsc_ratio}}}}}};

    Report report;
    report.body = json{{"run_id", cfg.run_id()},
                       {"seed", cfg.seed},
                       {"config", cfg.snapshot()},
                       {"metrics", metrics}};
    report.body = merged_report_body(out_dir, report.body);
    report.rounds = result.log;
    double wall = 0.0;
    for (const auto& e : result.log) wall += e.wall_seconds;
    report.timings = json{{"federated_rounds_s", wall},
                          {"total_s", std::chrono::duration<double>(
                                          std::chrono::steady_clock::now() - t_start)
                                          .count()}};
    write_report(report, out_dir);

    std::cout << "federated training: " << result.log.size() << " rounds, test accuracy "
              << fmt_double(eval.accuracy) << "\n";
    return 0;
}

int cmd_train_gclstm(RunConfig cfg, const std::string& stations_path, const std::string& obs_path,
                     bool synthetic, const std::string& out_dir) {
    const auto t_start = std::chrono::steady_clock::now();

    graph::StationGraph g;
    data::ObservationTable table;
    if (synthetic) {
        auto stations = data::make_station_clusters(
            static_cast<std::size_t>(cfg.diffusion_stations),
            static_cast<std::size_t>(cfg.cluster_size), cfg.ring_center_lat, cfg.ring_center_lon,
            cfg.ring_radius_km, cfg.cluster_spread_km);
        g = graph::StationGraph::build(std::move(stations));
        data::DiffusionSpec dspec;
        dspec.steps = cfg.diffusion_steps;
        dspec.coupling = cfg.diffusion_coupling;
        dspec.noise_sigma = cfg.diffusion_noise;
        dspec.season_period = cfg.diffusion_period;
        dspec.event_rate = cfg.diffusion_event_rate;
        dspec.event_magnitude = cfg.diffusion_event_magnitude;
        dspec.event_duration = cfg.diffusion_event_duration;
        dspec.seed = util::mix_seed(cfg.seed, 0xD1F);
        table = data::generate_diffusion_series(g, dspec);
    } else {
        if (stations_path.empty() || obs_path.empty()) {
            throw ConfigError("train-gclstm needs --stations and --obs, or --synthetic");
        }
        g = graph::StationGraph::build(graph::load_stations_csv(stations_path));
        table = data::load_station_csv(obs_path);
        // align observation order with the station list
        std::vector<data::StationSeries> ordered;
        for (const auto& st : g.stations) {
            auto it = std::find_if(table.stations.begin(), table.stations.end(),
                                   [&](const data::StationSeries& s) {
                                       return s.station_id == st.id;
                                   });
            if (it == table.stations.end()) {
                throw ValueError("no observations for station " + st.id);
            }
            ordered.push_back(std::move(*it));
        }
        table.stations = std::move(ordered);
    }

    auto windows = data::make_windows(table, cfg.gclstm.window, cfg.gclstm.horizon);
    if (windows.empty()) throw ValueError("series too short for the requested window/horizon");
    auto [train, test] = data::split_windows_chronological(windows);
    if (train.empty() || test.empty()) {
        throw ValueError("not enough windows for a train/test split");
    }

    const std::size_t features = windows.front().x.extent(2);
    graph::GcLstmConfig model_cfg = cfg.gclstm;
    model_cfg.seed = util::mix_seed(cfg.seed, 0x6C);
    graph::GcLstm model(g, features, model_cfg);
    auto losses = model.fit(train);

    // baselines on the same split
    graph::GcLstmConfig plain_cfg = model_cfg;
    plain_cfg.use_graph = false;
    graph::GcLstm plain(g, features, plain_cfg);
    plain.fit(train);

    const auto model_rmse = graph::rmse_per_horizon(model, test);
    const auto plain_rmse = graph::rmse_per_horizon(plain, test);
    const auto persistence = graph::persistence_rmse_per_horizon(test);

    fs::create_directories(out_dir);
    model.save(out_dir);
    graph::save_matrix_csv(g.adjacency, g.size(), (fs::path(out_dir) / "adjacency.csv").string());
    graph::save_matrix_csv(g.propagation, g.size(),
                           (fs::path(out_dir) / "propagation.csv").string());

    Report report;
    report.body = json{{"run_id", cfg.run_id()},
                       {"seed", cfg.seed},
                       {"config", cfg.snapshot()},
                       {"metrics",
                        {{"gclstm",
                          {{"rmse_per_horizon", model_rmse},
                           {"lstm_rmse_per_horizon", plain_rmse},
                           {"persistence_rmse_per_horizon", persistence},
                           {"final_train_loss", losses.back()},
                           {"stations", g.size()},
                           {"train_windows", train.size()},
                           {"test_windows", test.size()}}}}}};
    report.body = merged_report_body(out_dir, report.body);
    for (const auto& w : test) {
        nn::Tensor pred = model.forecast(w.x);
        for (std::size_t h = 0; h < pred.extent(0); ++h) {
            for (std::size_t s = 0; s < g.size(); ++s) {
                report.forecasts.push_back({g.stations[s].id, static_cast<int>(h) + 1,
                                            w.y.data()[h * g.size() + s],
                                            pred.data()[h * g.size() + s]});
            }
        }
    }
    report.timings =
        json{{"total_s",
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count()}};
    write_report(report, out_dir);

    std::cout << "gclstm rmse per horizon:";
    for (double r : model_rmse) std::cout << " " << fmt_double(r);
    std::cout << " (persistence:";
    for (double r : persistence) std::cout << " " << fmt_double(r);
    std::cout << ")\n";
    return 0;
}

int cmd_evaluate(const std::string& model_dir, const std::string& data_dir,
                 const std::string& out_path) {
    auto bundle = load_model_bundle(model_dir);
    auto dataset = data::load_dataset(data_dir);
    auto samples = to_samples(dataset, bundle.stats);
    const auto table =
        dmnet::AqiScaleTable::load_csv((fs::path(model_dir) / "scale_table.csv").string());
    const auto eval = fed::evaluate_global(bundle.model, samples, table);

    json doc{{"accuracy", eval.accuracy},
             {"confusion", eval.confusion},
             {"samples", samples.size()}};
    if (!out_path.empty()) {
        write_json_file(doc, out_path);
    }
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir) {
    const fs::path path = fs::path(run_dir) / "report.json";
    json doc = load_json_file(path);
    // round-trip must be lossless before rewriting
    json reparsed = json::parse(doc.dump());
    if (reparsed != doc) throw IoError("report.json does not round-trip");
    write_json_file(doc, path);
    std::cout << "run " << doc.value("run_id", std::string("?")) << ": metrics sections:";
    if (doc.contains("metrics")) {
        for (auto it = doc.at("metrics").begin(); it != doc.at("metrics").end(); ++it) {
            std::cout << " " << it.key();
        }
    }
    std::cout << "\n";
    return 0;
}

}  // namespace

void write_report(const Report& report, const std::string& dir) {
    fs::create_directories(dir);
    write_json_file(report.body, fs::path(dir) / "report.json");

    if (!report.rounds.empty()) {
        std::ofstream csv(fs::path(dir) / "rounds.csv");
        if (!csv) throw IoError("cannot write rounds.csv in " + dir);
        csv << "round,loss,accuracy,delta_norm\n";
        for (const auto& e : report.rounds) {
            csv << e.round << "," << fmt_double(e.train_loss) << ",";
            if (e.accuracy) csv << fmt_double(*e.accuracy);
            csv << "," << fmt_double(e.delta_norm) << "\n";
        }
    }
    if (!report.forecasts.empty()) {
        std::ofstream csv(fs::path(dir) / "forecast.csv");
        if (!csv) throw IoError("cannot write forecast.csv in " + dir);
        csv << "station,horizon,y,y_hat\n";
        for (const auto& r : report.forecasts) {
            csv << r.station << "," << r.horizon << "," << fmt_double(r.observed) << ","
                << fmt_double(r.predicted) << "\n";
        }
    }
    if (!report.timings.is_null()) {
        write_json_file(report.timings, fs::path(dir) / "timings.json");
    }
}

int parse_and_dispatch(const std::vector<std::string>& args) {
    CLI::App app{"aerial-ground air quality sensing toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed_flag;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--seed", seed_flag, "run seed (overrides the config file)");
    };

    // synth-data
    auto* synth = app.add_subcommand("synth-data", "generate the synthetic labelled corpus");
    add_common(synth);
    synth->add_option("--out", out_dir, "output dataset directory")->required();
    std::optional<std::size_t> samples_flag, image_size_flag, classes_flag;
    bool save_images = false;
    synth->add_option("--samples", samples_flag, "number of samples");
    synth->add_option("--image-size", image_size_flag, "base image side");
    synth->add_option("--classes", classes_flag, "class count (0: one per extinction level)");
    synth->add_flag("--save-images", save_images, "also write the hazy PPM images");

    // extract-features
    auto* extract = app.add_subcommand("extract-features", "feature stack for one image");
    add_common(extract);
    std::string image_in, feature_out, feature_csv;
    extract->add_option("--in", image_in, "input image (PNG/PPM/PGM)")->required();
    extract->add_option("--out", feature_out, "output feature blob")->required();
    extract->add_option("--csv", feature_csv, "also dump the stack as CSV");

    // train-federated
    auto* trainf = app.add_subcommand("train-federated", "federated classifier training");
    add_common(trainf);
    std::string data_dir;
    std::optional<int> rounds_flag, clients_flag, local_epochs_flag;
    std::optional<std::size_t> batch_flag;
    std::optional<double> lr_flag, fraction_flag;
    trainf->add_option("--data", data_dir, "dataset directory (from synth-data)")->required();
    trainf->add_option("--out", out_dir, "run output directory")->required();
    trainf->add_option("--rounds", rounds_flag, "federation rounds");
    trainf->add_option("--clients", clients_flag, "simulated client count");
    trainf->add_option("--local-epochs", local_epochs_flag, "local epochs per round");
    trainf->add_option("--batch", batch_flag, "local mini-batch size");
    trainf->add_option("--lr", lr_flag, "learning rate");
    trainf->add_option("--fraction", fraction_flag, "client fraction per round");

    // train-gclstm
    auto* traing = app.add_subcommand("train-gclstm", "ground forecaster training");
    add_common(traing);
    std::string stations_path, obs_path;
    bool synthetic = false;
    std::optional<int> epochs_flag, window_flag, horizon_flag, hidden_flag, steps_flag,
        stations_flag;
    traing->add_option("--stations", stations_path, "station CSV (station_id,lat,lon)");
    traing->add_option("--obs", obs_path, "observation CSV");
    traing->add_flag("--synthetic", synthetic, "use the synthetic diffusion corpus");
    traing->add_option("--out", out_dir, "run output directory")->required();
    traing->add_option("--epochs", epochs_flag, "training epochs");
    traing->add_option("--window", window_flag, "history window T");
    traing->add_option("--horizon", horizon_flag, "forecast horizon T'");
    traing->add_option("--hidden", hidden_flag, "LSTM hidden size");
    traing->add_option("--steps", steps_flag, "synthetic series length");
    traing->add_option("--n-stations", stations_flag, "synthetic station count");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score a trained classifier on a dataset");
    std::string model_dir, eval_out;
    evaluate->add_option("--model", model_dir, "model directory")->required();
    evaluate->add_option("--data", data_dir, "dataset directory")->required();
    evaluate->add_option("--out", eval_out, "write metrics JSON here");

    // report
    auto* report_cmd = app.add_subcommand("report", "validate and re-emit a run report");
    std::string run_dir;
    report_cmd->add_option("--run", run_dir, "run directory containing report.json")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        RunConfig cfg = RunConfig::resolve(
            config_path.empty() ? std::nullopt : std::make_optional(config_path));
        if (seed_flag) cfg.seed = *seed_flag;

        if (synth->parsed()) {
            if (samples_flag) cfg.synth_samples = *samples_flag;
            if (image_size_flag) cfg.synth_image_size = *image_size_flag;
            if (classes_flag) cfg.synth_classes = *classes_flag;
            return cmd_synth_data(cfg, out_dir, save_images);
        }
        if (extract->parsed()) {
            return cmd_extract_features(cfg, image_in, feature_out, feature_csv);
        }
        if (trainf->parsed()) {
            if (rounds_flag) cfg.federation.rounds = *rounds_flag;
            if (clients_flag) cfg.clients = *clients_flag;
            if (local_epochs_flag) cfg.federation.local_epochs = *local_epochs_flag;
            if (batch_flag) cfg.federation.batch = *batch_flag;
            if (lr_flag) cfg.federation.lr = *lr_flag;
            if (fraction_flag) cfg.federation.client_fraction = *fraction_flag;
            return cmd_train_federated(cfg, data_dir, out_dir);
        }
        if (traing->parsed()) {
            if (epochs_flag) cfg.gclstm.epochs = *epochs_flag;
            if (window_flag) cfg.gclstm.window = *window_flag;
            if (horizon_flag) cfg.gclstm.horizon = *horizon_flag;
            if (hidden_flag) cfg.gclstm.hidden = *hidden_flag;
            if (steps_flag) cfg.diffusion_steps = *steps_flag;
            if (stations_flag) cfg.diffusion_stations = *stations_flag;
            return cmd_train_gclstm(cfg, stations_path, obs_path, synthetic, out_dir);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(model_dir, data_dir, eval_out);
        }
        if (report_cmd->parsed()) {
            return cmd_report(run_dir);
        }
        std::cerr << app.help();
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace aq::cli
