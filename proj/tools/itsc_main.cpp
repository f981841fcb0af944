#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "itsc/common.hpp"
#include "itsc/csv_io.hpp"
#include "itsc/dataset.hpp"
#include "itsc/harness.hpp"
#include "itsc/metrics.hpp"
#include "itsc/models.hpp"
#include "itsc/resampling.hpp"

using nlohmann::json;
using namespace itsc;

namespace {

constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------- json utils

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(where + ": unknown key \"" + key + "\"");
    }
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << text;
    if (!out) throw DataError("short write to " + path);
}

json metric_json(const metrics::Metric& m) {
    if (!m) return nullptr;
    return *m;
}

metrics::Metric metric_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

// --------------------------------------------------------------- cli options

struct Overrides {
    std::optional<std::string> model;
    std::optional<std::string> mode;
    std::optional<std::string> sampler;
    std::optional<std::size_t> folds;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> batch_size;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> data;
    std::optional<std::string> out;
};

// ------------------------------------------------------------ config parsing

data::SynthConfig parse_synth(const json& j) {
    check_keys(j, {"n_pos", "n_neg", "channels", "length", "noise_std", "seed"}, "synth");
    data::SynthConfig synth;
    if (j.contains("n_pos")) synth.n_pos = j.at("n_pos").get<std::size_t>();
    if (j.contains("n_neg")) synth.n_neg = j.at("n_neg").get<std::size_t>();
    if (j.contains("channels")) synth.channels = j.at("channels").get<std::size_t>();
    if (j.contains("length")) synth.length = j.at("length").get<std::size_t>();
    if (j.contains("noise_std")) synth.noise_std = j.at("noise_std").get<double>();
    if (j.contains("seed")) synth.seed = j.at("seed").get<std::uint64_t>();
    return synth;
}

resample::SamplerConfig parse_sampler(const json& j) {
    check_keys(j, {"method", "k_neighbors", "target_ratio", "seed"}, "sampler");
    if (!j.contains("method")) throw ConfigError("sampler.method is required");
    resample::SamplerConfig sampler;
    try {
        sampler.method = resample::method_from_string(j.at("method").get<std::string>());
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("sampler.method: ") + e.what());
    }
    sampler.k_neighbors = resample::default_k(sampler.method);
    if (j.contains("k_neighbors")) sampler.k_neighbors = j.at("k_neighbors").get<std::size_t>();
    if (j.contains("target_ratio")) sampler.target_ratio = j.at("target_ratio").get<double>();
    if (j.contains("seed")) sampler.seed = j.at("seed").get<std::uint64_t>();
    return sampler;
}

struct DataSource {
    std::optional<std::string> csv;
    std::optional<data::SynthConfig> synth;
};

DataSource parse_data_source(const json& j) {
    check_keys(j, {"csv", "synth"}, "data");
    DataSource source;
    if (j.contains("csv")) source.csv = j.at("csv").get<std::string>();
    if (j.contains("synth")) source.synth = parse_synth(j.at("synth"));
    if (source.csv.has_value() == source.synth.has_value())
        throw ConfigError("data: exactly one of \"csv\" or \"synth\" is required");
    return source;
}

void parse_train_fields(const json& j, harness::TrainConfig& train, bool& epochs_set) {
    if (j.contains("mode")) train.mode = harness::mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("epochs")) {
        train.epochs = j.at("epochs").get<std::size_t>();
        epochs_set = true;
    }
    if (j.contains("batch_size")) train.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("lr")) train.adam.learning_rate = j.at("lr").get<double>();
    if (j.contains("beta1")) train.adam.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) train.adam.beta2 = j.at("beta2").get<double>();
    if (j.contains("epsilon")) train.adam.epsilon = j.at("epsilon").get<double>();
    if (j.contains("seed")) train.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threshold")) train.threshold = j.at("threshold").get<double>();
    if (j.contains("sampler")) train.sampler = parse_sampler(j.at("sampler"));
}

std::map<std::string, double> parse_overrides(const json& j) {
    if (!j.is_object()) throw ConfigError("overrides: expected an object of numbers");
    std::map<std::string, double> out;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number()) throw ConfigError("overrides." + key + ": expected a number");
        out[key] = value.get<double>();
    }
    return out;
}

void check_version(const json& j, const std::string& where) {
    if (!j.contains("version")) throw ConfigError(where + ": missing \"version\" field");
    const int version = j.at("version").get<int>();
    if (version != kSchemaVersion)
        throw ConfigError(where + ": unsupported schema version " + std::to_string(version) +
                          " (expected " + std::to_string(kSchemaVersion) + ")");
}

struct RunSpec {
    std::string model = "cnn";
    harness::TrainConfig train;
    std::map<std::string, double> overrides;
    DataSource source;
    std::size_t folds = 10;
    bool concurrent = false;
    std::string out = "report.json";
    bool epochs_set = false;
};

RunSpec parse_run(const json& j) {
    check_keys(j,
               {"version", "model", "mode", "overrides", "sampler", "data", "folds", "epochs",
                "batch_size", "lr", "beta1", "beta2", "epsilon", "seed", "threshold",
                "concurrent_folds", "out"},
               "run config");
    check_version(j, "run config");
    RunSpec spec;
    if (j.contains("model")) spec.model = j.at("model").get<std::string>();
    parse_train_fields(j, spec.train, spec.epochs_set);
    if (j.contains("overrides")) spec.overrides = parse_overrides(j.at("overrides"));
    if (j.contains("data")) spec.source = parse_data_source(j.at("data"));
    if (j.contains("folds")) spec.folds = j.at("folds").get<std::size_t>();
    if (j.contains("concurrent_folds")) spec.concurrent = j.at("concurrent_folds").get<bool>();
    if (j.contains("out")) spec.out = j.at("out").get<std::string>();
    return spec;
}

struct BenchSpec {
    std::vector<models::ModelKind> kinds;
    std::vector<harness::TrainMode> modes;
    std::vector<resample::Method> samplers;
    harness::TrainConfig base;
    std::map<std::string, double> overrides;
    DataSource source;
    std::size_t folds = 10;
    bool concurrent = false;
    std::string out_dir = "bench";
    bool epochs_set = false;
};

BenchSpec parse_bench(const json& j) {
    check_keys(j,
               {"version", "models", "modes", "samplers", "overrides", "data", "folds", "epochs",
                "batch_size", "lr", "beta1", "beta2", "epsilon", "seed", "threshold",
                "concurrent_folds", "out_dir"},
               "bench config");
    check_version(j, "bench config");
    BenchSpec spec;
    if (!j.contains("models") || !j.contains("modes"))
        throw ConfigError("bench config: \"models\" and \"modes\" are required");
    for (const auto& name : j.at("models"))
        spec.kinds.push_back(models::model_kind_from_string(name.get<std::string>()));
    for (const auto& name : j.at("modes"))
        spec.modes.push_back(harness::mode_from_string(name.get<std::string>()));
    if (j.contains("samplers"))
        for (const auto& name : j.at("samplers"))
            spec.samplers.push_back(resample::method_from_string(name.get<std::string>()));
    parse_train_fields(j, spec.base, spec.epochs_set);
    if (spec.base.sampler)
        throw ConfigError("bench config: use \"samplers\" instead of a single sampler");
    if (j.contains("overrides")) spec.overrides = parse_overrides(j.at("overrides"));
    if (j.contains("data")) spec.source = parse_data_source(j.at("data"));
    if (j.contains("folds")) spec.folds = j.at("folds").get<std::size_t>();
    if (j.contains("concurrent_folds")) spec.concurrent = j.at("concurrent_folds").get<bool>();
    if (j.contains("out_dir")) spec.out_dir = j.at("out_dir").get<std::string>();
    return spec;
}

data::Dataset load_source(const DataSource& source) {
    if (source.csv) return data::load_csv(*source.csv);
    if (source.synth) return data::synth_generate(*source.synth);
    throw ConfigError("a data source is required (config \"data\" or --data)");
}

// --------------------------------------------------------- report rendering

json sampler_to_json(const resample::SamplerConfig& sampler) {
    return {{"method", resample::to_string(sampler.method)},
            {"k_neighbors", sampler.k_neighbors},
            {"target_ratio", sampler.target_ratio},
            {"seed", sampler.seed}};
}

json config_to_json(const harness::TrainConfig& config) {
    json j = {{"mode", harness::to_string(config.mode)},
              {"epochs", config.epochs},
              {"batch_size", config.batch_size},
              {"lr", config.adam.learning_rate},
              {"beta1", config.adam.beta1},
              {"beta2", config.adam.beta2},
              {"epsilon", config.adam.epsilon},
              {"seed", config.seed},
              {"threshold", config.threshold}};
    if (config.sampler) j["sampler"] = sampler_to_json(*config.sampler);
    return j;
}

json report_to_json(const harness::ExperimentReport& report) {
    json j;
    j["version"] = kSchemaVersion;
    j["library_version"] = report.version.empty() ? kVersion : report.version;
    j["model"] = report.model;
    j["config"] = config_to_json(report.config);
    j["overrides"] = report.overrides;
    j["folds_requested"] = report.folds_requested;
    j["failed"] = report.failed;
    j["error"] = report.error;

    json folds = json::array();
    json fold_seconds = json::array();
    for (const auto& fold : report.folds) {
        json f;
        f["fold_index"] = fold.fold_index;
        f["counts"] = {{"tp", fold.metrics.counts.tp},
                       {"fn", fold.metrics.counts.fn},
                       {"fp", fold.metrics.counts.fp},
                       {"tn", fold.metrics.counts.tn}};
        json named = json::object();
        for (const auto& [name, value] : harness::named_metrics(fold.metrics))
            named[name] = metric_json(value);
        f["metrics"] = named;
        f["validation_ir"] = metric_json(fold.validation_ir);
        f["raw_fold_ir"] = metric_json(fold.raw_fold_ir);
        f["norm_mean"] = fold.stats.mean;
        f["norm_std"] = fold.stats.stddev;
        f["epoch_loss"] = fold.log.epoch_loss;
        f["empty_class_batches"] = fold.log.empty_class_batches;
        json batches = json::array();
        for (const auto& rec : fold.log.batches) {
            batches.push_back({{"epoch", rec.epoch},
                               {"batch", rec.batch},
                               {"loss", rec.loss},
                               {"lambda_minority", rec.lambda_minority},
                               {"lambda_majority", rec.lambda_majority},
                               {"gmean", metric_json(rec.gmean)},
                               {"acc", metric_json(rec.acc)}});
        }
        f["batches"] = batches;
        folds.push_back(std::move(f));
        fold_seconds.push_back(fold.log.wall_seconds);
    }
    j["folds"] = folds;

    json aggregates = json::object();
    for (const auto& [name, stats] : report.aggregates) {
        aggregates[name] = {{"mean", metric_json(stats.mean)},
                            {"std", metric_json(stats.stddev)},
                            {"defined_count", stats.defined_count}};
    }
    j["aggregates"] = aggregates;
    j["timing"] = {{"total_seconds", report.wall_seconds}, {"fold_seconds", fold_seconds}};
    return j;
}

std::string cell_name(const json& report) {
    std::string name = report.at("model").get<std::string>();
    name += "/" + report.at("config").at("mode").get<std::string>();
    if (report.at("config").contains("sampler"))
        name += ":" + report.at("config").at("sampler").at("method").get<std::string>();
    return name;
}

std::string format_cell(const json& aggregate) {
    const auto mean = metric_from_json(aggregate.at("mean"));
    const auto stddev = metric_from_json(aggregate.at("std"));
    if (!mean) return "nan";
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << *mean << " (";
    if (stddev) {
        out << *stddev;
    } else {
        out << "nan";
    }
    out << ")";
    return out.str();
}

const std::vector<std::string>& headline_metrics() {
    static const std::vector<std::string> names = {"recall", "precision", "f1",
                                                   "gmean",  "roc_auc",   "pr_auc"};
    return names;
}

// Rows are cells, columns the six headline metrics as "mean (std)"; the best
// mean per column is marked with a trailing *.
std::string render_table(const std::vector<json>& reports) {
    const auto& names = headline_metrics();
    std::size_t name_width = 4;
    for (const json& report : reports) name_width = std::max(name_width, cell_name(report).size());

    std::vector<std::optional<double>> best(names.size());
    for (const json& report : reports) {
        if (report.at("failed").get<bool>()) continue;
        for (std::size_t c = 0; c < names.size(); ++c) {
            const auto mean = metric_from_json(report.at("aggregates").at(names[c]).at("mean"));
            if (mean && (!best[c] || *mean > *best[c])) best[c] = *mean;
        }
    }

    constexpr std::size_t kColumn = 18;
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(name_width + 2)) << "cell";
    for (const auto& name : names) out << std::left << std::setw(kColumn) << name;
    out << '\n';
    for (const json& report : reports) {
        out << std::left << std::setw(static_cast<int>(name_width + 2)) << cell_name(report);
        if (report.at("failed").get<bool>()) {
            out << "FAILED: " << report.at("error").get<std::string>() << '\n';
            continue;
        }
        for (std::size_t c = 0; c < names.size(); ++c) {
            const json& aggregate = report.at("aggregates").at(names[c]);
            std::string cell = format_cell(aggregate);
            const auto mean = metric_from_json(aggregate.at("mean"));
            if (mean && best[c] && *mean == *best[c]) cell += "*";
            out << std::left << std::setw(kColumn) << cell;
        }
        out << '\n';
    }
    return out.str();
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

std::string trajectory_csv_from_report(const json& report) {
    std::ostringstream out;
    out << "fold,epoch,batch,loss,lambda_minority,lambda_majority,gmean,acc\n";
    for (const json& fold : report.at("folds")) {
        const auto fold_index = fold.at("fold_index").get<std::size_t>();
        for (const json& rec : fold.at("batches")) {
            out << fold_index << ',' << rec.at("epoch").get<std::size_t>() << ','
                << rec.at("batch").get<std::size_t>() << ','
                << format_double(rec.at("loss").get<double>()) << ','
                << format_double(rec.at("lambda_minority").get<double>()) << ','
                << format_double(rec.at("lambda_majority").get<double>()) << ',';
            const auto gmean = metric_from_json(rec.at("gmean"));
            const auto acc = metric_from_json(rec.at("acc"));
            out << (gmean ? format_double(*gmean) : "nan") << ','
                << (acc ? format_double(*acc) : "nan") << '\n';
        }
    }
    return out.str();
}

// Stored aggregates must match a recomputation from the fold records.
void verify_report(const json& report, const std::string& path) {
    check_version(report, path);
    if (report.at("failed").get<bool>()) return;
    for (const auto& [name, aggregate] : report.at("aggregates").items()) {
        std::vector<metrics::Metric> values;
        for (const json& fold : report.at("folds"))
            values.push_back(metric_from_json(fold.at("metrics").at(name)));
        const auto expect = metrics::aggregate_folds(values);
        const auto mean = metric_from_json(aggregate.at("mean"));
        const auto stddev = metric_from_json(aggregate.at("std"));
        const bool mean_ok =
            mean.has_value() == expect.mean.has_value() &&
            (!mean || std::abs(*mean - *expect.mean) <= 1e-12);
        const bool std_ok =
            stddev.has_value() == expect.stddev.has_value() &&
            (!stddev || std::abs(*stddev - *expect.stddev) <= 1e-12);
        if (!mean_ok || !std_ok)
            throw DataError(path + ": stored aggregate \"" + name +
                            "\" does not match its fold records");
    }
}

// ------------------------------------------------------------------ commands

void apply_run_overrides(RunSpec& spec, const Overrides& flags) {
    if (flags.model) spec.model = *flags.model;
    if (flags.mode) spec.train.mode = harness::mode_from_string(*flags.mode);
    if (flags.sampler) {
        resample::SamplerConfig sampler;
        sampler.method = resample::method_from_string(*flags.sampler);
        sampler.k_neighbors = resample::default_k(sampler.method);
        spec.train.sampler = sampler;
    }
    if (flags.folds) spec.folds = *flags.folds;
    if (flags.epochs) {
        spec.train.epochs = *flags.epochs;
        spec.epochs_set = true;
    }
    if (flags.batch_size) spec.train.batch_size = *flags.batch_size;
    if (flags.seed) spec.train.seed = *flags.seed;
    if (flags.data) {
        spec.source.csv = *flags.data;
        spec.source.synth.reset();
    }
    if (flags.out) spec.out = *flags.out;
}

int cmd_generate(const std::string& config_path, const Overrides& flags) {
    data::SynthConfig synth;
    std::string out = "data.csv";
    try {
        if (!config_path.empty()) {
            const json j = load_json(config_path);
            check_keys(j, {"version", "synth", "out"}, "generate config");
            check_version(j, "generate config");
            if (!j.contains("synth")) throw ConfigError("generate config: \"synth\" is required");
            synth = parse_synth(j.at("synth"));
            if (j.contains("out")) out = j.at("out").get<std::string>();
        }
        if (flags.seed) synth.seed = *flags.seed;
        if (flags.out) out = *flags.out;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    try {
        const auto dataset = data::synth_generate(synth);
        data::write_csv(out, dataset);
        json manifest = {{"version", kSchemaVersion},
                         {"seed", synth.seed},
                         {"n_pos", synth.n_pos},
                         {"n_neg", synth.n_neg},
                         {"channels", synth.channels},
                         {"length", synth.length},
                         {"noise_std", synth.noise_std},
                         {"ir", data::imbalance_ratio(dataset)}};
        write_text(out + ".manifest.json", manifest.dump(2) + "\n");
        std::cout << "wrote " << out << " (" << dataset.size() << " samples, ir "
                  << data::imbalance_ratio(dataset) << ")\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

int cmd_run(const std::string& config_path, const Overrides& flags) {
    RunSpec spec;
    data::Dataset dataset;
    models::ModelKind kind{};
    try {
        if (!config_path.empty()) {
            spec = parse_run(load_json(config_path));
        } else {
            spec.source = DataSource{};
        }
        apply_run_overrides(spec, flags);
        if (!spec.epochs_set) throw ConfigError("epochs is required (config or --epochs)");
        kind = models::model_kind_from_string(spec.model);
        harness::validate(spec.train);
        dataset = load_source(spec.source);
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    try {
        const auto report = harness::run_cross_validation(dataset, kind, spec.overrides,
                                                          spec.train, spec.folds,
                                                          spec.concurrent);
        const json j = report_to_json(report);
        write_text(spec.out, j.dump(2) + "\n");
        std::cout << render_table({j});
        std::cout << "wrote " << spec.out << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

int cmd_bench(const std::string& config_path, const Overrides& flags) {
    BenchSpec spec;
    data::Dataset dataset;
    std::vector<harness::BenchCell> cells;
    try {
        if (config_path.empty()) throw ConfigError("bench requires --config");
        spec = parse_bench(load_json(config_path));
        if (flags.folds) spec.folds = *flags.folds;
        if (flags.epochs) {
            spec.base.epochs = *flags.epochs;
            spec.epochs_set = true;
        }
        if (flags.batch_size) spec.base.batch_size = *flags.batch_size;
        if (flags.seed) spec.base.seed = *flags.seed;
        if (flags.data) {
            spec.source.csv = *flags.data;
            spec.source.synth.reset();
        }
        if (flags.out) spec.out_dir = *flags.out;
        if (!spec.epochs_set) throw ConfigError("epochs is required (config or --epochs)");
        cells = harness::enumerate_cells(spec.kinds, spec.modes, spec.samplers);
        if (cells.empty()) throw ConfigError("bench config: the experiment matrix is empty");
        dataset = load_source(spec.source);
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    try {
        std::filesystem::create_directories(spec.out_dir);
        const auto reports = harness::run_benchmark(dataset, cells, spec.overrides, spec.base,
                                                    spec.folds, spec.concurrent);
        std::vector<json> report_jsons;
        report_jsons.reserve(reports.size());
        std::size_t failed = 0;
        for (std::size_t i = 0; i < reports.size(); ++i) {
            json j = report_to_json(reports[i]);
            std::string name = reports[i].model + "_" +
                               harness::to_string(reports[i].config.mode);
            if (reports[i].config.sampler)
                name += "_" + resample::to_string(reports[i].config.sampler->method);
            std::ostringstream file;
            file << "cell_" << std::setw(3) << std::setfill('0') << i << "_" << name << ".json";
            write_text((std::filesystem::path(spec.out_dir) / file.str()).string(),
                       j.dump(2) + "\n");
            failed += static_cast<std::size_t>(reports[i].failed);
            report_jsons.push_back(std::move(j));
        }
        std::string summary = render_table(report_jsons);
        if (failed > 0) summary += "failed cells: " + std::to_string(failed) + "\n";
        write_text((std::filesystem::path(spec.out_dir) / "summary.txt").string(), summary);
        std::cout << summary;
        std::cout << "wrote " << reports.size() << " reports to " << spec.out_dir << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

int cmd_report(const std::vector<std::string>& paths, const std::string& lambda_csv) {
    std::vector<json> reports;
    try {
        for (const auto& path : paths) {
            json j = load_json(path);
            verify_report(j, path);
            reports.push_back(std::move(j));
        }
        if (!lambda_csv.empty() && reports.size() != 1)
            throw ConfigError("--lambda-csv requires exactly one report");
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    try {
        std::cout << render_table(reports);
        if (!lambda_csv.empty()) {
            write_text(lambda_csv, trajectory_csv_from_report(reports.front()));
            std::cout << "wrote " << lambda_csv << '\n';
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"imbalanced time-series classification toolkit"};
    app.require_subcommand(1);

    Overrides flags;
    std::string config_path;
    std::vector<std::string> report_paths;
    std::string lambda_csv;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--seed", flags.seed, "override the base seed");
        cmd->add_option("--out", flags.out, "override the output path");
    };

    CLI::App* generate = app.add_subcommand("generate", "write a synthetic dataset as CSV");
    add_common(generate);

    CLI::App* run = app.add_subcommand("run", "cross-validate one configuration");
    add_common(run);
    run->add_option("--model", flags.model, "model kind (mlp, cnn, fcn, resnet, lstm_fcn)");
    run->add_option("--mode", flags.mode, "training mode (plain, sampled, cost_sensitive, fixed_cost)");
    run->add_option("--sampler", flags.sampler, "resampling method for sampled mode");
    run->add_option("--folds", flags.folds, "cross-validation folds");
    run->add_option("--epochs", flags.epochs, "training epochs");
    run->add_option("--batch-size", flags.batch_size, "minibatch size");
    run->add_option("--data", flags.data, "CSV dataset path (replaces the config data source)");

    CLI::App* bench = app.add_subcommand("bench", "run an experiment matrix");
    add_common(bench);
    bench->add_option("--folds", flags.folds, "cross-validation folds");
    bench->add_option("--epochs", flags.epochs, "training epochs");
    bench->add_option("--batch-size", flags.batch_size, "minibatch size");
    bench->add_option("--data", flags.data, "CSV dataset path (replaces the config data source)");

    CLI::App* report = app.add_subcommand("report", "render stored reports");
    report->add_option("paths", report_paths, "report JSON files")->required();
    report->add_option("--lambda-csv", lambda_csv, "export the per-batch trajectory as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (generate->parsed()) return cmd_generate(config_path, flags);
    if (run->parsed()) return cmd_run(config_path, flags);
    if (bench->parsed()) return cmd_bench(config_path, flags);
    if (report->parsed()) return cmd_report(report_paths, lambda_csv);
    return 2;
}
