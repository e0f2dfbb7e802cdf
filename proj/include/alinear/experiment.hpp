#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "alinear/checkpoint.hpp"
#include "alinear/data.hpp"
#include "alinear/error.hpp"
#include "alinear/metrics.hpp"
#include "alinear/model.hpp"
#include "alinear/parallel.hpp"
#include "alinear/training.hpp"

namespace alinear {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct DatasetConfig {
    std::string path;
    /// Label used for output directories; defaults to the file stem.
    std::string name;
    /// Channels to forecast; empty means every value column.
    std::vector<std::string> channels;
};

inline const std::set<std::string>& sweep_keys() {
    static const std::set<std::string> keys{"kernel_init", "delta", "trend_factor_init"};
    return keys;
}

struct ExperimentConfig {
    DatasetConfig dataset;
    std::size_t T = 96;
    std::vector<std::size_t> horizons{96};
    SplitSpec split;
    TrainConfig train;
    /// Overrides the horizon-banded default decay when set.
    std::optional<double> delta;
    Variant ablation = Variant::full;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::map<std::string, std::vector<double>> sweep;
    std::string output_dir = "runs";
    std::size_t stride = 1;
    /// Train one parameter set per channel instead of sharing one across channels.
    bool per_channel_params = false;
    InitOptions init;
    /// Worker threads for independent runs; 0 means default_thread_count().
    unsigned threads = 0;

    std::string dataset_name() const {
        return dataset.name.empty() ? std::filesystem::path(dataset.path).stem().string() : dataset.name;
    }
    double delta_for(std::size_t horizon) const { return delta.value_or(default_delta(horizon)); }

    void validate() const {
        if (dataset.path.empty()) throw ConfigError("config: dataset.path is required");
        if (T < 1) throw ConfigError("config: T must be >= 1");
        if (horizons.empty()) throw ConfigError("config: horizons must not be empty");
        for (auto h : horizons) {
            if (h < 1) throw ConfigError("config: every horizon must be >= 1");
        }
        if (seeds.empty()) throw ConfigError("config: seeds must not be empty");
        if (stride < 1) throw ConfigError("config: stride must be >= 1");
        if (delta && !(*delta >= 0.0)) throw ConfigError("config: delta must be >= 0");
        for (const auto& [key, values] : sweep) {
            if (!sweep_keys().contains(key))
                throw ConfigError("config: sweep key '" + key + "' is not one of kernel_init, delta, trend_factor_init");
            if (values.empty()) throw ConfigError("config: sweep values for '" + key + "' are empty");
        }
        train.validate();
        validate_split(split);
    }
};

namespace detail {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; }))
            throw ConfigError("config: unknown key '" + where + k + "'");
    }
}

} // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    try {
        if (!j.is_object()) throw ConfigError("config: top level must be an object");
        detail::reject_unknown(j,
                               {"dataset", "T", "horizons", "split", "train", "delta", "ablation", "seeds", "sweep",
                                "output_dir", "stride", "per_channel_params", "init", "threads"},
                               "");
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            detail::reject_unknown(d, {"path", "name", "channels"}, "dataset.");
            detail::read_opt(d, "path", c.dataset.path);
            detail::read_opt(d, "name", c.dataset.name);
            detail::read_opt(d, "channels", c.dataset.channels);
        }
        detail::read_opt(j, "T", c.T);
        detail::read_opt(j, "horizons", c.horizons);
        if (j.contains("split")) {
            const auto& s = j.at("split");
            detail::reject_unknown(s, {"train", "val", "test"}, "split.");
            detail::read_opt(s, "train", c.split.train_fraction);
            detail::read_opt(s, "val", c.split.val_fraction);
            detail::read_opt(s, "test", c.split.test_fraction);
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            detail::reject_unknown(t, {"lr0", "batch_size", "max_epochs", "patience", "shuffle", "max_grad_norm"}, "train.");
            detail::read_opt(t, "lr0", c.train.lr0);
            detail::read_opt(t, "batch_size", c.train.batch_size);
            detail::read_opt(t, "max_epochs", c.train.max_epochs);
            detail::read_opt(t, "patience", c.train.patience);
            detail::read_opt(t, "shuffle", c.train.shuffle);
            detail::read_opt(t, "max_grad_norm", c.train.max_grad_norm);
        }
        if (j.contains("delta") && !j.at("delta").is_null()) c.delta = j.at("delta").get<double>();
        if (j.contains("ablation")) c.ablation = parse_variant(j.at("ablation").get<std::string>());
        detail::read_opt(j, "seeds", c.seeds);
        detail::read_opt(j, "sweep", c.sweep);
        detail::read_opt(j, "output_dir", c.output_dir);
        detail::read_opt(j, "stride", c.stride);
        detail::read_opt(j, "per_channel_params", c.per_channel_params);
        detail::read_opt(j, "threads", c.threads);
        if (j.contains("init")) {
            const auto& i = j.at("init");
            detail::reject_unknown(i, {"kernel_init", "kernel_slope", "trend_factor_init", "gate_slope", "fixed_width",
                                       "w_min", "w_max", "noise"},
                                   "init.");
            detail::read_opt(i, "kernel_init", c.init.kernel_init);
            detail::read_opt(i, "kernel_slope", c.init.kernel_slope);
            detail::read_opt(i, "trend_factor_init", c.init.trend_factor_init);
            detail::read_opt(i, "gate_slope", c.init.gate_slope);
            detail::read_opt(i, "fixed_width", c.init.fixed_width);
            detail::read_opt(i, "w_min", c.init.w_min);
            detail::read_opt(i, "w_max", c.init.w_max);
            detail::read_opt(i, "noise", c.init.init_noise);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

inline json config_to_json(const ExperimentConfig& c) {
    json j;
    j["dataset"] = {{"path", c.dataset.path}, {"name", c.dataset.name}, {"channels", c.dataset.channels}};
    j["T"] = c.T;
    j["horizons"] = c.horizons;
    j["split"] = {{"train", c.split.train_fraction}, {"val", c.split.val_fraction}, {"test", c.split.test_fraction}};
    j["train"] = {{"lr0", c.train.lr0},
                  {"batch_size", c.train.batch_size},
                  {"max_epochs", c.train.max_epochs},
                  {"patience", c.train.patience},
                  {"shuffle", c.train.shuffle},
                  {"max_grad_norm", c.train.max_grad_norm}};
    j["delta"] = c.delta ? json(*c.delta) : json(nullptr);
    j["ablation"] = std::string(to_string(c.ablation));
    j["seeds"] = c.seeds;
    j["sweep"] = json::object();
    for (const auto& [k, v] : c.sweep) j["sweep"][k] = v;
    j["output_dir"] = c.output_dir;
    j["stride"] = c.stride;
    j["per_channel_params"] = c.per_channel_params;
    j["init"] = {{"kernel_init", c.init.kernel_init}, {"kernel_slope", c.init.kernel_slope},
                 {"trend_factor_init", c.init.trend_factor_init}, {"gate_slope", c.init.gate_slope},
                 {"fixed_width", c.init.fixed_width}, {"w_min", c.init.w_min},
                 {"w_max", c.init.w_max}, {"noise", c.init.init_noise}};
    j["threads"] = c.threads;
    return j;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        return config_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct SeedMetrics {
    std::uint64_t seed = 0;
    double mse = 0.0;
    double mae = 0.0;
};

struct EvalReport {
    std::string dataset;
    std::size_t horizon = 0;
    Variant variant = Variant::full;
    double mse = 0.0;
    double mae = 0.0;
    std::size_t n_windows = 0;
    std::uint64_t param_count = 0;
    double pnp_mse = 0.0;
    double pnp_mae = 0.0;
    std::vector<SeedMetrics> per_seed;
    double beta_T_learned = 0.0;
    /// 0 when the variant has no decomposition.
    double alpha_learned = 0.0;
};

inline json report_to_json(const EvalReport& r) {
    const auto num_or_null = [](double v) { return std::isfinite(v) && v > 0.0 ? json(v) : json(nullptr); };
    json seeds = json::array();
    for (const auto& s : r.per_seed) seeds.push_back({{"seed", s.seed}, {"mse", s.mse}, {"mae", s.mae}});
    return {{"dataset", r.dataset},
            {"horizon", r.horizon},
            {"variant", std::string(to_string(r.variant))},
            {"mse", r.mse},
            {"mae", r.mae},
            {"n_windows", r.n_windows},
            {"param_count", r.param_count},
            {"pnp_mse", num_or_null(r.pnp_mse)},
            {"pnp_mae", num_or_null(r.pnp_mae)},
            {"pnp_log_base", "e"},
            {"per_seed", seeds},
            {"beta_T_learned", r.beta_T_learned},
            {"alpha_learned", has_decomposition(r.variant) ? json(r.alpha_learned) : json(nullptr)}};
}

inline json train_log_to_json(const TrainLog& log) {
    json epochs = json::array();
    for (const auto& e : log.epochs)
        epochs.push_back({{"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"lr", e.lr}, {"wall_seconds", e.wall_seconds}});
    return {{"epochs", epochs},
            {"best_epoch", log.best_epoch},
            {"best_val_loss", log.best_val_loss()},
            {"stop_reason", log.stop_reason},
            {"optimizer_steps", log.optimizer_steps}};
}

inline void fill_pnp(EvalReport& r) {
    r.pnp_mse = r.mse > 0.0 && r.param_count >= 2 ? pnp(r.mse, r.param_count) : 0.0;
    r.pnp_mae = r.mae > 0.0 && r.param_count >= 2 ? pnp(r.mae, r.param_count) : 0.0;
}

/// Mean over seeds; per_seed is the concatenation of the inputs' entries.
inline EvalReport average_reports(std::span<const EvalReport> runs) {
    if (runs.empty()) throw ConfigError("average_reports: no runs");
    EvalReport avg = runs.front();
    avg.per_seed.clear();
    avg.mse = avg.mae = avg.beta_T_learned = avg.alpha_learned = 0.0;
    for (const auto& r : runs) {
        avg.mse += r.mse;
        avg.mae += r.mae;
        avg.beta_T_learned += r.beta_T_learned;
        avg.alpha_learned += r.alpha_learned;
        avg.per_seed.insert(avg.per_seed.end(), r.per_seed.begin(), r.per_seed.end());
    }
    const double n = static_cast<double>(runs.size());
    avg.mse /= n;
    avg.mae /= n;
    avg.beta_T_learned /= n;
    avg.alpha_learned /= n;
    fill_pnp(avg);
    return avg;
}

// ---------------------------------------------------------------------------
// Component balance
// ---------------------------------------------------------------------------

struct BalanceRow {
    std::size_t horizon = 0;
    double beta_trend = 0.5;
    double beta_seasonal = 0.5;
    /// Effective moving-average width; 0 when the variant has no decomposition.
    double alpha = 0.0;
    /// True for variants without a learned gate (reported as a 0.5/0.5 marker).
    bool fixed = false;
};

inline BalanceRow component_balance(const ModelParams& p) {
    BalanceRow row{p.horizon};
    if (has_gate(p.variant)) {
        row.beta_trend = sigmoid(p.tensors.v1 + p.tensors.v2 * static_cast<double>(p.horizon));
        row.beta_seasonal = 1.0 - row.beta_trend;
    } else {
        row.fixed = true;
    }
    if (has_decomposition(p.variant)) row.alpha = window_width(p.decomp(), p.horizon).alpha;
    return row;
}

inline std::vector<BalanceRow> report_component_balance(std::span<const ModelParams> models) {
    std::vector<BalanceRow> rows;
    for (const auto& m : models) rows.push_back(component_balance(m));
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.horizon < b.horizon; });
    return rows;
}

inline std::string balance_csv(std::span<const BalanceRow> rows) {
    std::ostringstream out;
    out << std::setprecision(10) << "horizon,beta_T,beta_S,alpha,fixed\n";
    for (const auto& r : rows) {
        out << r.horizon << ',' << r.beta_trend << ',' << r.beta_seasonal << ',';
        if (r.alpha > 0.0) out << r.alpha;
        else out << "NA";
        out << ',' << (r.fixed ? "true" : "false") << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Output handling
// ---------------------------------------------------------------------------

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

using LogFn = std::function<void(const std::string&)>;

/// Writes files under a root directory and keeps the manifest entries.
class OutputSink {
public:
    OutputSink(std::filesystem::path root, bool overwrite, LogFn log = {})
        : root_(std::move(root)), overwrite_(overwrite), log_(std::move(log)) {}

    const std::filesystem::path& root() const { return root_; }

    void write(const std::filesystem::path& rel, std::string_view content) {
        const auto path = root_ / rel;
        if (std::filesystem::exists(path)) {
            if (!overwrite_) throw ConfigError("refusing to overwrite " + path.string() + " (use --overwrite)");
            if (log_) log_("overwriting " + path.string());
        }
        std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + path.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("failed writing " + path.string());
        std::lock_guard lock(mutex_);
        entries_[rel.generic_string()] = {sha256_hex(content), content.size()};
    }

    void write_json(const std::filesystem::path& rel, const json& j) { write(rel, j.dump(2) + "\n"); }

    /// manifest.json: every file written so far with its SHA-256, plus a creation timestamp.
    void write_manifest(const json& config) {
        json files = json::array();
        {
            std::lock_guard lock(mutex_);
            for (const auto& [path, e] : entries_) files.push_back({{"path", path}, {"sha256", e.first}, {"bytes", e.second}});
        }
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        const json manifest = {{"created_utc", stamp}, {"config", config}, {"files", files}};
        const auto path = root_ / "manifest.json";
        std::filesystem::create_directories(root_);
        std::ofstream out(path, std::ios::trunc);
        out << manifest.dump(2) << "\n";
    }

private:
    std::filesystem::path root_;
    bool overwrite_;
    LogFn log_;
    std::mutex mutex_;
    std::map<std::string, std::pair<std::string, std::size_t>> entries_;
};

// ---------------------------------------------------------------------------
// Running experiments
// ---------------------------------------------------------------------------

/// Loaded, standardized data shared by every run of one experiment.
struct PreparedData {
    RawSeries raw;
    StandardizedSeries standardized;
    /// Split without a minimum-length check; rechecked per horizon when windows are built.
    SplitRanges base_split;
};

inline PreparedData prepare_data(const ExperimentConfig& cfg) {
    PreparedData d;
    d.raw = load_csv(cfg.dataset.path, CsvSchema{cfg.dataset.channels});
    d.raw.name = cfg.dataset_name();
    d.base_split = chronological_split(d.raw, cfg.split, 0, 0);
    d.standardized = standardize(d.raw, d.base_split.train);
    return d;
}

struct RunWindows {
    std::vector<ForecastWindow> train, val, test;
};

inline RunWindows windows_for(const PreparedData& d, const ExperimentConfig& cfg, std::size_t horizon) {
    const auto split = chronological_split(d.standardized.series, cfg.split, cfg.T, horizon);
    const auto& s = d.standardized.series;
    return {make_windows(s, split.train, cfg.T, horizon, cfg.stride), make_windows(s, split.val, cfg.T, horizon, cfg.stride),
            make_windows(s, split.test, cfg.T, horizon, cfg.stride)};
}

struct RunResult {
    EvalReport report;
    /// One model, or one per channel with per_channel_params.
    std::vector<ModelParams> models;
    std::vector<TrainLog> logs;
};

namespace detail {
inline std::vector<ForecastWindow> channel_subset(std::span<const ForecastWindow> w, std::size_t channel) {
    std::vector<ForecastWindow> out;
    for (const auto& x : w) {
        if (x.channel == channel) out.push_back(x);
    }
    return out;
}
} // namespace detail

/// Train on one (horizon, seed) and evaluate on the test windows.
inline RunResult run_single(const ExperimentConfig& cfg, const PreparedData& data, std::size_t horizon,
                            std::uint64_t seed, unsigned threads = 1) {
    const auto win = windows_for(data, cfg, horizon);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    tc.threads = threads;
    const ModelParams init = init_params(cfg.T, horizon, cfg.delta_for(horizon), seed, [&] {
        InitOptions o = cfg.init;
        o.variant = cfg.ablation;
        return o;
    }());

    RunResult r;
    ErrorAccumulator err;
    const std::size_t groups = cfg.per_channel_params ? data.raw.channel_count() : 1;
    for (std::size_t g = 0; g < groups; ++g) {
        std::vector<ForecastWindow> tr, va, te;
        if (cfg.per_channel_params) {
            tr = detail::channel_subset(win.train, g);
            va = detail::channel_subset(win.val, g);
            te = detail::channel_subset(win.test, g);
        } else {
            tr = win.train;
            va = win.val;
            te = win.test;
        }
        auto trained = train(init, tr, va, tc);
        err.merge(evaluate(trained.best, te, threads));
        r.models.push_back(std::move(trained.best));
        r.logs.push_back(std::move(trained.log));
    }

    auto& rep = r.report;
    rep.dataset = data.raw.name;
    rep.horizon = horizon;
    rep.variant = cfg.ablation;
    rep.mse = err.mse();
    rep.mae = err.mae();
    rep.n_windows = win.test.size();
    rep.param_count = 0;
    for (const auto& m : r.models) {
        rep.param_count += m.learnable_count();
        const auto bal = component_balance(m);
        rep.beta_T_learned += bal.beta_trend;
        rep.alpha_learned += bal.alpha;
    }
    rep.beta_T_learned /= static_cast<double>(r.models.size());
    rep.alpha_learned /= static_cast<double>(r.models.size());
    rep.per_seed = {{seed, rep.mse, rep.mae}};
    fill_pnp(rep);
    return r;
}

struct RunOptions {
    bool overwrite = false;
    LogFn log;
};

struct ExperimentResult {
    /// One averaged report per horizon, in config order.
    std::vector<EvalReport> reports;
    std::filesystem::path output_dir;
};

namespace detail {

/// Rethrows `e` as the same error category with `context` prepended.
[[noreturn]] inline void rethrow_with_context(std::exception_ptr e, const std::string& context) {
    try {
        std::rethrow_exception(e);
    } catch (const ConfigError& x) {
        throw ConfigError(context + ": " + x.what());
    } catch (const DataError& x) {
        throw DataError(context + ": " + x.what());
    } catch (const DivergenceError& x) {
        throw DivergenceError(context + ": " + x.what());
    } catch (const std::exception& x) {
        throw std::runtime_error(context + ": " + x.what());
    }
}

inline std::string run_dir(const std::string& dataset, std::size_t horizon) {
    return dataset + "/H" + std::to_string(horizon);
}

inline std::string csv_row(const EvalReport& r, const std::string& seed) {
    std::ostringstream o;
    o << std::setprecision(17) << r.dataset << ',' << to_string(r.variant) << ',' << r.horizon << ',' << seed << ','
      << r.mse << ',' << r.mae << ',' << r.n_windows << ',' << r.param_count << ',' << r.pnp_mse << ',' << r.pnp_mae
      << ',' << r.beta_T_learned << ',' << r.alpha_learned << '\n';
    return o.str();
}

inline constexpr const char* results_csv_header =
    "dataset,variant,horizon,seed,mse,mae,n_windows,param_count,pnp_mse,pnp_mae,beta_T,alpha\n";

} // namespace detail

/// Every (horizon, seed) pair: split, standardize, window, train, evaluate. Writes per-seed and
/// averaged reports, train logs, checkpoints, results.csv, balance.csv and manifest.json.
/// Completed runs are written even if another run fails; the first failure is then rethrown.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    cfg.validate();
    const auto data = prepare_data(cfg);
    for (std::size_t c = 0; c < data.standardized.stats.zero_variance.size(); ++c) {
        if (data.standardized.stats.zero_variance[c] && opt.log)
            opt.log("channel '" + data.raw.channel_names[c] + "' has zero variance in the training segment; std floored");
    }
    for (auto h : cfg.horizons) (void)chronological_split(data.raw, cfg.split, cfg.T, h);

    OutputSink sink(cfg.output_dir, opt.overwrite, opt.log);
    if (!opt.overwrite && std::filesystem::exists(sink.root() / "manifest.json"))
        throw ConfigError("output directory " + sink.root().string() + " already holds results (use --overwrite)");

    struct Task {
        std::size_t horizon;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (auto h : cfg.horizons) {
        for (auto s : cfg.seeds) tasks.push_back({h, s});
    }
    const unsigned threads = cfg.threads ? cfg.threads : default_thread_count();
    const unsigned inner = tasks.size() >= threads ? 1u : std::max(1u, threads / static_cast<unsigned>(tasks.size()));

    std::vector<std::optional<RunResult>> results(tasks.size());
    std::vector<std::exception_ptr> failures(tasks.size());
    parallel_for(tasks.size(), threads, [&](std::size_t i) {
        const auto [h, seed] = tasks[i];
        try {
            auto r = run_single(cfg, data, h, seed, inner);
            const std::string dir = detail::run_dir(data.raw.name, h) + "/seed" + std::to_string(seed);
            sink.write_json(dir + "/report.json", report_to_json(r.report));
            for (std::size_t m = 0; m < r.models.size(); ++m) {
                const std::string suffix = r.models.size() > 1 ? "_c" + std::to_string(m) : "";
                sink.write_json(dir + "/train_log" + suffix + ".json", train_log_to_json(r.logs[m]));
                const auto bytes = encode_checkpoint(r.models[m]);
                sink.write(dir + "/model" + suffix + ".ckpt",
                           std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
            }
            results[i] = std::move(r);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    });

    ExperimentResult out{{}, sink.root()};
    std::string csv = detail::results_csv_header;
    std::vector<ModelParams> balance_models;
    const auto best_seed_model = [&](std::size_t h) {
        const RunResult* best = nullptr;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].horizon != h || !results[i]) continue;
            if (!best || results[i]->logs.front().best_val_loss() < best->logs.front().best_val_loss()) best = &*results[i];
        }
        return best->models.front();
    };
    for (auto h : cfg.horizons) {
        std::vector<EvalReport> per_seed;
        std::vector<ModelParams> models;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].horizon != h || !results[i]) continue;
            per_seed.push_back(results[i]->report);
            csv += detail::csv_row(results[i]->report, std::to_string(tasks[i].seed));
        }
        if (per_seed.size() != cfg.seeds.size()) continue;
        balance_models.push_back(best_seed_model(h));
        auto avg = average_reports(per_seed);
        sink.write_json(detail::run_dir(data.raw.name, h) + "/report.json", report_to_json(avg));
        csv += detail::csv_row(avg, "mean");
        out.reports.push_back(std::move(avg));
    }
    sink.write("results.csv", csv);
    if (!balance_models.empty()) sink.write("balance.csv", balance_csv(report_component_balance(balance_models)));
    sink.write_manifest(config_to_json(cfg));

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (failures[i])
            detail::rethrow_with_context(failures[i], "horizon " + std::to_string(tasks[i].horizon) + ", seed " +
                                                          std::to_string(tasks[i].seed));
    }
    return out;
}

/// Evaluates a stored model on the test windows of the configured dataset.
inline EvalReport evaluate_checkpoint(const ExperimentConfig& cfg, const ModelParams& model, unsigned threads = 1) {
    auto c = cfg;
    c.T = model.input_len;
    const auto data = prepare_data(c);
    const auto win = windows_for(data, c, model.horizon);
    const auto err = evaluate(model, win.test, threads);
    EvalReport r;
    r.dataset = data.raw.name;
    r.horizon = model.horizon;
    r.variant = model.variant;
    r.mse = err.mse();
    r.mae = err.mae();
    r.n_windows = win.test.size();
    r.param_count = model.learnable_count();
    const auto bal = component_balance(model);
    r.beta_T_learned = bal.beta_trend;
    r.alpha_learned = bal.alpha;
    fill_pnp(r);
    return r;
}

/// Reads the per-seed checkpoints of a finished run and reports the balance from the seed with the
/// lowest best validation loss for each horizon.
inline std::vector<BalanceRow> report_component_balance(const std::filesystem::path& output_dir, const std::string& dataset,
                                                        std::span<const std::size_t> horizons,
                                                        std::span<const std::uint64_t> seeds) {
    std::vector<ModelParams> best_models;
    for (auto h : horizons) {
        std::optional<ModelParams> best;
        double best_val = std::numeric_limits<double>::infinity();
        for (auto s : seeds) {
            const auto dir = output_dir / detail::run_dir(dataset, h) / ("seed" + std::to_string(s));
            const auto ckpt = dir / "model.ckpt";
            if (!std::filesystem::exists(ckpt)) throw DataError("missing checkpoint " + ckpt.string());
            double val = std::numeric_limits<double>::infinity();
            if (std::ifstream log(dir / "train_log.json"); log) val = json::parse(log).at("best_val_loss").get<double>();
            if (!best || val < best_val) {
                best = load_checkpoint(ckpt);
                best_val = val;
            }
        }
        best_models.push_back(std::move(*best));
    }
    return report_component_balance(best_models);
}

// ---------------------------------------------------------------------------
// Sweeps and ablations
// ---------------------------------------------------------------------------

struct SweepPoint {
    std::map<std::string, double> assignment;
    std::vector<EvalReport> reports;  // per horizon
};

struct SweepSpread {
    std::string key;  // hyperparameter name, or "all" for the whole grid
    std::size_t horizon = 0;
    double min_mse = 0.0;
    double max_mse = 0.0;
    double spread = 0.0;           // max - min
    double relative_spread = 0.0;  // (max - min) / min
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::vector<SweepSpread> summary;
};

inline ExperimentConfig apply_sweep_assignment(ExperimentConfig cfg, const std::map<std::string, double>& a) {
    for (const auto& [key, value] : a) {
        if (key == "kernel_init") {
            cfg.init.kernel_init = value;
            cfg.init.fixed_width = value;
        } else if (key == "delta") {
            cfg.delta = value;
        } else if (key == "trend_factor_init") {
            cfg.init.trend_factor_init = value;
        } else {
            throw ConfigError("unknown sweep key '" + key + "'");
        }
    }
    cfg.sweep.clear();
    return cfg;
}

inline std::string format_number(double v) {
    std::ostringstream o;
    o << std::setprecision(12) << v;
    return o.str();
}

/// Cartesian product over the sweep grid, each point a full experiment under
/// <output_dir>/sweep/<key=value,...>. Records max - min of test MSE per swept key and horizon
/// (over points sharing the other keys, worst case) and over the whole grid ("all").
inline SweepResult run_sweep(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    cfg.validate();
    if (cfg.sweep.empty()) throw ConfigError("sweep: grid is empty");

    std::vector<std::map<std::string, double>> grid{{}};
    for (const auto& [key, values] : cfg.sweep) {
        std::vector<std::map<std::string, double>> next;
        for (const auto& partial : grid) {
            for (double v : values) {
                auto a = partial;
                a[key] = v;
                next.push_back(std::move(a));
            }
        }
        grid = std::move(next);
    }

    SweepResult result;
    OutputSink sink(std::filesystem::path(cfg.output_dir) / "sweep", opt.overwrite, opt.log);
    for (const auto& a : grid) {
        std::string name;
        for (const auto& [k, v] : a) name += (name.empty() ? "" : ",") + k + "=" + format_number(v);
        auto point_cfg = apply_sweep_assignment(cfg, a);
        point_cfg.output_dir = (sink.root() / name).string();
        result.points.push_back({a, run_experiment(point_cfg, opt).reports});
    }

    const auto spread_of = [&](const std::string& key, std::size_t hi, const std::vector<std::size_t>& idx) {
        SweepSpread s{key, cfg.horizons[hi]};
        s.min_mse = std::numeric_limits<double>::infinity();
        s.max_mse = -s.min_mse;
        for (auto i : idx) {
            const double m = result.points[i].reports[hi].mse;
            s.min_mse = std::min(s.min_mse, m);
            s.max_mse = std::max(s.max_mse, m);
        }
        s.spread = s.max_mse - s.min_mse;
        s.relative_spread = s.min_mse > 0.0 ? s.spread / s.min_mse : 0.0;
        return s;
    };
    for (std::size_t hi = 0; hi < cfg.horizons.size(); ++hi) {
        std::vector<std::size_t> all(result.points.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        result.summary.push_back(spread_of("all", hi, all));
        for (const auto& [key, values] : cfg.sweep) {
            // Group points by the values of every other key; keep the widest group.
            std::map<std::map<std::string, double>, std::vector<std::size_t>> groups;
            for (std::size_t i = 0; i < result.points.size(); ++i) {
                auto rest = result.points[i].assignment;
                rest.erase(key);
                groups[rest].push_back(i);
            }
            std::optional<SweepSpread> worst;
            for (const auto& [rest, idx] : groups) {
                auto s = spread_of(key, hi, idx);
                if (!worst || s.spread > worst->spread) worst = s;
            }
            result.summary.push_back(*worst);
        }
    }

    json summary = json::array();
    std::ostringstream csv;
    csv << std::setprecision(17) << "key,horizon,min_mse,max_mse,spread,relative_spread\n";
    for (const auto& s : result.summary) {
        summary.push_back({{"key", s.key}, {"horizon", s.horizon}, {"min_mse", s.min_mse}, {"max_mse", s.max_mse},
                           {"spread", s.spread}, {"relative_spread", s.relative_spread}});
        csv << s.key << ',' << s.horizon << ',' << s.min_mse << ',' << s.max_mse << ',' << s.spread << ','
            << s.relative_spread << '\n';
    }
    sink.write_json("sweep_summary.json", summary);
    sink.write("sweep_summary.csv", csv.str());
    sink.write_manifest(config_to_json(cfg));
    return result;
}

struct AblationResult {
    Variant variant;
    std::vector<EvalReport> reports;  // per horizon
};

/// Runs each variant as a full experiment under <output_dir>/ablation/<variant>.
inline std::vector<AblationResult> run_ablation(const ExperimentConfig& cfg, std::span<const Variant> variants,
                                                const RunOptions& opt = {}) {
    cfg.validate();
    std::vector<AblationResult> out;
    OutputSink sink(std::filesystem::path(cfg.output_dir) / "ablation", opt.overwrite, opt.log);
    std::ostringstream csv;
    csv << std::setprecision(17) << "variant,horizon,mse,mae,param_count\n";
    for (auto v : variants) {
        auto c = cfg;
        c.ablation = v;
        c.output_dir = (sink.root() / std::string(to_string(v))).string();
        out.push_back({v, run_experiment(c, opt).reports});
        for (const auto& r : out.back().reports)
            csv << to_string(v) << ',' << r.horizon << ',' << r.mse << ',' << r.mae << ',' << r.param_count << '\n';
    }
    sink.write("ablation_summary.csv", csv.str());
    sink.write_manifest(config_to_json(cfg));
    return out;
}

} // namespace alinear
