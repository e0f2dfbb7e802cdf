// Command-line front end: train, evaluate, sweep, ablate, report-balance, validate-config, synth.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "alinear/alinear.hpp"

namespace {

using namespace alinear;

struct Overrides {
    std::string config_path;
    std::string data;
    std::string name;
    std::vector<std::string> channels;
    std::vector<std::size_t> horizons;
    std::vector<std::uint64_t> seeds;
    std::optional<std::size_t> T;
    std::optional<std::string> ablation;
    std::optional<double> delta;
    std::optional<std::size_t> stride;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> batch;
    std::optional<std::size_t> patience;
    std::optional<double> lr;
    std::optional<double> train_fraction, val_fraction, test_fraction;
    bool per_channel = false;
    bool no_shuffle = false;
};

struct Globals {
    std::string output;
    unsigned threads = 0;
    bool overwrite = false;
    bool verbose = false;
};

void add_config_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config_path, "Experiment config (JSON)");
    cmd->add_option("--data", o.data, "Dataset CSV (overrides dataset.path)");
    cmd->add_option("--name", o.name, "Dataset label used in output paths");
    cmd->add_option("--channels", o.channels, "Channels to forecast (default: all)")->delimiter(',');
    cmd->add_option("--horizons", o.horizons, "Forecast horizons")->delimiter(',');
    cmd->add_option("--seeds", o.seeds, "Seeds")->delimiter(',');
    cmd->add_option("-T,--input-len", o.T, "Lookback length");
    cmd->add_option("--ablation", o.ablation, "full | no_kernel | no_decomp | no_adaptive");
    cmd->add_option("--delta", o.delta, "Seasonal decay strength (default: by horizon band)");
    cmd->add_option("--stride", o.stride, "Window stride");
    cmd->add_option("--epochs", o.epochs, "Maximum epochs");
    cmd->add_option("--batch-size", o.batch, "Mini-batch size");
    cmd->add_option("--patience", o.patience, "Early-stopping patience");
    cmd->add_option("--lr", o.lr, "Initial learning rate");
    cmd->add_option("--train-fraction", o.train_fraction, "Share of rows for training");
    cmd->add_option("--val-fraction", o.val_fraction, "Share of rows for validation");
    cmd->add_option("--test-fraction", o.test_fraction, "Share of rows for testing");
    cmd->add_flag("--per-channel", o.per_channel, "Train separate parameters per channel");
    cmd->add_flag("--no-shuffle", o.no_shuffle, "Disable mini-batch shuffling");
}

ExperimentConfig build_config(const Overrides& o, const Globals& g) {
    ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
    if (!o.data.empty()) c.dataset.path = o.data;
    if (!o.name.empty()) c.dataset.name = o.name;
    if (!o.channels.empty()) c.dataset.channels = o.channels;
    if (!o.horizons.empty()) c.horizons = o.horizons;
    if (!o.seeds.empty()) c.seeds = o.seeds;
    if (o.T) c.T = *o.T;
    if (o.ablation) c.ablation = parse_variant(*o.ablation);
    if (o.delta) c.delta = *o.delta;
    if (o.stride) c.stride = *o.stride;
    if (o.epochs) c.train.max_epochs = *o.epochs;
    if (o.batch) c.train.batch_size = *o.batch;
    if (o.patience) c.train.patience = *o.patience;
    if (o.lr) c.train.lr0 = *o.lr;
    if (o.train_fraction) c.split.train_fraction = *o.train_fraction;
    if (o.val_fraction) c.split.val_fraction = *o.val_fraction;
    if (o.test_fraction) c.split.test_fraction = *o.test_fraction;
    if (o.per_channel) c.per_channel_params = true;
    if (o.no_shuffle) c.train.shuffle = false;

    if (const char* root = std::getenv("ALINEAR_OUTPUT_ROOT"); root && *root) c.output_dir = root;
    if (!g.output.empty()) c.output_dir = g.output;
    if (g.threads) c.threads = g.threads;
    c.validate();
    return c;
}

RunOptions run_options(const Globals& g) {
    return {g.overwrite, [](const std::string& msg) { spdlog::warn("{}", msg); }};
}

void print_report(const EvalReport& r) {
    spdlog::info("{} H={} {}: mse={:.6f} mae={:.6f} params={} pnp_mse={:.3f} beta_T={:.4f} alpha={:.3f}", r.dataset,
                 r.horizon, to_string(r.variant), r.mse, r.mae, r.param_count, r.pnp_mse, r.beta_T_learned,
                 r.alpha_learned);
}

std::vector<std::pair<std::string, std::vector<double>>> parse_grid(const std::vector<std::string>& specs) {
    std::vector<std::pair<std::string, std::vector<double>>> grid;
    for (const auto& s : specs) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("grid entry '" + s + "' must look like key=v1,v2,...");
        std::vector<double> values;
        std::stringstream ss(s.substr(eq + 1));
        for (std::string item; std::getline(ss, item, ',');) {
            try {
                values.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ConfigError("grid value '" + item + "' is not a number");
            }
        }
        grid.emplace_back(s.substr(0, eq), std::move(values));
    }
    return grid;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ALinear: horizon-adaptive linear forecasting experiments"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("-o,--output", g.output, "Output root (overrides ALINEAR_OUTPUT_ROOT and the config)");
    app.add_option("-j,--threads", g.threads, "Worker threads (overrides ALINEAR_THREADS)");
    app.add_flag("--overwrite", g.overwrite, "Allow replacing existing result files");
    app.add_flag("-v,--verbose", g.verbose, "Debug logging");

    Overrides o;
    auto* train_cmd = app.add_subcommand("train", "Train and evaluate every (horizon, seed) in the config");
    add_config_options(train_cmd, o);

    std::string checkpoint, report_out;
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on the configured test split");
    add_config_options(eval_cmd, o);
    eval_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    eval_cmd->add_option("--report", report_out, "Write the report JSON here (default: stdout)");

    std::vector<std::string> grid_specs;
    auto* sweep_cmd = app.add_subcommand("sweep", "Grid over kernel_init / delta / trend_factor_init");
    add_config_options(sweep_cmd, o);
    sweep_cmd->add_option("--grid", grid_specs, "key=v1,v2,... (repeatable; replaces the config grid)");

    std::vector<std::string> modes;
    auto* ablate_cmd = app.add_subcommand("ablate", "Train each model variant");
    add_config_options(ablate_cmd, o);
    ablate_cmd->add_option("--modes", modes, "Variants to run (default: all four)")->delimiter(',');

    std::string balance_out;
    auto* balance_cmd = app.add_subcommand("report-balance", "Learned beta_T / beta_S / alpha per horizon from checkpoints");
    add_config_options(balance_cmd, o);
    balance_cmd->add_option("--csv", balance_out, "Write CSV here (default: stdout)");

    auto* validate_cmd = app.add_subcommand("validate-config", "Check a config and print it with defaults filled in");
    add_config_options(validate_cmd, o);

    SyntheticSpec synth;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic trend + daily-cycle CSV");
    synth_cmd->add_option("--csv", synth_out, "Output file")->required();
    synth_cmd->add_option("--length", synth.length);
    synth_cmd->add_option("--seed", synth.seed);
    synth_cmd->add_option("--noise-std", synth.noise_std);
    synth_cmd->add_option("--slope", synth.slope);
    synth_cmd->add_option("--period", synth.period);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version requests exit 0; any other usage problem is a configuration error.
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::config_error);
    }
    spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (*synth_cmd) {
            write_csv(make_synthetic_series(synth), synth_out);
            spdlog::info("wrote {} rows to {}", synth.length, synth_out);
            return 0;
        }

        auto cfg = build_config(o, g);

        if (*validate_cmd) {
            std::cout << config_to_json(cfg).dump(2) << "\n";
            return 0;
        }
        if (*train_cmd) {
            const auto result = run_experiment(cfg, run_options(g));
            for (const auto& r : result.reports) print_report(r);
            spdlog::info("results in {}", result.output_dir.string());
        } else if (*eval_cmd) {
            const auto model = load_checkpoint(checkpoint);
            const auto report = evaluate_checkpoint(cfg, model, cfg.threads ? cfg.threads : default_thread_count());
            const auto text = report_to_json(report).dump(2) + "\n";
            if (report_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream(report_out) << text;
                print_report(report);
            }
        } else if (*sweep_cmd) {
            if (!grid_specs.empty()) {
                cfg.sweep.clear();
                for (auto& [k, v] : parse_grid(grid_specs)) cfg.sweep[k] = v;
                cfg.validate();
            }
            const auto result = run_sweep(cfg, run_options(g));
            for (const auto& s : result.summary)
                spdlog::info("{:>18} H={:<4} mse range [{:.6f}, {:.6f}] relative spread {:.2f}%", s.key, s.horizon,
                             s.min_mse, s.max_mse, 100.0 * s.relative_spread);
        } else if (*ablate_cmd) {
            std::vector<Variant> variants;
            for (const auto& m : modes) variants.push_back(parse_variant(m));
            if (variants.empty()) variants.assign(all_variants.begin(), all_variants.end());
            for (const auto& a : run_ablation(cfg, variants, run_options(g))) {
                for (const auto& r : a.reports) print_report(r);
            }
        } else if (*balance_cmd) {
            const auto rows = report_component_balance(cfg.output_dir, cfg.dataset_name(), cfg.horizons, cfg.seeds);
            const auto csv = balance_csv(rows);
            if (balance_out.empty()) std::cout << csv;
            else std::ofstream(balance_out) << csv;
        }
        return 0;
    } catch (const ConfigError& e) {
        spdlog::error("config error: {}", e.what());
        return static_cast<int>(ExitCode::config_error);
    } catch (const DataError& e) {
        spdlog::error("data error: {}", e.what());
        return static_cast<int>(ExitCode::data_error);
    } catch (const DivergenceError& e) {
        spdlog::error("numerical divergence: {}", e.what());
        return static_cast<int>(ExitCode::divergence);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return static_cast<int>(ExitCode::data_error);
    }
}
