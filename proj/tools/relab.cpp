// Experiment front door: data generation and sampling, variant training,
// tau/lambda sweeps, evaluation and report emission.
//
// Exit codes: 0 success, 2 config error, 3 runtime error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relab/config.hpp"
#include "relab/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string variant;
    std::optional<int> steps;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file (key=value lines)");
    cmd->add_option("--seed", args.seed, "run seed");
    cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--variant", args.variant,
                    "outcome_grpo|grpo_pr|grpo_rrs|agrl_fg|agrl_static|agrl");
    cmd->add_option("--steps", args.steps, "training steps");
    cmd->add_option("--set", args.overrides, "override, key=value (repeatable)");
}

relab::ExperimentConfig build_config(const CommonArgs& args) {
    relab::ExperimentConfig cfg;
    if (!args.config_path.empty()) {
        cfg = relab::load_config(args.config_path);
    }
    if (args.seed) {
        cfg.seed = *args.seed;
    }
    if (!args.out.empty()) {
        cfg.output_dir = args.out;
    }
    if (!args.variant.empty()) {
        auto v = relab::variant_from_name(args.variant);
        if (!v) {
            throw relab::ConfigError("variant", 0, "unknown variant \"" + args.variant + "\"");
        }
        cfg.variant = *v;
    }
    if (args.steps) {
        cfg.grpo.max_steps = *args.steps;
    }
    for (const std::string& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw relab::ConfigError(kv, 0, "--set expects key=value");
        }
        relab::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

std::vector<double> parse_values(const std::string& csv, const std::vector<double>& fallback) {
    if (csv.empty()) {
        return fallback;
    }
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const std::size_t comma = csv.find(',', start);
        const std::string part =
            csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        out.push_back(std::stod(part));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic relevance RL laboratory"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string input_path;
    std::string probe_checkpoint;
    std::string checkpoint_path;
    std::string report_dir;
    std::string sweep_values;
    int k_rollouts = 16;

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    add_common(gen, args);

    CLI::App* sample = app.add_subcommand("sample-data", "three-stage data sampling pipeline");
    add_common(sample, args);
    sample->add_option("--input", input_path, "input JSONL")->required();
    sample->add_option("--probe", probe_checkpoint, "probe policy checkpoint (default: uniform)");
    sample->add_option("--rollouts", k_rollouts, "offline rollouts per record");

    CLI::App* train_cmd = app.add_subcommand("train", "train the configured variant");
    add_common(train_cmd, args);

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the held-out world");
    add_common(eval_cmd, args);
    eval_cmd->add_option("--checkpoint", checkpoint_path, "policy checkpoint")->required();

    CLI::App* sweep_tau = app.add_subcommand("sweep-tau", "sweep the replay trigger threshold");
    add_common(sweep_tau, args);
    sweep_tau->add_option("--values", sweep_values, "comma-separated thresholds");

    CLI::App* sweep_lambda = app.add_subcommand("sweep-lambda", "sweep the soft-gating factor");
    add_common(sweep_lambda, args);
    sweep_lambda->add_option("--values", sweep_values, "comma-separated factors");

    CLI::App* report = app.add_subcommand("report", "render tables and curve files for a run");
    report->add_option("--run", report_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            relab::run_gen_data(build_config(args));
        } else if (sample->parsed()) {
            relab::run_sample_data(build_config(args), input_path, probe_checkpoint, k_rollouts);
        } else if (train_cmd->parsed()) {
            relab::run_train(build_config(args));
        } else if (eval_cmd->parsed()) {
            const relab::EvalSummary s = relab::run_eval(build_config(args), checkpoint_path);
            std::cout << "macro_f1=" << s.row.macro_f1 << " accuracy=" << s.row.accuracy
                      << " rar=" << s.row.rar << "\n";
        } else if (sweep_tau->parsed()) {
            relab::run_sweep_tau(build_config(args),
                                 parse_values(sweep_values, {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}));
        } else if (sweep_lambda->parsed()) {
            relab::run_sweep_lambda(build_config(args),
                                    parse_values(sweep_values, {0.0, 0.2, 0.5, 0.8, 1.0}));
        } else if (report->parsed()) {
            relab::run_report(report_dir);
        }
    } catch (const relab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
