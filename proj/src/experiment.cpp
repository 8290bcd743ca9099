#include "relab/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "relab/pipeline.hpp"
#include "relab/rng.hpp"

namespace relab {

namespace fs = std::filesystem;

namespace {

using json = nlohmann::ordered_json;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Scoped run directory: lock file + incomplete-until-finished manifest.
class RunDir {
public:
    RunDir(const std::string& dir, const ExperimentConfig& cfg) : dir_(dir) {
        fs::create_directories(dir_);
        lock_path_ = dir_ + "/.lock";
        if (fs::exists(lock_path_)) {
            throw std::runtime_error(dir_ + " is locked by another run (delete " + lock_path_ +
                                     " if that run is gone)");
        }
        std::ofstream lock(lock_path_);
        lock << "locked\n";
        write_manifest(cfg, "incomplete");
    }

    void finish(const ExperimentConfig& cfg) {
        write_manifest(cfg, "complete");
        fs::remove(lock_path_);
        finished_ = true;
    }

    ~RunDir() {
        if (!finished_) {
            fs::remove(lock_path_);
        }
    }

    const std::string& dir() const { return dir_; }

private:
    void write_manifest(const ExperimentConfig& cfg, const std::string& status) {
        json j;
        j["artifact"] = "relab-run-v1";
        j["status"] = status;
        j["seed"] = cfg.seed;
        j["variant"] = std::string(variant_name(cfg.variant));
        j["config_hash"] = config_hash(cfg);
        j["config"] = serialize_config(cfg);
        std::ofstream out(dir_ + "/manifest.json", std::ios::binary);
        out << j.dump(1, '\t') << "\n";
    }

    std::string dir_;
    std::string lock_path_;
    bool finished_ = false;
};

json metrics_row_json(const MetricsRow& row) {
    json j;
    j["step"] = row.step;
    j["f1_irrelevant"] = row.per_class_f1[0];
    j["f1_mismatch"] = row.per_class_f1[1];
    j["f1_related"] = row.per_class_f1[2];
    j["f1_excellent"] = row.per_class_f1[3];
    j["macro_f1"] = row.macro_f1;
    j["good_f1"] = row.good_f1;
    j["accuracy"] = row.accuracy;
    j["rar"] = row.rar;
    j["kept_ratio"] = row.kept_ratio;
    j["reward_delta"] = row.reward_delta;
    j["entropy"] = row.entropy;
    j["kl"] = row.kl;
    j["mean_reward_unguided"] = row.mean_reward_unguided;
    j["mean_reward_replayed"] = row.mean_reward_replayed;
    return j;
}

}  // namespace

std::vector<Instance> make_eval_world(const ExperimentConfig& cfg) {
    WorldConfig world = cfg.world;
    world.seed = mix_seed(cfg.world.seed, 0xE7A1ULL);
    world.n_instances = cfg.eval_n;
    return generate_world(world);
}

std::vector<Instance> load_train_set(const ExperimentConfig& cfg) {
    if (cfg.data_path.empty()) {
        return generate_world(cfg.world);
    }
    SamplingReport report;
    const std::vector<DatasetRecord> records = ingest(cfg.data_path, report);
    std::vector<Instance> out;
    out.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        out.push_back(instance_from_record(records[i], static_cast<int>(i)));
    }
    return out;
}

MetricsRow evaluate_policy(const PolicyParams& params, const std::vector<Instance>& eval_set) {
    ConfusionMatrix cm;
    std::vector<Trajectory> decoded;
    decoded.reserve(eval_set.size());
    for (const Instance& inst : eval_set) {
        const std::vector<double> obs = make_observation(inst, nullptr);
        Trajectory traj = sample_greedy(params, obs);
        if (traj.format_valid) {
            cm.add(inst.gold_relevance, traj.initial_label());
        } else {
            cm.add_malformed(inst.gold_relevance);
        }
        decoded.push_back(std::move(traj));
    }
    const ClassificationMetrics m = classification_metrics(cm);
    MetricsRow row;
    row.per_class_f1 = m.per_class_f1;
    row.macro_f1 = m.macro_f1;
    row.good_f1 = m.good_f1;
    row.accuracy = m.accuracy;
    row.rar = rule_adherence_rate(decoded);
    return row;
}

void run_gen_data(const ExperimentConfig& cfg) {
    RunDir run(cfg.output_dir, cfg);
    const std::vector<Instance> instances = generate_world(cfg.world);
    std::vector<DatasetRecord> records;
    records.reserve(instances.size());
    for (const Instance& inst : instances) {
        records.push_back(record_from_instance(inst));
    }
    write_jsonl(records, run.dir() + "/data.jsonl");
    run.finish(cfg);
}

void run_sample_data(const ExperimentConfig& cfg, const std::string& input_path,
                     const std::string& probe_checkpoint, int k_rollouts) {
    RunDir run(cfg.output_dir, cfg);
    SamplingReport report;
    std::vector<DatasetRecord> records = ingest(input_path, report);

    PolicyParams probe = probe_checkpoint.empty()
                             ? PolicyParams(kFeatureDim + kGuidanceDim)
                             : load_checkpoint(probe_checkpoint);
    records = difficulty_sample(records, probe, k_rollouts, 0.0, 1.0, cfg.sampler,
                                mix_seed(cfg.seed, 0x5A3Du), report);
    records = undersample_balance(records, cfg.world.tier_targets,
                                  mix_seed(cfg.seed, 0xBA1Du), report);

    write_jsonl(records, run.dir() + "/data.jsonl");
    std::ofstream rep(run.dir() + "/sampling_report.json", std::ios::binary);
    rep << report.to_json_string() << "\n";
    run.finish(cfg);
}

void run_train(const ExperimentConfig& cfg) {
    RunDir run(cfg.output_dir, cfg);
    TrainOptions opt = resolve_train_options(cfg);
    opt.output_dir = run.dir();
    const std::vector<Instance> dataset = load_train_set(cfg);
    train(dataset, opt);
    run.finish(cfg);
}

EvalSummary run_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path) {
    std::string stamped_hash;
    const PolicyParams params = load_checkpoint(checkpoint_path, &stamped_hash);
    if (stamped_hash != config_hash(cfg)) {
        throw std::runtime_error("checkpoint " + checkpoint_path +
                                 " was produced by a different config (hash " + stamped_hash +
                                 " != " + config_hash(cfg) + ")");
    }
    const std::vector<Instance> eval_set = make_eval_world(cfg);
    EvalSummary summary;
    summary.checkpoint = checkpoint_path;
    summary.row = evaluate_policy(params, eval_set);
    summary.row.step = cfg.grpo.max_steps;

    fs::create_directories(cfg.output_dir);
    std::ofstream out(cfg.output_dir + "/eval.json", std::ios::binary);
    json j = metrics_row_json(summary.row);
    j["checkpoint"] = checkpoint_path;
    out << j.dump(1, '\t') << "\n";
    return summary;
}

namespace {

struct SweepPoint {
    double value = 0.0;
    MetricsRow row;
};

void write_sweep_table(const std::string& path, const std::string& key,
                       const std::vector<SweepPoint>& points) {
    std::ofstream out(path, std::ios::binary);
    out << key << ",macro_f1,accuracy,rar\n";
    for (const SweepPoint& p : points) {
        out << fmt_double(p.value) << ',' << fmt_double(p.row.macro_f1) << ','
            << fmt_double(p.row.accuracy) << ',' << fmt_double(p.row.rar) << '\n';
    }
}

std::string value_dir_name(const std::string& prefix, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s_%g", prefix.c_str(), v);
    return buf;
}

}  // namespace

void run_sweep_tau(const ExperimentConfig& cfg, const std::vector<double>& taus) {
    RunDir run(cfg.output_dir, cfg);
    std::vector<SweepPoint> points;
    for (double tau : taus) {
        ExperimentConfig sub = cfg;
        sub.output_dir = run.dir() + "/" + value_dir_name("tau", tau);
        sub.grpo.replay_tau = tau;
        sub.replay.tau_trigger = tau;
        sub.seed = mix_seed(cfg.seed, 0x7A0ULL,
                            static_cast<std::uint64_t>(std::llround(tau * 1e6)));
        run_train(sub);
        ExperimentConfig eval_cfg = sub;
        const EvalSummary s = run_eval(eval_cfg, sub.output_dir + "/ckpt_final.json");
        points.push_back({tau, s.row});
    }
    write_sweep_table(run.dir() + "/table_tau.csv", "tau", points);
    run.finish(cfg);
}

void run_sweep_lambda(const ExperimentConfig& cfg, const std::vector<double>& lambdas) {
    RunDir run(cfg.output_dir, cfg);
    std::vector<SweepPoint> points;
    for (double lambda : lambdas) {
        ExperimentConfig sub = cfg;
        sub.output_dir = run.dir() + "/" + value_dir_name("lambda", lambda);
        sub.reward.gating_lambda = lambda;
        sub.seed = mix_seed(cfg.seed, 0x1A3ULL,
                            static_cast<std::uint64_t>(std::llround(lambda * 1e6)));
        run_train(sub);
        ExperimentConfig eval_cfg = sub;
        const EvalSummary s = run_eval(eval_cfg, sub.output_dir + "/ckpt_final.json");
        points.push_back({lambda, s.row});
    }
    write_sweep_table(run.dir() + "/table_lambda.csv", "lambda", points);
    run.finish(cfg);
}

void run_report(const std::string& run_dir) {
    std::ifstream in(run_dir + "/trace.csv", std::ios::binary);
    if (!in) {
        throw std::runtime_error("no trace.csv under " + run_dir);
    }
    std::string header;
    std::getline(in, header);
    std::vector<std::string> columns;
    {
        std::stringstream hs(header);
        std::string col;
        while (std::getline(hs, col, ',')) {
            columns.push_back(col);
        }
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) {
        throw std::runtime_error("empty trace under " + run_dir);
    }

    // one curve file per numeric metric, suitable for external plotting
    const std::string curve_dir = run_dir + "/curves";
    fs::create_directories(curve_dir);
    for (std::size_t c = 2; c < columns.size(); ++c) {
        std::ofstream out(curve_dir + "/" + columns[c] + ".csv", std::ios::binary);
        out << "step," << columns[c] << '\n';
        for (const auto& r : rows) {
            out << r[0] << ',' << r[c] << '\n';
        }
    }

    // text summary: first/last row of every column
    std::ofstream summary(run_dir + "/report.txt", std::ios::binary);
    summary << "steps: " << rows.size() << "\n";
    summary << "variant: " << rows.front()[1] << "\n\n";
    summary << "metric            first           last\n";
    for (std::size_t c = 2; c < columns.size(); ++c) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%-16s %-15.6g %-15.6g\n", columns[c].c_str(),
                      std::stod(rows.front()[c]), std::stod(rows.back()[c]));
        summary << buf;
    }
}

}  // namespace relab
