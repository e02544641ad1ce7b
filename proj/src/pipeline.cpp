#include "c2f/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "c2f/plot.hpp"
#include "c2f/serde.hpp"

namespace fs = std::filesystem;

namespace c2f {
namespace {

nlohmann::json env_to_json(const EnvConfig& e) {
    return {
        {"n_samples", e.n_samples},
        {"hard_fraction", e.hard_fraction},
        {"seed", e.seed},
        {"teacher_noise", e.teacher_noise},
        {"noise_sigma", e.noise_sigma},
        {"av_gain", e.av_gain},
    };
}

EnvConfig env_from_json(const nlohmann::json& j, EnvConfig base) {
    base.n_samples = j.value("n_samples", base.n_samples);
    base.hard_fraction = j.value("hard_fraction", base.hard_fraction);
    base.seed = j.value("seed", base.seed);
    base.teacher_noise = j.value("teacher_noise", base.teacher_noise);
    base.noise_sigma = j.value("noise_sigma", base.noise_sigma);
    base.av_gain = j.value("av_gain", base.av_gain);
    return base;
}

nlohmann::json sft_to_json(const SftConfig& s) {
    return {
        {"learning_rate", s.learning_rate},
        {"epochs", s.epochs},
        {"batch_size", s.batch_size},
        {"seed", s.seed},
    };
}

SftConfig sft_from_json(const nlohmann::json& j, SftConfig base) {
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.epochs = j.value("epochs", base.epochs);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.seed = j.value("seed", base.seed);
    return base;
}

nlohmann::json grpo_to_json(const GrpoConfig& g) {
    return {
        {"group_size", g.group_size},
        {"beta", g.beta},
        {"tau", g.tau},
        {"weights",
         {{"format", g.weights.format},
          {"polarity", g.weights.polarity},
          {"score", g.weights.score}}},
        {"learning_rate", g.learning_rate},
        {"steps", g.steps},
        {"batch_size", g.batch_size},
        {"seed", g.seed},
        {"hint_enabled", g.hint_enabled},
        {"include_hard", g.include_hard},
        {"temperature", g.temperature},
    };
}

GrpoConfig grpo_from_json(const nlohmann::json& j, GrpoConfig base) {
    base.group_size = j.value("group_size", base.group_size);
    base.beta = j.value("beta", base.beta);
    base.tau = j.value("tau", base.tau);
    if (j.contains("weights")) {
        const nlohmann::json& w = j.at("weights");
        base.weights.format = w.value("format", base.weights.format);
        base.weights.polarity = w.value("polarity", base.weights.polarity);
        base.weights.score = w.value("score", base.weights.score);
    }
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.steps = j.value("steps", base.steps);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.seed = j.value("seed", base.seed);
    base.hint_enabled = j.value("hint_enabled", base.hint_enabled);
    base.include_hard = j.value("include_hard", base.include_hard);
    base.temperature = j.value("temperature", base.temperature);
    return base;
}

nlohmann::json pipeline_to_json(const PipelineConfig& cfg) {
    nlohmann::json policy = policy_config_to_json(cfg.policy);
    policy.erase("profile");  // the top-level profile is the single source
    return {
        {"profile", profile_to_json(cfg.profile)},
        {"train_env", env_to_json(cfg.train_env)},
        {"test_env", env_to_json(cfg.test_env)},
        {"shifted_env", env_to_json(cfg.shifted_env)},
        {"policy", policy},
        {"sft", sft_to_json(cfg.sft)},
        {"grpo", grpo_to_json(cfg.grpo)},
    };
}

PipelineConfig pipeline_from_json(const nlohmann::json& j) {
    PipelineConfig cfg = default_pipeline_config();
    try {
        if (j.contains("profile")) cfg.profile = profile_from_json(j.at("profile"));
        if (j.contains("policy")) {
            nlohmann::json pj = j.at("policy");
            pj["profile"] = profile_to_json(cfg.profile);
            cfg.policy = policy_config_from_json(pj);
        } else {
            cfg.policy.profile = cfg.profile;
        }
        cfg.train_env = env_from_json(j.value("train_env", nlohmann::json::object()),
                                      cfg.train_env);
        cfg.test_env =
            env_from_json(j.value("test_env", nlohmann::json::object()), cfg.test_env);
        cfg.shifted_env = env_from_json(
            j.value("shifted_env", nlohmann::json::object()), cfg.shifted_env);
        cfg.sft = sft_from_json(j.value("sft", nlohmann::json::object()), cfg.sft);
        cfg.grpo = grpo_from_json(j.value("grpo", nlohmann::json::object()), cfg.grpo);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("pipeline config: ") + e.what());
    }
    for (EnvConfig* e : {&cfg.train_env, &cfg.test_env, &cfg.shifted_env}) {
        e->profile = cfg.profile;
        e->d = cfg.policy.d;
    }
    cfg.validate();
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out.good()) throw IoError("short write to " + path);
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const PipelineConfig& cfg, const std::string& arm,
                    nlohmann::json artifacts, nlohmann::json extra) {
    nlohmann::json m;
    m["command"] = command;
    if (!arm.empty()) m["arm"] = arm;
    m["config"] = pipeline_to_json(cfg);
    m["artifacts"] = std::move(artifacts);
    for (auto& [k, v] : extra.items()) m[k] = v;
    const std::string ident = command + '\n' + arm + '\n' + m["config"].dump();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(ident)));
    m["run_id"] = buf;
    write_text((dir / "manifest.json").string(), m.dump(2) + "\n");
}

PipelineConfig load_config_for(const std::string& config_path,
                               const std::optional<std::uint64_t>& seed) {
    PipelineConfig cfg = load_pipeline_config(config_path);
    if (seed) apply_seed(cfg, *seed);
    return cfg;
}

std::vector<Sample> load_split(const PipelineConfig& cfg, const std::string& data_dir,
                               const std::string& split) {
    if (split != "train" && split != "test" && split != "shifted")
        throw ConfigError("unknown split " + split);
    const fs::path p = fs::path(data_dir) / (split + ".jsonl");
    return load_samples(p.string(), cfg.profile);
}

}  // namespace

void PipelineConfig::validate() const {
    profile.validate();
    policy.validate();
    sft.validate();
    grpo.validate();
    for (const EnvConfig* e : {&train_env, &test_env, &shifted_env}) {
        e->validate();
        if (e->d != policy.d)
            throw ConfigError("pipeline: environment width differs from policy d");
        if (e->profile.name != profile.name)
            throw ConfigError("pipeline: environment profile differs");
    }
    if (policy.profile.name != profile.name)
        throw ConfigError("pipeline: policy profile differs");
}

PipelineConfig default_pipeline_config() {
    PipelineConfig cfg;
    cfg.profile = DatasetProfile::sims();

    cfg.policy.d = 8;
    cfg.policy.h = 32;
    cfg.policy.n_think = 8;
    cfg.policy.init_seed = 42;
    cfg.policy.profile = cfg.profile;

    cfg.train_env.n_samples = 2000;
    cfg.train_env.d = cfg.policy.d;
    cfg.train_env.hard_fraction = 0.3;
    cfg.train_env.noise_sigma = 0.2;
    cfg.train_env.av_gain = 0.35;
    cfg.train_env.seed = 101;
    cfg.train_env.profile = cfg.profile;

    cfg.test_env = cfg.train_env;
    cfg.test_env.n_samples = 500;
    cfg.test_env.seed = 202;

    // Shift probe: doubled feature noise, more modality-conflict samples.
    cfg.shifted_env = cfg.test_env;
    cfg.shifted_env.seed = 303;
    cfg.shifted_env.hard_fraction = 0.5;
    cfg.shifted_env.noise_sigma = 0.4;

    // Cold start is deliberately short: long enough to lock in the output
    // format and the easy-sample score map, short enough that conflict
    // samples still come out wrong and leave work for the RL stage.
    cfg.sft.learning_rate = 0.1;
    cfg.sft.epochs = 5;
    cfg.sft.batch_size = 32;
    cfg.sft.seed = 7;

    cfg.grpo.steps = 800;
    cfg.grpo.batch_size = 16;
    cfg.grpo.learning_rate = 0.02;
    cfg.grpo.seed = 11;
    return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    if (path.empty()) return default_pipeline_config();
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return pipeline_from_json(j);
}

std::string pipeline_config_to_text(const PipelineConfig& cfg) {
    return pipeline_to_json(cfg).dump(2) + "\n";
}

void apply_seed(PipelineConfig& cfg, std::uint64_t root) {
    cfg.train_env.seed = derive_seed(root, 1);
    cfg.test_env.seed = derive_seed(root, 2);
    cfg.shifted_env.seed = derive_seed(root, 3);
    cfg.policy.init_seed = derive_seed(root, 4);
    cfg.sft.seed = derive_seed(root, 5);
    cfg.grpo.seed = derive_seed(root, 6);
}

void cmd_gen_data(const GenDataArgs& args) {
    const PipelineConfig cfg = load_config_for(args.config_path, args.seed);
    const fs::path out(args.out_dir);
    fs::create_directories(out);

    const std::vector<Sample> train = generate_dataset(cfg.train_env);
    const std::vector<Sample> test = generate_dataset(cfg.test_env);
    const std::vector<Sample> shifted = generate_dataset(cfg.shifted_env);

    const Vocabulary vocab(cfg.profile, cfg.policy.n_think);
    std::mt19937_64 teacher_rng(derive_seed(cfg.train_env.seed, 0xc07));
    std::vector<CoTRecord> candidates;
    candidates.reserve(train.size());
    for (const Sample& s : train)
        candidates.push_back(teacher_generate_cot(s, cfg.train_env, vocab, teacher_rng));
    const std::vector<CoTRecord> kept = filter_and_relabel(candidates, train, vocab);

    save_samples((out / "train.jsonl").string(), train);
    save_samples((out / "test.jsonl").string(), test);
    save_samples((out / "shifted.jsonl").string(), shifted);
    save_cot_records((out / "cot_candidates.jsonl").string(), candidates, vocab);
    save_cot_records((out / "cot_sft.jsonl").string(), kept, vocab);

    write_manifest(out, "gen-data", cfg, "",
                   {{"train", "train.jsonl"},
                    {"test", "test.jsonl"},
                    {"shifted", "shifted.jsonl"},
                    {"cot_candidates", "cot_candidates.jsonl"},
                    {"cot_sft", "cot_sft.jsonl"}},
                   {{"counts",
                     {{"train", train.size()},
                      {"test", test.size()},
                      {"shifted", shifted.size()},
                      {"cot_candidates", candidates.size()},
                      {"cot_sft", kept.size()}}},
                    {"cot_retention",
                     static_cast<double>(kept.size()) /
                         static_cast<double>(candidates.size())}});
}

void cmd_sft(const SftArgs& args) {
    const PipelineConfig cfg = load_config_for(args.config_path, args.seed);
    const fs::path out(args.out_dir);
    fs::create_directories(out);

    const Policy policy(cfg.policy);
    const std::vector<Sample> train = load_split(cfg, args.data_dir, "train");
    const std::vector<CoTRecord> records = load_cot_records(
        (fs::path(args.data_dir) / "cot_sft.jsonl").string(), policy.vocab());

    const SftResult res =
        sft_train(policy, policy.init_params(), train, records, cfg.sft);
    save_checkpoint((out / "sft_checkpoint.json").string(), policy, res.params);

    std::string curve = "epoch,loss\n";
    for (std::size_t e = 0; e < res.epoch_loss.size(); ++e)
        curve += std::to_string(e) + ',' + format_double(res.epoch_loss[e]) + '\n';
    write_text((out / "sft_curve.csv").string(), curve);

    write_manifest(out, "sft", cfg, "",
                   {{"checkpoint", "sft_checkpoint.json"}, {"curve", "sft_curve.csv"}},
                   {{"final_epoch_loss", res.epoch_loss.back()},
                    {"records", records.size()}});
}

void cmd_grpo(const GrpoArgs& args) {
    PipelineConfig cfg = load_config_for(args.config_path, args.seed);
    if (args.arm == "full") {
    } else if (args.arm == "no_hint") {
        cfg.grpo.hint_enabled = false;
    } else if (args.arm == "no_hard") {
        cfg.grpo.include_hard = false;
    } else {
        throw ConfigError("unknown ablation arm " + args.arm);
    }
    const fs::path out(args.out_dir);
    fs::create_directories(out);

    auto [ckpt_cfg, start] = load_checkpoint(args.checkpoint);
    if (ckpt_cfg.profile.name != cfg.profile.name)
        throw ConfigError("checkpoint profile " + ckpt_cfg.profile.name +
                          " does not match config profile " + cfg.profile.name);
    const Policy policy(ckpt_cfg);
    const std::vector<Sample> train = load_split(cfg, args.data_dir, "train");

    const GrpoResult res = grpo_train(policy, start, train, cfg.grpo);
    save_checkpoint((out / "grpo_checkpoint.json").string(), policy, res.params);

    std::string curve =
        "step,mean_reward,mean_format,mean_polarity,mean_score,hard_fraction,"
        "hinted_fraction\n";
    for (const GrpoStepLog& l : res.log) {
        curve += std::to_string(l.step);
        for (double v : {l.mean_reward, l.mean_format, l.mean_polarity, l.mean_score,
                         l.hard_fraction, l.hinted_fraction})
            curve += ',' + std::string(format_double(v));
        curve += '\n';
    }
    write_text((out / "grpo_curve.csv").string(), curve);

    write_manifest(out, "grpo", cfg, args.arm,
                   {{"checkpoint", "grpo_checkpoint.json"}, {"curve", "grpo_curve.csv"}},
                   {{"start_checkpoint", fs::path(args.checkpoint).filename().string()},
                    {"final_mean_reward",
                     res.log.empty() ? 0.0 : res.log.back().mean_reward}});
}

MetricsReport cmd_eval(const EvalArgs& args) {
    const PipelineConfig cfg = load_config_for(args.config_path, args.seed);
    auto [ckpt_cfg, params] = load_checkpoint(args.checkpoint);
    if (ckpt_cfg.profile.name != cfg.profile.name)
        throw ConfigError("checkpoint profile " + ckpt_cfg.profile.name +
                          " does not match config profile " + cfg.profile.name);
    if (args.free_decoding) ckpt_cfg.grammar_masked = false;
    const Policy policy(ckpt_cfg);

    const std::vector<Sample> samples = load_split(cfg, args.data_dir, args.split);
    const std::string label =
        args.label.empty()
            ? fs::path(args.checkpoint).stem().string() + ":" + args.split
            : args.label;
    MetricsReport rep = evaluate(policy, params, samples, args.split);
    std::cout << "label:            " << label << '\n' << report_kv(rep);

    if (!args.out_csv.empty()) {
        const bool fresh = !fs::exists(args.out_csv);
        std::ofstream csv(args.out_csv, std::ios::app);
        if (!csv) throw IoError("cannot write " + args.out_csv);
        if (fresh) csv << report_csv_header() << '\n';
        csv << report_csv_row(label, rep) << '\n';
        if (!csv.good()) throw IoError("short write to " + args.out_csv);
    }
    return rep;
}

void cmd_plot(const PlotArgs& args) {
    write_plot(args.out_path, args.curves, args.column, args.window, args.title);
}

}  // namespace c2f
