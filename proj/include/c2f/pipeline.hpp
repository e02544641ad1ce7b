#pragma once

#include <optional>
#include <string>
#include <vector>

#include "c2f/grpo.hpp"
#include "c2f/metrics.hpp"
#include "c2f/sft.hpp"

namespace c2f {

// One profile drives the environments, the vocabulary and the policy; the
// feature width is taken from the policy config.
struct PipelineConfig {
    DatasetProfile profile = DatasetProfile::sims();
    EnvConfig train_env;
    EnvConfig test_env;
    EnvConfig shifted_env;
    PolicyConfig policy;
    SftConfig sft;
    GrpoConfig grpo;

    void validate() const;
};

PipelineConfig default_pipeline_config();

PipelineConfig load_pipeline_config(const std::string& path);  // "" -> defaults
std::string pipeline_config_to_text(const PipelineConfig& cfg);

// Re-bases every seed in the config on one root so whole runs can be
// replicated or varied with a single number.
void apply_seed(PipelineConfig& cfg, std::uint64_t root);

struct GenDataArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

struct SftArgs {
    std::string config_path;
    std::string data_dir;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

struct GrpoArgs {
    std::string config_path;
    std::string data_dir;
    std::string checkpoint;
    std::string out_dir;
    std::string arm = "full";  // full | no_hint | no_hard
    std::optional<std::uint64_t> seed;
};

struct EvalArgs {
    std::string config_path;
    std::string data_dir;
    std::string checkpoint;
    std::string split = "test";  // train | test | shifted
    std::string label;           // defaults to <checkpoint stem>:<split>
    std::string out_csv;         // append a row when non-empty
    bool free_decoding = false;
    std::optional<std::uint64_t> seed;
};

struct PlotArgs {
    std::vector<std::string> curves;
    std::string out_path;
    std::string column = "mean_reward";
    int window = 20;
    std::string title;
};

void cmd_gen_data(const GenDataArgs& args);
void cmd_sft(const SftArgs& args);
void cmd_grpo(const GrpoArgs& args);
MetricsReport cmd_eval(const EvalArgs& args);  // also prints the report
void cmd_plot(const PlotArgs& args);

}  // namespace c2f
