#include <cstdio>
#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "c2f/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"coarse-to-fine sentiment RL pipeline"};
    app.require_subcommand(1);

    c2f::GenDataArgs gen;
    CLI::App* gen_cmd = app.add_subcommand(
        "gen-data", "generate train/test/shifted splits and teacher CoT data");
    gen_cmd->add_option("--config", gen.config_path, "pipeline config JSON");
    gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
    gen_cmd->add_option("--seed", gen.seed, "re-base every config seed on this root");

    c2f::SftArgs sft;
    CLI::App* sft_cmd =
        app.add_subcommand("sft", "cold-start training on the filtered CoT data");
    sft_cmd->add_option("--config", sft.config_path, "pipeline config JSON");
    sft_cmd->add_option("--data", sft.data_dir, "gen-data output directory")->required();
    sft_cmd->add_option("--out", sft.out_dir, "output directory")->required();
    sft_cmd->add_option("--seed", sft.seed, "re-base every config seed on this root");

    c2f::GrpoArgs grpo;
    CLI::App* grpo_cmd =
        app.add_subcommand("grpo", "group-relative RL from an SFT checkpoint");
    grpo_cmd->add_option("--config", grpo.config_path, "pipeline config JSON");
    grpo_cmd->add_option("--data", grpo.data_dir, "gen-data output directory")
        ->required();
    grpo_cmd->add_option("--checkpoint", grpo.checkpoint, "starting checkpoint")
        ->required();
    grpo_cmd->add_option("--out", grpo.out_dir, "output directory")->required();
    grpo_cmd->add_option("--arm", grpo.arm, "full | no_hint | no_hard");
    grpo_cmd->add_option("--seed", grpo.seed, "re-base every config seed on this root");

    c2f::EvalArgs eval;
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "greedy-decode a checkpoint on one split");
    eval_cmd->add_option("--config", eval.config_path, "pipeline config JSON");
    eval_cmd->add_option("--data", eval.data_dir, "gen-data output directory")
        ->required();
    eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint to evaluate")
        ->required();
    eval_cmd->add_option("--split", eval.split, "train | test | shifted");
    eval_cmd->add_option("--label", eval.label, "row label for the CSV");
    eval_cmd->add_option("--csv", eval.out_csv, "append the report to this CSV");
    eval_cmd->add_flag("--free-decoding", eval.free_decoding,
                       "drop the grammar mask during decoding");
    eval_cmd->add_option("--seed", eval.seed, "re-base every config seed on this root");

    c2f::PlotArgs plot;
    CLI::App* plot_cmd = app.add_subcommand("plot", "render curve CSVs to an SVG");
    plot_cmd->add_option("--curve", plot.curves, "curve CSV (repeatable)")->required();
    plot_cmd->add_option("--out", plot.out_path, "output SVG path")->required();
    plot_cmd->add_option("--column", plot.column, "CSV column to plot");
    plot_cmd->add_option("--window", plot.window, "trailing moving-average window");
    plot_cmd->add_option("--title", plot.title, "chart title");

    std::string print_config_path;
    std::optional<std::uint64_t> print_seed;
    CLI::App* print_cmd =
        app.add_subcommand("print-config", "dump the resolved pipeline config");
    print_cmd->add_option("--config", print_config_path, "pipeline config JSON");
    print_cmd->add_option("--seed", print_seed,
                          "re-base every config seed on this root");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_cmd->parsed()) {
            c2f::cmd_gen_data(gen);
        } else if (sft_cmd->parsed()) {
            c2f::cmd_sft(sft);
        } else if (grpo_cmd->parsed()) {
            c2f::cmd_grpo(grpo);
        } else if (eval_cmd->parsed()) {
            c2f::cmd_eval(eval);
        } else if (plot_cmd->parsed()) {
            c2f::cmd_plot(plot);
        } else if (print_cmd->parsed()) {
            c2f::PipelineConfig cfg = c2f::load_pipeline_config(print_config_path);
            if (print_seed) c2f::apply_seed(cfg, *print_seed);
            std::cout << c2f::pipeline_config_to_text(cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
