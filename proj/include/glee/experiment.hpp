#pragma once

// Config-driven experiment orchestration: the variant grammar, the synthetic
// lab context (vocabulary, verbalizer, corpus, backbone), the variant x seed
// matrix runner, and the subcommands behind the CLI. Every command rebuilds
// its data and backbone deterministically from the config, so commands
// compose without hidden file-order dependencies; artifacts carry a config
// hash and commands refuse to mix outputs from different hashes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glee/config.hpp"
#include "glee/data.hpp"
#include "glee/heads.hpp"
#include "glee/objectives.hpp"
#include "glee/report.hpp"
#include "glee/trainer.hpp"

namespace glee {

// A named cell recipe: base head scheme plus modifiers.
//
//   bases:     cls-t  cls-r  mlm  mlm-ed
//   modifiers: +ln +ptln +prompt   (cls bases only)
//              +focal +ce          (loss override)
//              +etanorm            (post-hoc norm calibration)
//
// "cls-r+prompt" is the hybrid head: a pooled-style classifier reading the
// [MASK] representation of prompt-rendered inputs.
struct VariantSpec {
    std::string name;
    HeadSpec head;
    std::optional<LossKind> loss_override;
    bool etanorm = false;
};

// ConfigError naming the offending token on an unknown base/modifier,
// duplicated modifiers, or a modifier the base cannot carry.
VariantSpec parse_variant(const std::string& name);

struct ExperimentConfig {
    // data
    std::string source = "generate";  // or a path to a GLEE feature file
    GenerateConfig gen;
    double threshold = 0.8;
    std::size_t max_len = 16;       // rendered-sequence length
    std::size_t fewshot_k = 32;
    // vocabulary / prompt
    std::size_t vocab_words = 240;  // non-special entries
    std::size_t tokens_per_class = 2;
    std::string template_pattern = "{x} [MASK]";
    // backbone
    PretrainConfig backbone;
    bool pretrain_backbone = true;
    // finetuning
    TrainConfig train;
    double calibrate_tau = 1.0;
    std::vector<double> calibrate_grid = {0.0, 0.5, 1.0};
    // matrix
    std::vector<VariantSpec> variants;
    std::vector<std::uint64_t> seeds;
    std::string output = "out";

    // Parses and validates; unknown keys, malformed values, empty seeds, and
    // missing feature files are ConfigErrors.
    static ExperimentConfig from_config(const Config& cfg);
};

// Hash over the experiment-defining keys (data/vocab/verbalizer/prompt/
// backbone/train/loss/variants/seeds), ignoring output paths and calibration
// grids, so post-hoc commands can verify they are reading artifacts of the
// same experiment.
std::string experiment_hash_hex(const Config& cfg);

// Everything the matrix shares: deterministic function of the config.
struct LabContext {
    Vocabulary vocab;
    Verbalizer verbalizer;
    Template tmpl{"{x} [MASK]"};
    bool feature_mode = false;
    Dataset raw;        // token mode: generator output
    Dataset rendered;   // token mode: raw passed through the template
    FeatureSplits feats;  // feature mode
    BackboneParams backbone;
    PretrainResult pretrain;  // loss curve etc. (token mode with pretraining)
    HeadTailSplit split;      // from the full train distribution
    std::size_t num_classes = 0;
};

LabContext build_context(const ExperimentConfig& ec);

struct CellResult {
    ResultRow row;
    NormProfile profile;  // post-calibration for +etanorm variants
    std::vector<EpochLog> log;
    bool done = false;
};

// Trains and evaluates one variant x seed cell on a private clone of the
// context's backbone; writes a checkpoint when checkpoint_path is nonempty.
// fewshot_k > 0 subsamples the train/dev splits first.
CellResult run_cell(const LabContext& ctx, const ExperimentConfig& ec,
                    const VariantSpec& variant, std::uint64_t seed,
                    const std::string& checkpoint_path, std::size_t fewshot_k = 0);

// Worker-pool width: GLEE_THREADS if set, else hardware concurrency, clamped
// to [1, cells].
std::size_t worker_count(std::size_t cells);

// Subcommands. Each validates the config, writes its artifacts under the
// output directory, and throws on failure; a mid-matrix failure still writes
// the completed rows and a manifest marked incomplete before rethrowing.
void cmd_pretrain(const Config& cfg);
void cmd_generate(const Config& cfg);
void cmd_train(const Config& cfg);
void cmd_calibrate(const Config& cfg);
void cmd_analyze(const Config& cfg);
void cmd_fewshot(const Config& cfg);

}  // namespace glee
