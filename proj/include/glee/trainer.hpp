#pragma once

// Deterministic finetuning loop: shuffled mini-batches, linear warmup into a
// constant learning rate, global gradient clipping, decoupled-weight-decay
// Adam, early stopping on dev macro F1, and checkpoints that resume to a
// bitwise-identical continuation.

#include <cstdint>
#include <string>
#include <vector>

#include "glee/data.hpp"
#include "glee/metrics.hpp"
#include "glee/model.hpp"
#include "glee/objectives.hpp"

namespace glee {

struct TrainConfig {
    std::size_t batch_size = 32;
    double learning_rate = 1e-5;
    double weight_decay = 0.0;
    double grad_clip_norm = 1.0;
    std::size_t max_epochs = 10;
    std::size_t patience = 2;
    std::size_t warmup_epochs = 1;
    std::uint64_t seed = 0;
    bool freeze_backbone = false;
    LossSpec loss;

    void validate() const;  // positive sizes, patience <= max_epochs
};

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean batch loss
    double dev_macro_f1 = 0.0;
    double dev_accuracy = 0.0;
    double lr_last = 0.0;  // learning rate of the epoch's final step
    std::vector<double> predictor_norms;  // per class id (effective rows for Mlm)
};

// Everything needed to continue training exactly where it stopped.
struct TrainState {
    Model model;
    Model best_model;
    AdamW opt;
    std::size_t next_epoch = 0;
    std::uint64_t global_step = 0;
    double best_dev = -1.0;
    std::size_t best_epoch = 0;
    std::size_t stale = 0;  // epochs since the dev metric last improved
    bool stopped = false;
    std::vector<EpochLog> log;
};

struct TrainResult {
    Model model;  // best-dev parameters
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    double best_dev_macro_f1 = 0.0;
    std::size_t epochs_run = 0;
};

// Pre-split feature-level data for backbone-free training.
struct FeatureSplits {
    FeatureDataset train, dev, test;
    std::size_t num_classes = 0;
};

// Stratified 80/10/10 split of a flat feature dataset (at least one test
// example per represented class), shuffled from the seed.
FeatureSplits split_features(const FeatureDataset& data, std::uint64_t seed);

TrainState train_init(Model model, const TrainConfig& cfg);

// Runs up to `epochs` further epochs (honoring max_epochs and early
// stopping). Throws TrainingError with epoch/batch indices when the loss
// goes non-finite.
void train_epochs(TrainState& st, const Dataset& data, const TrainConfig& cfg,
                  std::size_t epochs);
void train_epochs(TrainState& st, const FeatureSplits& data, const TrainConfig& cfg,
                  std::size_t epochs);

// Full run: init, train to stop, return best parameters.
TrainResult train(Model model, const Dataset& data, const TrainConfig& cfg);
TrainResult train(Model model, const FeatureSplits& data, const TrainConfig& cfg);

// The warmup schedule: learning_rate * min(1, completed_steps/warmup_steps),
// constant after warmup (warmup_steps = 0 means no warmup).
double lr_at_step(const TrainConfig& cfg, std::uint64_t completed_steps,
                  std::uint64_t warmup_steps);

void save_checkpoint(const std::string& path, const TrainState& st);
TrainState load_checkpoint(const std::string& path);

}  // namespace glee
