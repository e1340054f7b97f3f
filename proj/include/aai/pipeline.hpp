#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aai/corpus.hpp"
#include "aai/eval.hpp"
#include "aai/models.hpp"
#include "aai/synth.hpp"

namespace aai::pipeline {

// Everything a subcommand needs; validated before any work. Each run writes
// a run_config.json echo into its output directory.
struct RunConfig {
    std::string subcommand;

    std::filesystem::path corpus_dir;  // prep, synth
    std::filesystem::path dataset_dir; // train, eval, plot
    std::filesystem::path out_dir;
    std::filesystem::path checkpoint;    // eval, plot
    std::filesystem::path ae_checkpoint; // optional pre-trained autoencoder

    std::string arch = "st";
    int context = -1; // -1: prep defaults to 11, train/eval take the dataset's
    double alpha = 1.0;
    int epochs = 300;
    int batch = 10;
    double lr = 0.001;
    int patience = 5;
    std::uint64_t seed = 1;
    double mm_per_pixel = 1.6131;
    bool train_ae = false;
    int hidden = 300;

    std::string split = "test";
    std::string sentence;          // plot target
    std::vector<int> plot_frames;  // empty: four evenly spaced frames
    bool point_metric = false;     // eval: mean point distance instead of RMSE

    int synth_acquisitions = 30;
    int synth_sentences = 3;
    double synth_noise = 0.01;

    int threads = 0; // 0: resolve from AAI_THREADS / hardware
    bool verbose = false;
};

// AAI_THREADS caps the worker count; otherwise hardware concurrency.
int resolve_threads(int requested = 0);

void write_config_echo(const RunConfig& cfg);

void cmd_synth(const RunConfig& cfg);

corpus::PrepSummary cmd_prep(const RunConfig& cfg);

struct TrainOutcome {
    std::filesystem::path checkpoint_path;
    int epochs_run = 0;
    int best_epoch = 0;
    double best_val_loss = 0.0;
    bool stopped_early = false;
    bool diverged = false;
};
TrainOutcome cmd_train(const RunConfig& cfg);

eval::EvalReport cmd_eval(const RunConfig& cfg);

void cmd_plot(const RunConfig& cfg);

} // namespace aai::pipeline
