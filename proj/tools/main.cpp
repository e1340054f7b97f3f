#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "aai/pipeline.hpp"

namespace {

// Exit codes: 0 success, 1 usage, 2 data, 3 numeric failure.
int run(const aai::pipeline::RunConfig& cfg) {
    try {
        if (cfg.subcommand == "synth")
            aai::pipeline::cmd_synth(cfg);
        else if (cfg.subcommand == "prep")
            aai::pipeline::cmd_prep(cfg);
        else if (cfg.subcommand == "train")
            aai::pipeline::cmd_train(cfg);
        else if (cfg.subcommand == "eval")
            aai::pipeline::cmd_eval(cfg);
        else if (cfg.subcommand == "plot")
            aai::pipeline::cmd_plot(cfg);
        else
            return 1;
        return 0;
    } catch (const aai::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const aai::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const aai::Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"aai: acoustic-to-articulatory inversion of tongue contours"};
    app.require_subcommand(1);

    aai::pipeline::RunConfig cfg;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "Root random seed");
        sub->add_option("--out", cfg.out_dir, "Output directory")->required();
    };

    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    add_common(synth);
    synth->add_option("--acquisitions", cfg.synth_acquisitions, "Number of acquisitions");
    synth->add_option("--sentences", cfg.synth_sentences, "Sentences per acquisition");
    synth->add_option("--noise-std", cfg.synth_noise, "Additive audio noise (std)");

    auto* prep = app.add_subcommand("prep", "Prepare a corpus into a training dataset");
    add_common(prep);
    prep->add_option("--corpus-dir", cfg.corpus_dir, "Corpus root directory")->required();
    prep->add_option("--context", cfg.context, "Context window W (odd)")
        ->check(CLI::IsMember({1, 3, 5, 7, 11}));

    auto* train = app.add_subcommand("train", "Train an inversion model");
    add_common(train);
    train->add_option("--dataset", cfg.dataset_dir, "Prepared dataset directory")
        ->required();
    train->add_option("--arch", cfg.arch, "Architecture: st, mt, st-ae, mt-ae")
        ->check(CLI::IsMember({"st", "mt", "st-ae", "mt-ae"}));
    train->add_option("--context", cfg.context,
                      "Context window W; must match the dataset")
        ->check(CLI::IsMember({1, 3, 5, 7, 11}));
    train->add_option("--alpha", cfg.alpha, "Cross-entropy weight (multi-task)");
    train->add_option("--epochs", cfg.epochs, "Epoch cap");
    train->add_option("--batch", cfg.batch, "Sentences per batch");
    train->add_option("--lr", cfg.lr, "Adam learning rate");
    train->add_option("--patience", cfg.patience, "Early-stopping patience");
    train->add_option("--hidden", cfg.hidden, "Trunk width / LSTM units per direction");
    train->add_flag("--train-ae", cfg.train_ae,
                    "Train the contour autoencoder before the model");
    train->add_option("--ae-checkpoint", cfg.ae_checkpoint,
                      "Pre-trained autoencoder checkpoint");
    train->add_flag("--verbose", cfg.verbose, "Per-epoch progress on stderr");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
    add_common(eval);
    eval->add_option("--dataset", cfg.dataset_dir, "Prepared dataset directory")
        ->required();
    eval->add_option("--checkpoint", cfg.checkpoint, "Model checkpoint")->required();
    eval->add_option("--split", cfg.split, "train, validation or test");
    eval->add_option("--mm-per-pixel", cfg.mm_per_pixel, "Pixel size in mm");
    eval->add_flag("--point-metric", cfg.point_metric,
                   "Mean point distance instead of coordinate RMSE");

    auto* plot = app.add_subcommand("plot", "Overlay predicted and true contours");
    add_common(plot);
    plot->add_option("--dataset", cfg.dataset_dir, "Prepared dataset directory")
        ->required();
    plot->add_option("--checkpoint", cfg.checkpoint, "Model checkpoint")->required();
    plot->add_option("--sentence", cfg.sentence, "Sentence id")->required();
    plot->add_option("--frames", cfg.plot_frames, "Frame indices to draw");
    plot->add_option("--mm-per-pixel", cfg.mm_per_pixel, "Pixel size in mm");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    cfg.subcommand = app.get_subcommands().front()->get_name();
    return run(cfg);
}
