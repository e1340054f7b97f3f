#include "aai/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

namespace aai::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

int resolve_threads(int requested) {
    int n = requested;
    if (n <= 0) {
        n = static_cast<int>(std::thread::hardware_concurrency());
        if (n <= 0) n = 1;
    }
    if (const char* env = std::getenv("AAI_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1) n = std::min(n, cap);
        } catch (const std::exception&) {
            throw ConfigError("AAI_THREADS is not a number: " + std::string(env));
        }
    }
    return std::clamp(n, 1, 64);
}

void write_config_echo(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    json j;
    j["subcommand"] = cfg.subcommand;
    if (!cfg.corpus_dir.empty()) j["corpus_dir"] = cfg.corpus_dir.string();
    if (!cfg.dataset_dir.empty()) j["dataset"] = cfg.dataset_dir.string();
    if (!cfg.checkpoint.empty()) j["checkpoint"] = cfg.checkpoint.string();
    if (!cfg.ae_checkpoint.empty()) j["ae_checkpoint"] = cfg.ae_checkpoint.string();
    j["out"] = cfg.out_dir.string();
    j["arch"] = cfg.arch;
    j["context"] = cfg.context;
    j["alpha"] = cfg.alpha;
    j["epochs"] = cfg.epochs;
    j["batch"] = cfg.batch;
    j["lr"] = cfg.lr;
    j["patience"] = cfg.patience;
    j["seed"] = cfg.seed;
    j["mm_per_pixel"] = cfg.mm_per_pixel;
    j["hidden"] = cfg.hidden;
    j["train_ae"] = cfg.train_ae;
    j["split"] = cfg.split;
    if (!cfg.sentence.empty()) j["sentence"] = cfg.sentence;
    j["point_metric"] = cfg.point_metric;
    if (cfg.subcommand == "synth") {
        j["synth_acquisitions"] = cfg.synth_acquisitions;
        j["synth_sentences"] = cfg.synth_sentences;
        j["synth_noise"] = cfg.synth_noise;
    }
    std::ofstream f(cfg.out_dir / "run_config.json");
    if (!f) throw DataError("cannot create " + (cfg.out_dir / "run_config.json").string());
    f << j.dump(2) << "\n";
}

void cmd_synth(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigError("synth: --out is required");
    synth::SynthConfig sc;
    sc.n_acquisitions = cfg.synth_acquisitions;
    sc.sentences_per_acquisition = cfg.synth_sentences;
    sc.noise_std = cfg.synth_noise;
    sc.seed = cfg.seed;
    synth::generate(sc, cfg.out_dir);
    write_config_echo(cfg);
    std::cout << "synth: wrote " << sc.n_acquisitions << " acquisitions to "
              << cfg.out_dir.string() << "\n";
}

corpus::PrepSummary cmd_prep(const RunConfig& cfg) {
    if (cfg.corpus_dir.empty()) throw ConfigError("prep: --corpus-dir is required");
    if (cfg.out_dir.empty()) throw ConfigError("prep: --out is required");
    corpus::PrepConfig pc;
    pc.context_frames = cfg.context < 0 ? 11 : cfg.context;
    pc.seed = cfg.seed;
    const auto summary = corpus::prepare_dataset(cfg.corpus_dir, cfg.out_dir, pc);
    write_config_echo(cfg);
    std::cout << "prep: " << summary.acquisitions << " acquisitions, " << summary.sentences
              << " sentences, " << summary.frames_kept << " frames kept ("
              << summary.frames_dropped_inter_silence << " inter-silence, "
              << summary.frames_dropped_outside_span << " outside contour span dropped)\n"
              << "prep: split " << summary.train_acquisitions << "/"
              << summary.validation_acquisitions << "/" << summary.test_acquisitions
              << " train/validation/test\n";
    return summary;
}

namespace {

struct SampleSet {
    std::vector<InversionModel::Sample> train, val;
    std::vector<Mat> latent_targets; // owns *_AE targets
};

SampleSet build_samples(const corpus::Dataset& ds, const ArchSpec& spec,
                        const ContourAutoencoder* ae) {
    SampleSet set;
    if (spec.uses_autoencoder()) {
        set.latent_targets.reserve(ds.sentences.size());
        for (const auto& s : ds.sentences)
            set.latent_targets.push_back(ae->encode(s.contours));
    }
    for (std::size_t i = 0; i < ds.sentences.size(); ++i) {
        const auto& s = ds.sentences[i];
        InversionModel::Sample sample;
        sample.features = &s.features;
        sample.targets = spec.uses_autoencoder() ? &set.latent_targets[i] : &s.contours;
        sample.labels = &s.phonemes;
        if (s.split == "train")
            set.train.push_back(sample);
        else if (s.split == "validation")
            set.val.push_back(sample);
    }
    return set;
}

Mat gather_contours(const corpus::Dataset& ds, const std::string& split) {
    long long rows = 0;
    for (const auto& s : ds.sentences)
        if (s.split == split) rows += s.contours.rows();
    if (rows == 0) throw DataError("no contours in split '" + split + "'");
    Mat out(rows, kContourDim);
    Eigen::Index r = 0;
    for (const auto& s : ds.sentences)
        if (s.split == split) {
            out.middleRows(r, s.contours.rows()) = s.contours;
            r += s.contours.rows();
        }
    return out;
}

void write_history_csv(const fs::path& path, const std::vector<nn::EpochRecord>& history) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot create " + path.string());
    f << "epoch,train_loss,val_loss\n";
    char buf[96];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g\n", r.epoch, r.train_loss,
                      r.val_loss);
        f << buf;
    }
}

} // namespace

TrainOutcome cmd_train(const RunConfig& cfg) {
    if (cfg.dataset_dir.empty()) throw ConfigError("train: --dataset is required");
    if (cfg.out_dir.empty()) throw ConfigError("train: --out is required");
    const corpus::Dataset ds = corpus::load_dataset(cfg.dataset_dir);
    if (cfg.context >= 0 && cfg.context != ds.context_frames)
        throw ConfigError("train: --context " + std::to_string(cfg.context) +
                          " does not match the dataset (prepared with W = " +
                          std::to_string(ds.context_frames) + ")");

    ArchSpec spec;
    spec.variant = arch_variant_from_string(cfg.arch);
    spec.context_frames = ds.context_frames;
    spec.hidden = cfg.hidden;
    spec.validate();

    fs::create_directories(cfg.out_dir);
    const int threads = resolve_threads(cfg.threads);

    // *_AE variants need the frozen autoencoder before targets exist.
    std::optional<ContourAutoencoder> ae;
    if (spec.uses_autoencoder()) {
        if (cfg.train_ae) {
            const Mat train_contours = gather_contours(ds, "train");
            const Mat val_contours = gather_contours(ds, "validation");
            AeTrainConfig ac;
            ac.seed = cfg.seed;
            ac.lr = cfg.lr;
            ac.patience = cfg.patience;
            auto ar = train_autoencoder(train_contours, val_contours, ac);
            if (cfg.verbose)
                std::cerr << "autoencoder: best validation MSE " << ar.best_val_mse
                          << " after " << ar.history.size() << " epochs\n";
            ae = std::move(ar.model);
            ae->save(cfg.out_dir / "ae.aaic", cfg.seed);
        } else {
            const fs::path path = cfg.ae_checkpoint.empty() ? cfg.out_dir / "ae.aaic"
                                                            : cfg.ae_checkpoint;
            if (!fs::exists(path))
                throw ConfigError("train: " + cfg.arch +
                                  " needs an autoencoder; pass --train-ae or "
                                  "--ae-checkpoint (looked at " +
                                  path.string() + ")");
            ae = ContourAutoencoder::load(path);
        }
    }

    const SampleSet samples = build_samples(ds, spec, ae ? &*ae : nullptr);

    InversionModel model(spec, cfg.seed);
    nn::TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch;
    tc.lr = cfg.lr;
    tc.patience = cfg.patience;
    tc.alpha = spec.multi_task() ? cfg.alpha : 0.0;
    tc.seed = cfg.seed;
    tc.threads = threads;

    const fs::path ckpt_path = cfg.out_dir / "checkpoint.aaic";
    TrainOutcome outcome;
    outcome.checkpoint_path = ckpt_path;

    nn::TrainResult<InversionModel> partial;
    auto on_epoch = [&](const nn::EpochRecord& r) {
        if (cfg.verbose)
            std::cerr << "epoch " << r.epoch << ": train " << r.train_loss << " val "
                      << r.val_loss << "\n";
    };
    try {
        auto result = nn::train_loop(model, samples.train, samples.val, tc, on_epoch,
                                     &partial);
        result.best.save(ckpt_path, tc.alpha, cfg.seed, ae ? &*ae : nullptr);
        write_history_csv(cfg.out_dir / "history.csv", result.history);
        outcome.epochs_run = static_cast<int>(result.history.size());
        outcome.best_epoch = result.best_epoch;
        outcome.best_val_loss = result.history.empty()
                                    ? 0.0
                                    : result.history[static_cast<std::size_t>(
                                                         result.best_epoch - 1)]
                                          .val_loss;
        outcome.stopped_early = result.stopped_early;
    } catch (const NumericError&) {
        // Divergence: keep the last good checkpoint, then report the failure.
        if (partial.best_epoch > 0) {
            partial.best.save(ckpt_path, tc.alpha, cfg.seed, ae ? &*ae : nullptr);
            write_history_csv(cfg.out_dir / "history.csv", partial.history);
        }
        write_config_echo(cfg);
        throw;
    }
    write_config_echo(cfg);
    std::cout << "train: " << outcome.epochs_run << " epochs, best epoch "
              << outcome.best_epoch << " (val loss " << outcome.best_val_loss << ")"
              << (outcome.stopped_early ? ", stopped early" : "") << "\n"
              << "train: checkpoint at " << ckpt_path.string() << "\n";
    return outcome;
}

eval::EvalReport cmd_eval(const RunConfig& cfg) {
    if (cfg.dataset_dir.empty()) throw ConfigError("eval: --dataset is required");
    if (cfg.checkpoint.empty()) throw ConfigError("eval: --checkpoint is required");
    if (cfg.out_dir.empty()) throw ConfigError("eval: --out is required");
    if (cfg.split != "train" && cfg.split != "validation" && cfg.split != "test")
        throw ConfigError("eval: --split must be train, validation or test");

    const corpus::Dataset ds = corpus::load_dataset(cfg.dataset_dir);
    auto loaded = InversionModel::load(cfg.checkpoint);
    const auto& spec = loaded.model.spec();
    if (spec.context_frames != ds.context_frames)
        throw ConfigError("eval: checkpoint context W = " +
                          std::to_string(spec.context_frames) +
                          " (input dim " + std::to_string(spec.input_dim()) +
                          ") does not match dataset W = " +
                          std::to_string(ds.context_frames) + " (dim " +
                          std::to_string(ds.feature_dim) + ")");

    const PixelScale scale{cfg.mm_per_pixel};
    const ContourAutoencoder* ae =
        loaded.autoencoder ? &*loaded.autoencoder : nullptr;

    eval::EvalReport report;
    report.split = cfg.split;
    report.metric = cfg.point_metric ? "point_distance" : "frame_rmse";
    report.mm_per_pixel = cfg.mm_per_pixel;

    long long ce_frames = 0;
    double ce_sum = 0.0;
    long long hits = 0;

    const auto sentences = ds.split_sentences(cfg.split);
    if (sentences.empty()) throw DataError("eval: split '" + cfg.split + "' is empty");
    for (const auto* s : sentences) {
        const auto& stats = ds.contour_stats_for(s->acquisition_id);
        const auto result = invert(loaded.model, s->features, stats, ae, s->t0_s);
        const Mat truth_px = dsp::denormalize(s->contours, stats);
        for (Eigen::Index r = 0; r < s->contours.rows(); ++r) {
            const TongueContour truth =
                unflatten_contour(truth_px.row(r).transpose(), s->t0_s + 0.01 * r);
            const auto& pred = result.contours[static_cast<std::size_t>(r)];
            eval::FrameRecord rec;
            rec.sentence_id = s->id;
            rec.frame = static_cast<int>(r);
            rec.t_s = truth.timestamp_s;
            rec.rmse_mm = cfg.point_metric ? eval::frame_point_distance(pred, truth, scale)
                                           : eval::frame_rmse(pred, truth, scale);
            if (spec.multi_task()) {
                rec.label = s->phonemes[static_cast<std::size_t>(r)];
                Eigen::Index best = 0;
                result.posteriors.row(r).maxCoeff(&best);
                rec.predicted = static_cast<int>(best);
                if (rec.predicted == rec.label) ++hits;
                ce_sum -= std::log(std::max(result.posteriors(r, rec.label), 1e-300));
                ++ce_frames;
            }
            report.frames.push_back(std::move(rec));
        }
        ++report.sentences;
    }

    std::vector<double> per_frame;
    per_frame.reserve(report.frames.size());
    for (const auto& r : report.frames) per_frame.push_back(r.rmse_mm);
    report.summary = eval::summarize(per_frame);
    if (spec.multi_task() && ce_frames > 0) {
        report.accuracy_pct = 100.0 * static_cast<double>(hits) /
                              static_cast<double>(ce_frames);
        report.mean_cross_entropy = ce_sum / static_cast<double>(ce_frames);
    }

    fs::create_directories(cfg.out_dir);
    eval::write_report_json(cfg.out_dir / "report.json", report);
    eval::write_frames_csv(cfg.out_dir / "frames.csv", report);
    write_config_echo(cfg);
    std::cout << "eval[" << cfg.split << "]: " << report.frames.size() << " frames, "
              << report.metric << " mean " << report.summary.mean << " +/- "
              << report.summary.std << " mm, median " << report.summary.median << " mm";
    if (report.accuracy_pct) std::cout << ", accuracy " << *report.accuracy_pct << "%";
    std::cout << "\n";
    return report;
}

void cmd_plot(const RunConfig& cfg) {
    if (cfg.dataset_dir.empty()) throw ConfigError("plot: --dataset is required");
    if (cfg.checkpoint.empty()) throw ConfigError("plot: --checkpoint is required");
    if (cfg.out_dir.empty()) throw ConfigError("plot: --out is required");
    if (cfg.sentence.empty()) throw ConfigError("plot: --sentence is required");

    const corpus::Dataset ds = corpus::load_dataset(cfg.dataset_dir);
    const corpus::PreparedSentence* target = nullptr;
    for (const auto& s : ds.sentences)
        if (s.id == cfg.sentence) target = &s;
    if (!target) throw DataError("plot: unknown sentence id '" + cfg.sentence + "'");

    auto loaded = InversionModel::load(cfg.checkpoint);
    if (loaded.model.spec().context_frames != ds.context_frames)
        throw ConfigError("plot: checkpoint context does not match dataset");
    const ContourAutoencoder* ae =
        loaded.autoencoder ? &*loaded.autoencoder : nullptr;

    const auto& stats = ds.contour_stats_for(target->acquisition_id);
    const auto result = invert(loaded.model, target->features, stats, ae, target->t0_s);
    const Mat truth_px = dsp::denormalize(target->contours, stats);
    std::vector<TongueContour> truth;
    for (Eigen::Index r = 0; r < truth_px.rows(); ++r)
        truth.push_back(unflatten_contour(truth_px.row(r).transpose(),
                                          target->t0_s + 0.01 * r));

    std::vector<int> frames = cfg.plot_frames;
    if (frames.empty()) {
        const int n = static_cast<int>(truth.size());
        const int count = std::min(4, n);
        for (int i = 0; i < count; ++i)
            frames.push_back(count == 1 ? 0 : i * (n - 1) / (count - 1));
    }

    const PixelScale scale{cfg.mm_per_pixel};
    fs::create_directories(cfg.out_dir);
    eval::write_overlay_svg(cfg.out_dir / "overlay.svg", truth, result.contours, frames,
                            scale);
    eval::write_overlay_csv(cfg.out_dir / "points.csv", truth, result.contours, frames);
    write_config_echo(cfg);
    std::cout << "plot: wrote overlay for sentence " << cfg.sentence << " ("
              << frames.size() << " frames) to " << cfg.out_dir.string() << "\n";
}

} // namespace aai::pipeline
