#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <thread>
#include <vector>

#include "aai/nn/adam.hpp"
#include "aai/tensor.hpp"

namespace aai::nn {

// Stops when the validation loss has not improved for `patience` consecutive
// evaluations after the best one.
class EarlyStopper {
public:
    explicit EarlyStopper(int patience) : patience_(patience) {
        if (patience < 1) throw ConfigError("EarlyStopper: patience must be >= 1");
    }

    // Returns true when this observation improves on the best so far.
    bool observe(double val_loss) {
        if (val_loss < best_) {
            best_ = val_loss;
            since_best_ = 0;
            return true;
        }
        ++since_best_;
        return false;
    }

    bool should_stop() const { return since_best_ >= patience_; }
    double best() const { return best_; }
    int epochs_since_improvement() const { return since_best_; }

private:
    int patience_;
    double best_ = std::numeric_limits<double>::infinity();
    int since_best_ = 0;
};

struct TrainConfig {
    int epochs = 300;
    int batch_size = 10;
    double lr = 0.001;
    int patience = 5;
    double alpha = 1.0;
    double clip_norm = 5.0;
    std::uint64_t seed = 1;
    int threads = 1;
    bool verbose = false;
};

struct EpochRecord {
    int epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

// Raw per-sentence sums; the batch loss is assembled from these.
struct LossTerms {
    double sse = 0.0;     // sum of squared target residuals
    double ce_sum = 0.0;  // sum over frames of -log p[label]
    long long frames = 0;
};

template <class Model>
struct TrainResult {
    Model best;               // parameters at the best validation epoch
    std::vector<EpochRecord> history;
    int best_epoch = 0;       // 1-based
    bool stopped_early = false;
};

// Runs fn(i) for i in [0, n) on `threads` workers with a static stride
// assignment. Results land at their index, so the outcome does not depend on
// scheduling or on the worker count.
template <class R>
std::vector<R> parallel_indexed(int n, int threads, const std::function<R(int)>& fn) {
    std::vector<R> results(static_cast<std::size_t>(n));
    const int k = std::max(1, std::min(threads, n));
    if (k == 1) {
        for (int i = 0; i < n; ++i) results[static_cast<std::size_t>(i)] = fn(i);
        return results;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(k));
    for (int w = 0; w < k; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < n; i += k) results[static_cast<std::size_t>(i)] = fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

// Sentence-sequence training driver.
//
// Model requirements:
//   using Grads = ...;                                (copyable)
//   using Sample = ...;                               (has long long frames())
//   Grads zero_grads() const;
//   void zero_grads_into(Grads&) const;
//   std::vector<ParamRef> parameters();              (trainable weights)
//   std::vector<ParamRef> grad_refs(Grads&) const;
//   int target_dim() const;
//   LossTerms forward_backward(const Sample&, Grads&, double mse_scale,
//                              double ce_scale) const;
//   LossTerms eval_terms(const Sample&) const;
//
// Batches are groups of batch_size sentences (seeded shuffle per epoch);
// the per-sentence gradients are summed in sentence order, so the result is
// independent of the worker count. Sentences keep their own lengths; the
// batch loss weights every real frame equally, exactly as a padded batch
// with masked loss would.
// When `partial` is given it is kept up to date epoch by epoch, so the
// caller still holds the last good state if training aborts on divergence.
template <class Model>
TrainResult<Model> train_loop(Model& model,
                              const std::vector<typename Model::Sample>& train,
                              const std::vector<typename Model::Sample>& val,
                              const TrainConfig& cfg,
                              const std::function<void(const EpochRecord&)>& on_epoch = {},
                              TrainResult<Model>* partial = nullptr);

// --- implementation ---------------------------------------------------------

template <class Model>
TrainResult<Model> train_loop(Model& model,
                              const std::vector<typename Model::Sample>& train,
                              const std::vector<typename Model::Sample>& val,
                              const TrainConfig& cfg,
                              const std::function<void(const EpochRecord&)>& on_epoch,
                              TrainResult<Model>* partial) {
    if (train.empty() || val.empty())
        throw DataError("train_loop: empty training or validation split");
    if (cfg.batch_size < 1) throw ConfigError("train_loop: batch size must be >= 1");
    if (cfg.epochs < 1) throw ConfigError("train_loop: epochs must be >= 1");

    const auto params = model.parameters();
    Adam adam(params, AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
    EarlyStopper stopper(cfg.patience);

    const int n_workers = std::max(1, cfg.threads);
    typename Model::Grads batch_grads = model.zero_grads();
    const auto batch_refs = model.grad_refs(batch_grads);
    std::vector<typename Model::Grads> worker_grads(
        static_cast<std::size_t>(std::min<int>(n_workers, cfg.batch_size)),
        model.zero_grads());

    const double dim = static_cast<double>(model.target_dim());
    Rng shuffle_rng(mix_seed(cfg.seed, 0xba7c4));

    auto validation_loss = [&] {
        const std::function<LossTerms(int)> fn = [&](int i) {
            return model.eval_terms(val[static_cast<std::size_t>(i)]);
        };
        const auto terms = parallel_indexed<LossTerms>(static_cast<int>(val.size()),
                                                       n_workers, fn);
        LossTerms total;
        for (const auto& t : terms) {
            total.sse += t.sse;
            total.ce_sum += t.ce_sum;
            total.frames += t.frames;
        }
        const double n = static_cast<double>(total.frames);
        return total.sse / (n * dim) + cfg.alpha * total.ce_sum / n;
    };

    TrainResult<Model> local;
    TrainResult<Model>& result = partial ? *partial : local;
    result.best = model;

    std::vector<int> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        deterministic_shuffle(order, shuffle_rng);

        double epoch_loss_weighted = 0.0;
        long long epoch_frames = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const int nb = static_cast<int>(
                std::min<std::size_t>(cfg.batch_size, order.size() - start));
            long long batch_frames = 0;
            for (int i = 0; i < nb; ++i)
                batch_frames += train[static_cast<std::size_t>(
                                          order[start + static_cast<std::size_t>(i)])]
                                    .frames();
            const double inv_n = 1.0 / static_cast<double>(batch_frames);
            const double mse_scale = inv_n / dim;
            const double ce_scale = cfg.alpha * inv_n;

            // Waves of one sentence per worker buffer; summed in sentence
            // order afterwards so the reduction order is fixed.
            zero_all(batch_refs);
            LossTerms batch_terms;
            const int n_buf = static_cast<int>(worker_grads.size());
            for (int wave = 0; wave < nb; wave += n_buf) {
                const int in_wave = std::min(n_buf, nb - wave);
                const std::function<LossTerms(int)> fn = [&](int i) {
                    auto& grads = worker_grads[static_cast<std::size_t>(i)];
                    model.zero_grads_into(grads);
                    const auto& sample = train[static_cast<std::size_t>(
                        order[start + static_cast<std::size_t>(wave + i)])];
                    return model.forward_backward(sample, grads, mse_scale, ce_scale);
                };
                const auto terms = parallel_indexed<LossTerms>(in_wave, n_workers, fn);
                for (int i = 0; i < in_wave; ++i) {
                    auto refs = model.grad_refs(worker_grads[static_cast<std::size_t>(i)]);
                    add_all(batch_refs, refs);
                    batch_terms.sse += terms[static_cast<std::size_t>(i)].sse;
                    batch_terms.ce_sum += terms[static_cast<std::size_t>(i)].ce_sum;
                    batch_terms.frames += terms[static_cast<std::size_t>(i)].frames;
                }
            }

            const double batch_loss = batch_terms.sse * mse_scale +
                                      batch_terms.ce_sum * ce_scale;
            if (!std::isfinite(batch_loss))
                throw NumericError("train_loop: loss diverged (epoch " +
                                   std::to_string(epoch) + ")");
            clip_global_norm(batch_refs, cfg.clip_norm);
            adam.step(params, batch_refs);

            epoch_loss_weighted += batch_loss * static_cast<double>(batch_frames);
            epoch_frames += batch_frames;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss_weighted / static_cast<double>(epoch_frames);
        rec.val_loss = validation_loss();
        if (!std::isfinite(rec.val_loss))
            throw NumericError("train_loop: validation loss diverged (epoch " +
                               std::to_string(epoch) + ")");
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (stopper.observe(rec.val_loss)) {
            result.best = model;
            result.best_epoch = epoch;
        }
        if (stopper.should_stop()) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

} // namespace aai::nn
