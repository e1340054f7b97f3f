#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aai/dsp.hpp"
#include "aai/nn/checkpoint.hpp"
#include "aai/nn/layers.hpp"
#include "aai/nn/train.hpp"
#include "aai/types.hpp"

namespace aai {

enum class ArchVariant { ST, MT, ST_AE, MT_AE };

ArchVariant arch_variant_from_string(const std::string& s); // "st", "mt", "st-ae", "mt-ae"
std::string arch_tag(ArchVariant v);                        // "ST", "MT", "ST-AE", "MT-AE"

struct ArchSpec {
    ArchVariant variant = ArchVariant::ST;
    int context_frames = 11;
    int base_feature_dim = 39;
    int hidden = 300; // per trunk layer and per LSTM direction
    int latent_dim = 16;
    int n_phonemes = kNumPhonemes;

    int input_dim() const { return base_feature_dim * context_frames; }
    bool multi_task() const {
        return variant == ArchVariant::MT || variant == ArchVariant::MT_AE;
    }
    bool uses_autoencoder() const {
        return variant == ArchVariant::ST_AE || variant == ArchVariant::MT_AE;
    }
    // Regression head width: 100 contour values, or the 16-dim latent code.
    int target_dim() const { return uses_autoencoder() ? latent_dim : kContourDim; }
    void validate() const;
};

// ---------------------------------------------------------------------------

// 100 -> 64 -> 16 -> 64 -> 100 autoencoder over normalized contour vectors
// (tanh hidden layers, linear latent and output). Frozen after training.
class ContourAutoencoder {
public:
    ContourAutoencoder() = default;
    ContourAutoencoder(int latent_dim, std::uint64_t seed); // fresh weights

    Mat encode(const Mat& contours) const; // N x 100 -> N x latent
    Mat decode(const Mat& latents) const;  // N x latent -> N x 100
    Mat reconstruct(const Mat& contours) const;

    int latent_dim() const { return static_cast<int>(enc2_.W.rows()); }

    std::vector<nn::ParamRef> parameters();
    std::vector<nn::ParamRef> parameters(const std::string& prefix);

    void save(const std::filesystem::path& path, std::uint64_t seed) const;
    static ContourAutoencoder load(const std::filesystem::path& path);
    static ContourAutoencoder from_blobs(const nn::CheckpointData& data,
                                         const std::string& prefix);

private:
    friend struct AeBatchModel;
    nn::DenseParams enc1_, enc2_, dec1_, dec2_;
};

struct AeTrainConfig {
    int epochs = 300;
    int batch_size = 64;
    double lr = 0.001;
    int patience = 5;
    std::uint64_t seed = 1;
};

struct AeTrainResult {
    ContourAutoencoder model;
    std::vector<nn::EpochRecord> history;
    double best_val_mse = 0.0;
};

// MSE reconstruction training with Adam and early stopping on the validation
// reconstruction loss. Inputs are normalized contour rows.
AeTrainResult train_autoencoder(const Mat& train_contours, const Mat& val_contours,
                                const AeTrainConfig& cfg);

// ---------------------------------------------------------------------------

// One aligned sentence as seen by the training loop. `targets` are normalized
// contours for ST/MT, or frozen-encoder latents for the *_AE variants.
struct TrainSentence {
    const Mat* features = nullptr;
    const Mat* targets = nullptr;
    const std::vector<int>* labels = nullptr; // required for MT variants

    long long frames() const { return features ? features->rows() : 0; }
};

struct InversionGrads {
    nn::DenseGrads input, post1, post2, head_target, head_phoneme;
    nn::BiLstmGrads lstm1, lstm2;
};

struct LoadedInversionModel;

// dense(H, tanh) -> BiLSTM(H) -> BiLSTM(H) -> dense(H, tanh) -> dense(H, tanh)
// with a linear regression head and, for MT variants, a linear phoneme head
// feeding log-softmax.
class InversionModel {
public:
    using Grads = InversionGrads;
    using Sample = TrainSentence;

    InversionModel() = default;
    InversionModel(const ArchSpec& spec, std::uint64_t seed);

    const ArchSpec& spec() const { return spec_; }
    int target_dim() const { return spec_.target_dim(); }

    struct Outputs {
        Mat target; // T x target_dim
        Mat logits; // T x 43 for MT variants, else empty
    };
    Outputs forward(const Mat& features) const;

    Grads zero_grads() const;
    void zero_grads_into(Grads& g) const;
    std::vector<nn::ParamRef> parameters();
    std::vector<nn::ParamRef> grad_refs(Grads& g) const;

    nn::LossTerms forward_backward(const Sample& s, Grads& g, double mse_scale,
                                   double ce_scale) const;
    nn::LossTerms eval_terms(const Sample& s) const;

    void save(const std::filesystem::path& path, double alpha, std::uint64_t seed,
              const ContourAutoencoder* ae = nullptr) const;

    static LoadedInversionModel load(const std::filesystem::path& path);

private:
    ArchSpec spec_;
    nn::DenseParams input_, post1_, post2_, head_target_, head_phoneme_;
    nn::BiLstmParams lstm1_, lstm2_;
};

struct LoadedInversionModel {
    InversionModel model;
    nn::CheckpointHeader header;
    std::optional<ContourAutoencoder> autoencoder; // embedded for *_AE variants
};

// ---------------------------------------------------------------------------

struct InversionResult {
    std::vector<TongueContour> contours; // denormalized, pixel coordinates
    Mat posteriors;                      // T x 43 for MT variants, else empty
};

// Runs the model on a normalized feature sequence and maps the output back to
// pixel-space contours. *_AE variants decode the latent head through `ae`
// (required); MT variants also return per-frame phoneme posteriors.
InversionResult invert(const InversionModel& model, const Mat& features,
                       const dsp::FeatureStats& contour_stats,
                       const ContourAutoencoder* ae = nullptr,
                       double t0_s = 0.0, double hop_s = 0.01);

} // namespace aai
