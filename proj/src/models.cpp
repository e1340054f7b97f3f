#include "aai/models.hpp"

#include <algorithm>

#include "aai/nn/loss.hpp"

namespace aai {

ArchVariant arch_variant_from_string(const std::string& s) {
    if (s == "st") return ArchVariant::ST;
    if (s == "mt") return ArchVariant::MT;
    if (s == "st-ae") return ArchVariant::ST_AE;
    if (s == "mt-ae") return ArchVariant::MT_AE;
    throw ConfigError("unknown architecture variant '" + s +
                      "' (expected st, mt, st-ae or mt-ae)");
}

std::string arch_tag(ArchVariant v) {
    switch (v) {
        case ArchVariant::ST: return "ST";
        case ArchVariant::MT: return "MT";
        case ArchVariant::ST_AE: return "ST-AE";
        case ArchVariant::MT_AE: return "MT-AE";
    }
    throw ConfigError("unknown architecture variant");
}

namespace {

ArchVariant variant_from_tag(const std::string& tag) {
    if (tag == "ST") return ArchVariant::ST;
    if (tag == "MT") return ArchVariant::MT;
    if (tag == "ST-AE") return ArchVariant::ST_AE;
    if (tag == "MT-AE") return ArchVariant::MT_AE;
    throw DataError("checkpoint: unknown architecture tag '" + tag + "'");
}

void load_dense(nn::DenseParams& p, const nn::CheckpointData& data,
                const std::string& name, nn::Activation act) {
    p.W = data.blob(name + ".W");
    const Mat& b = data.blob(name + ".b");
    if (b.cols() != 1) throw DataError("checkpoint: bias '" + name + ".b' is not a vector");
    p.b = b.col(0);
    p.act = act;
    if (p.W.rows() != p.b.size())
        throw DataError("checkpoint: inconsistent shapes for '" + name + "'");
}

void load_lstm(nn::BiLstmParams& p, const nn::CheckpointData& data,
               const std::string& name) {
    const std::pair<nn::LstmDirParams*, const char*> dirs[] = {{&p.fwd, ".fwd"},
                                                               {&p.bwd, ".bwd"}};
    for (const auto& [dir, suffix] : dirs) {
        dir->W = data.blob(name + suffix + ".W");
        dir->U = data.blob(name + suffix + ".U");
        const Mat& b = data.blob(name + suffix + ".b");
        if (b.cols() != 1)
            throw DataError("checkpoint: bias '" + name + suffix + ".b' is not a vector");
        dir->b = b.col(0);
    }
    p.hidden = static_cast<int>(p.fwd.U.cols());
    p.input = static_cast<int>(p.fwd.W.cols());
    for (const auto& [dir, suffix] : dirs)
        if (dir->W.rows() != 4 * p.hidden || dir->U.rows() != 4 * p.hidden ||
            dir->b.size() != 4 * p.hidden || dir->U.cols() != p.hidden ||
            dir->W.cols() != p.input)
            throw DataError("checkpoint: inconsistent LSTM shapes for '" + name + "'");
}

void append_dense(std::vector<nn::ParamRef>& refs, const std::string& name,
                  nn::DenseParams& p) {
    refs.push_back({name + ".W", p.W.data(), p.W.rows(), p.W.cols()});
    refs.push_back({name + ".b", p.b.data(), p.b.size(), 1});
}

void append_dense(std::vector<nn::ParamRef>& refs, const std::string& name,
                  nn::DenseGrads& g) {
    refs.push_back({name + ".W", g.W.data(), g.W.rows(), g.W.cols()});
    refs.push_back({name + ".b", g.b.data(), g.b.size(), 1});
}

template <class LstmLike>
void append_lstm(std::vector<nn::ParamRef>& refs, const std::string& name, LstmLike& p) {
    for (auto [dir, suffix] : {std::pair{&p.fwd, ".fwd"}, std::pair{&p.bwd, ".bwd"}}) {
        refs.push_back({name + suffix + ".W", dir->W.data(), dir->W.rows(), dir->W.cols()});
        refs.push_back({name + suffix + ".U", dir->U.data(), dir->U.rows(), dir->U.cols()});
        refs.push_back({name + suffix + ".b", dir->b.data(), dir->b.size(), 1});
    }
}

} // namespace

void ArchSpec::validate() const {
    if (context_frames < 1 || context_frames % 2 == 0)
        throw ConfigError("ArchSpec: context_frames must be odd and >= 1");
    if (hidden < 1) throw ConfigError("ArchSpec: hidden must be >= 1");
    if (latent_dim < 1) throw ConfigError("ArchSpec: latent_dim must be >= 1");
    if (n_phonemes < 2) throw ConfigError("ArchSpec: n_phonemes must be >= 2");
}

// --- ContourAutoencoder ------------------------------------------------------

ContourAutoencoder::ContourAutoencoder(int latent_dim, std::uint64_t seed) {
    if (latent_dim < 1) throw ConfigError("ContourAutoencoder: bad latent dim");
    Rng rng(mix_seed(seed, 0xaec0de));
    enc1_.init(64, kContourDim, nn::Activation::Tanh, rng);
    enc2_.init(latent_dim, 64, nn::Activation::Identity, rng);
    dec1_.init(64, latent_dim, nn::Activation::Tanh, rng);
    dec2_.init(kContourDim, 64, nn::Activation::Identity, rng);
}

Mat ContourAutoencoder::encode(const Mat& contours) const {
    return nn::dense_forward(enc2_, nn::dense_forward(enc1_, contours));
}

Mat ContourAutoencoder::decode(const Mat& latents) const {
    return nn::dense_forward(dec2_, nn::dense_forward(dec1_, latents));
}

Mat ContourAutoencoder::reconstruct(const Mat& contours) const {
    return decode(encode(contours));
}

std::vector<nn::ParamRef> ContourAutoencoder::parameters() { return parameters(""); }

std::vector<nn::ParamRef> ContourAutoencoder::parameters(const std::string& prefix) {
    std::vector<nn::ParamRef> refs;
    append_dense(refs, prefix + "enc1", enc1_);
    append_dense(refs, prefix + "enc2", enc2_);
    append_dense(refs, prefix + "dec1", dec1_);
    append_dense(refs, prefix + "dec2", dec2_);
    return refs;
}

void ContourAutoencoder::save(const std::filesystem::path& path, std::uint64_t seed) const {
    nn::CheckpointHeader h;
    h.arch_tag = "AE16";
    h.context_frames = 0;
    h.alpha = 0.0;
    h.seed = seed;
    h.hidden = static_cast<std::uint32_t>(latent_dim());
    auto& self = const_cast<ContourAutoencoder&>(*this);
    nn::save_checkpoint(path, h, self.parameters());
}

ContourAutoencoder ContourAutoencoder::load(const std::filesystem::path& path) {
    const auto data = nn::load_checkpoint(path);
    if (data.header.arch_tag != "AE16")
        throw DataError(path.string() + ": not an autoencoder checkpoint (tag '" +
                        data.header.arch_tag + "')");
    return from_blobs(data, "");
}

ContourAutoencoder ContourAutoencoder::from_blobs(const nn::CheckpointData& data,
                                                  const std::string& prefix) {
    ContourAutoencoder ae;
    load_dense(ae.enc1_, data, prefix + "enc1", nn::Activation::Tanh);
    load_dense(ae.enc2_, data, prefix + "enc2", nn::Activation::Identity);
    load_dense(ae.dec1_, data, prefix + "dec1", nn::Activation::Tanh);
    load_dense(ae.dec2_, data, prefix + "dec2", nn::Activation::Identity);
    if (ae.enc1_.W.cols() != kContourDim || ae.dec2_.W.rows() != kContourDim)
        throw DataError("autoencoder checkpoint: wrong contour dimension");
    return ae;
}

// Adapter so the shared train_loop drives the autoencoder: each "sentence"
// is a slice of contour rows. Owns the model so best-epoch snapshots copy
// the actual weights.
struct AeBatchModel {
    struct Sample {
        const Mat* rows = nullptr;
        long long frames() const { return rows ? rows->rows() : 0; }
    };
    struct Grads {
        nn::DenseGrads enc1, enc2, dec1, dec2;
    };

    ContourAutoencoder ae;

    Grads zero_grads() const {
        Grads g;
        g.enc1 = nn::DenseGrads::zeros_like(ae.enc1_);
        g.enc2 = nn::DenseGrads::zeros_like(ae.enc2_);
        g.dec1 = nn::DenseGrads::zeros_like(ae.dec1_);
        g.dec2 = nn::DenseGrads::zeros_like(ae.dec2_);
        return g;
    }
    void zero_grads_into(Grads& g) const {
        g.enc1.W.setZero(); g.enc1.b.setZero();
        g.enc2.W.setZero(); g.enc2.b.setZero();
        g.dec1.W.setZero(); g.dec1.b.setZero();
        g.dec2.W.setZero(); g.dec2.b.setZero();
    }
    std::vector<nn::ParamRef> parameters() { return ae.parameters(); }
    std::vector<nn::ParamRef> grad_refs(Grads& g) const {
        std::vector<nn::ParamRef> refs;
        append_dense(refs, "enc1", g.enc1);
        append_dense(refs, "enc2", g.enc2);
        append_dense(refs, "dec1", g.dec1);
        append_dense(refs, "dec2", g.dec2);
        return refs;
    }
    int target_dim() const { return kContourDim; }

    nn::LossTerms forward_backward(const Sample& s, Grads& g, double mse_scale,
                                   double /*ce_scale*/) const {
        nn::DenseCache c1, c2, c3, c4;
        const Mat& x = *s.rows;
        const Mat z1 = nn::dense_forward(ae.enc1_, x, &c1);
        const Mat z2 = nn::dense_forward(ae.enc2_, z1, &c2);
        const Mat z3 = nn::dense_forward(ae.dec1_, z2, &c3);
        const Mat y = nn::dense_forward(ae.dec2_, z3, &c4);

        nn::LossTerms terms;
        terms.sse = (y - x).squaredNorm();
        terms.frames = x.rows();

        Mat dy = 2.0 * mse_scale * (y - x);
        Mat d3 = nn::dense_backward(ae.dec2_, c4, dy, g.dec2);
        Mat d2 = nn::dense_backward(ae.dec1_, c3, d3, g.dec1);
        Mat d1 = nn::dense_backward(ae.enc2_, c2, d2, g.enc2);
        nn::dense_backward(ae.enc1_, c1, d1, g.enc1);
        return terms;
    }

    nn::LossTerms eval_terms(const Sample& s) const {
        nn::LossTerms terms;
        terms.sse = (ae.reconstruct(*s.rows) - *s.rows).squaredNorm();
        terms.frames = s.rows->rows();
        return terms;
    }
};

AeTrainResult train_autoencoder(const Mat& train_contours, const Mat& val_contours,
                                const AeTrainConfig& cfg) {
    if (train_contours.rows() < 100)
        throw DataError("train_autoencoder: need at least 100 training contours, got " +
                        std::to_string(train_contours.rows()));
    if (val_contours.rows() < 1)
        throw DataError("train_autoencoder: empty validation set");
    if (train_contours.cols() != kContourDim || val_contours.cols() != kContourDim)
        throw ShapeError("train_autoencoder: contours must have 100 values");

    // Chunk the rows so a "sentence" is a block of contours.
    const Eigen::Index chunk = cfg.batch_size;
    std::vector<Mat> train_chunks, val_chunks;
    for (Eigen::Index r = 0; r < train_contours.rows(); r += chunk)
        train_chunks.push_back(
            train_contours.middleRows(r, std::min(chunk, train_contours.rows() - r)));
    for (Eigen::Index r = 0; r < val_contours.rows(); r += chunk)
        val_chunks.push_back(
            val_contours.middleRows(r, std::min(chunk, val_contours.rows() - r)));

    std::vector<AeBatchModel::Sample> train_samples, val_samples;
    for (const auto& m : train_chunks) train_samples.push_back({&m});
    for (const auto& m : val_chunks) val_samples.push_back({&m});

    AeBatchModel driver{ContourAutoencoder(16, cfg.seed)};
    nn::TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.batch_size = 4; // 4 chunks of rows per optimizer step
    tc.lr = cfg.lr;
    tc.patience = cfg.patience;
    tc.alpha = 0.0;
    tc.seed = cfg.seed;
    auto tr = nn::train_loop(driver, train_samples, val_samples, tc);

    AeTrainResult result;
    result.model = std::move(tr.best.ae);
    result.history = std::move(tr.history);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : result.history) best = std::min(best, r.val_loss);
    result.best_val_mse = best;
    return result;
}

// --- InversionModel ----------------------------------------------------------

InversionModel::InversionModel(const ArchSpec& spec, std::uint64_t seed) : spec_(spec) {
    spec_.validate();
    Rng rng(mix_seed(seed, 0x10de1));
    const int h = spec_.hidden;
    input_.init(h, spec_.input_dim(), nn::Activation::Tanh, rng);
    lstm1_.init(h, h, rng);
    lstm2_.init(h, 2 * h, rng);
    post1_.init(h, 2 * h, nn::Activation::Tanh, rng);
    post2_.init(h, h, nn::Activation::Tanh, rng);
    head_target_.init(spec_.target_dim(), h, nn::Activation::Identity, rng);
    if (spec_.multi_task())
        head_phoneme_.init(spec_.n_phonemes, h, nn::Activation::Identity, rng);
}

InversionModel::Outputs InversionModel::forward(const Mat& features) const {
    if (features.cols() != spec_.input_dim())
        throw ShapeError("InversionModel: feature dim " + std::to_string(features.cols()) +
                         " does not match input dim " + std::to_string(spec_.input_dim()) +
                         " (context " + std::to_string(spec_.context_frames) + ")");
    if (features.rows() < 1) throw DataError("InversionModel: empty sequence");
    const Mat t0 = nn::dense_forward(input_, features);
    const Mat t1 = nn::bilstm_forward(lstm1_, t0);
    const Mat t2 = nn::bilstm_forward(lstm2_, t1);
    const Mat t3 = nn::dense_forward(post1_, t2);
    const Mat t4 = nn::dense_forward(post2_, t3);
    Outputs out;
    out.target = nn::dense_forward(head_target_, t4);
    if (spec_.multi_task()) out.logits = nn::dense_forward(head_phoneme_, t4);
    return out;
}

InversionModel::Grads InversionModel::zero_grads() const {
    Grads g;
    g.input = nn::DenseGrads::zeros_like(input_);
    g.post1 = nn::DenseGrads::zeros_like(post1_);
    g.post2 = nn::DenseGrads::zeros_like(post2_);
    g.head_target = nn::DenseGrads::zeros_like(head_target_);
    if (spec_.multi_task()) g.head_phoneme = nn::DenseGrads::zeros_like(head_phoneme_);
    g.lstm1 = nn::BiLstmGrads::zeros_like(lstm1_);
    g.lstm2 = nn::BiLstmGrads::zeros_like(lstm2_);
    return g;
}

void InversionModel::zero_grads_into(Grads& g) const {
    for (nn::DenseGrads* d : {&g.input, &g.post1, &g.post2, &g.head_target}) {
        d->W.setZero();
        d->b.setZero();
    }
    if (spec_.multi_task()) {
        g.head_phoneme.W.setZero();
        g.head_phoneme.b.setZero();
    }
    for (nn::BiLstmGrads* l : {&g.lstm1, &g.lstm2})
        for (nn::LstmDirGrads* d : {&l->fwd, &l->bwd}) {
            d->W.setZero();
            d->U.setZero();
            d->b.setZero();
        }
}

std::vector<nn::ParamRef> InversionModel::parameters() {
    std::vector<nn::ParamRef> refs;
    append_dense(refs, "input", input_);
    append_lstm(refs, "lstm1", lstm1_);
    append_lstm(refs, "lstm2", lstm2_);
    append_dense(refs, "post1", post1_);
    append_dense(refs, "post2", post2_);
    append_dense(refs, "head_target", head_target_);
    if (spec_.multi_task()) append_dense(refs, "head_phoneme", head_phoneme_);
    return refs;
}

std::vector<nn::ParamRef> InversionModel::grad_refs(Grads& g) const {
    std::vector<nn::ParamRef> refs;
    append_dense(refs, "input", g.input);
    append_lstm(refs, "lstm1", g.lstm1);
    append_lstm(refs, "lstm2", g.lstm2);
    append_dense(refs, "post1", g.post1);
    append_dense(refs, "post2", g.post2);
    append_dense(refs, "head_target", g.head_target);
    if (spec_.multi_task()) append_dense(refs, "head_phoneme", g.head_phoneme);
    return refs;
}

nn::LossTerms InversionModel::forward_backward(const Sample& s, Grads& g,
                                               double mse_scale, double ce_scale) const {
    if (!s.features || !s.targets)
        throw DataError("forward_backward: sample without features or targets");
    if (s.targets->cols() != spec_.target_dim())
        throw ShapeError("forward_backward: target dim mismatch");
    if (spec_.multi_task() && !s.labels)
        throw DataError("forward_backward: multi-task model needs phoneme labels");

    nn::DenseCache c_in, c_p1, c_p2, c_ht, c_hp;
    nn::BiLstmCache c_l1, c_l2;
    const Mat& x = *s.features;
    const Mat t0 = nn::dense_forward(input_, x, &c_in);
    const Mat t1 = nn::bilstm_forward(lstm1_, t0, &c_l1);
    const Mat t2 = nn::bilstm_forward(lstm2_, t1, &c_l2);
    const Mat t3 = nn::dense_forward(post1_, t2, &c_p1);
    const Mat t4 = nn::dense_forward(post2_, t3, &c_p2);
    const Mat yhat = nn::dense_forward(head_target_, t4, &c_ht);

    nn::LossTerms terms;
    terms.frames = x.rows();
    terms.sse = (yhat - *s.targets).squaredNorm();

    Mat d_target = 2.0 * mse_scale * (yhat - *s.targets);
    Mat d_trunk = nn::dense_backward(head_target_, c_ht, d_target, g.head_target);

    if (spec_.multi_task()) {
        const Mat logits = nn::dense_forward(head_phoneme_, t4, &c_hp);
        const Mat logp = nn::log_softmax_rows(logits);
        Mat d_logits = logp.array().exp();
        for (Eigen::Index r = 0; r < logits.rows(); ++r) {
            const int label = (*s.labels)[static_cast<std::size_t>(r)];
            if (label < 0 || label >= spec_.n_phonemes)
                throw DataError("forward_backward: phoneme label out of range");
            terms.ce_sum -= logp(r, label);
            d_logits(r, label) -= 1.0;
        }
        d_logits *= ce_scale;
        d_trunk += nn::dense_backward(head_phoneme_, c_hp, d_logits, g.head_phoneme);
    }

    Mat d3 = nn::dense_backward(post2_, c_p2, d_trunk, g.post2);
    Mat d2 = nn::dense_backward(post1_, c_p1, d3, g.post1);
    Mat d1 = nn::bilstm_backward(lstm2_, c_l2, d2, g.lstm2);
    Mat d0 = nn::bilstm_backward(lstm1_, c_l1, d1, g.lstm1);
    nn::dense_backward(input_, c_in, d0, g.input);
    return terms;
}

nn::LossTerms InversionModel::eval_terms(const Sample& s) const {
    if (!s.features || !s.targets)
        throw DataError("eval_terms: sample without features or targets");
    const Outputs out = forward(*s.features);
    nn::LossTerms terms;
    terms.frames = s.features->rows();
    terms.sse = (out.target - *s.targets).squaredNorm();
    if (spec_.multi_task()) {
        if (!s.labels) throw DataError("eval_terms: multi-task model needs labels");
        const Mat logp = nn::log_softmax_rows(out.logits);
        for (Eigen::Index r = 0; r < logp.rows(); ++r)
            terms.ce_sum -= logp(r, (*s.labels)[static_cast<std::size_t>(r)]);
    }
    return terms;
}

void InversionModel::save(const std::filesystem::path& path, double alpha,
                          std::uint64_t seed, const ContourAutoencoder* ae) const {
    if (spec_.uses_autoencoder() && !ae)
        throw ConfigError("save: " + arch_tag(spec_.variant) +
                          " checkpoints embed the frozen autoencoder; none given");
    nn::CheckpointHeader h;
    h.arch_tag = arch_tag(spec_.variant);
    h.context_frames = static_cast<std::uint32_t>(spec_.context_frames);
    h.alpha = alpha;
    h.seed = seed;
    h.hidden = static_cast<std::uint32_t>(spec_.hidden);
    auto& self = const_cast<InversionModel&>(*this);
    auto refs = self.parameters();
    if (ae && spec_.uses_autoencoder()) {
        auto ae_refs = const_cast<ContourAutoencoder*>(ae)->parameters("ae.");
        refs.insert(refs.end(), ae_refs.begin(), ae_refs.end());
    }
    nn::save_checkpoint(path, h, refs);
}

LoadedInversionModel InversionModel::load(const std::filesystem::path& path) {
    const auto data = nn::load_checkpoint(path);
    LoadedInversionModel out;
    out.header = data.header;

    ArchSpec spec;
    spec.variant = variant_from_tag(data.header.arch_tag);
    spec.context_frames = static_cast<int>(data.header.context_frames);
    spec.hidden = static_cast<int>(data.header.hidden);

    InversionModel m;
    m.spec_ = spec;
    load_dense(m.input_, data, "input", nn::Activation::Tanh);
    load_lstm(m.lstm1_, data, "lstm1");
    load_lstm(m.lstm2_, data, "lstm2");
    load_dense(m.post1_, data, "post1", nn::Activation::Tanh);
    load_dense(m.post2_, data, "post2", nn::Activation::Tanh);
    load_dense(m.head_target_, data, "head_target", nn::Activation::Identity);
    if (spec.multi_task())
        load_dense(m.head_phoneme_, data, "head_phoneme", nn::Activation::Identity);

    m.spec_.latent_dim = spec.uses_autoencoder()
                             ? static_cast<int>(m.head_target_.W.rows())
                             : m.spec_.latent_dim;
    if (m.input_.W.cols() != m.spec_.input_dim())
        throw DataError(path.string() + ": input width does not match context " +
                        std::to_string(spec.context_frames));
    if (static_cast<int>(m.head_target_.W.rows()) != m.spec_.target_dim())
        throw DataError(path.string() + ": regression head width mismatch");

    if (spec.uses_autoencoder())
        out.autoencoder = ContourAutoencoder::from_blobs(data, "ae.");
    out.model = std::move(m);
    return out;
}

// --- inference ---------------------------------------------------------------

InversionResult invert(const InversionModel& model, const Mat& features,
                       const dsp::FeatureStats& contour_stats,
                       const ContourAutoencoder* ae, double t0_s, double hop_s) {
    const auto& spec = model.spec();
    if (spec.uses_autoencoder() && !ae)
        throw ConfigError("invert: " + arch_tag(spec.variant) +
                          " needs the frozen autoencoder decoder");
    const auto out = model.forward(features);

    Mat normalized; // T x 100 in normalized contour space
    if (spec.uses_autoencoder()) {
        if (ae->latent_dim() != spec.target_dim())
            throw ShapeError("invert: autoencoder latent dim mismatch");
        normalized = ae->decode(out.target);
    } else {
        normalized = out.target;
    }
    const Mat pixels = dsp::denormalize(normalized, contour_stats);

    InversionResult res;
    res.contours.reserve(static_cast<std::size_t>(pixels.rows()));
    for (Eigen::Index r = 0; r < pixels.rows(); ++r)
        res.contours.push_back(
            unflatten_contour(pixels.row(r).transpose(), t0_s + hop_s * static_cast<double>(r)));
    if (spec.multi_task()) res.posteriors = nn::softmax_rows(out.logits);
    return res;
}

} // namespace aai
