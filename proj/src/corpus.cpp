#include "aai/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "aai/audio.hpp"
#include "aai/featio.hpp"

namespace aai::corpus {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, const std::string& ctx) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(ctx + ": cannot parse number '" + s + "'");
    }
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<TongueContour> read_contours_csv(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path.string());
    std::vector<TongueContour> contours;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string ctx = path.string() + ":" + std::to_string(lineno);
        if (static_cast<int>(fields.size()) != 1 + kContourDim)
            throw DataError(ctx + ": expected " + std::to_string(1 + kContourDim) +
                            " fields, got " + std::to_string(fields.size()));
        TongueContour c;
        c.timestamp_s = parse_double(fields[0], ctx);
        Vec v(kContourDim);
        for (int i = 0; i < kContourDim; ++i)
            v[i] = parse_double(fields[1 + i], ctx);
        c = unflatten_contour(v, c.timestamp_s);
        contours.push_back(c);
    }
    return contours;
}

std::vector<SegmentInterval> read_segments_csv(const fs::path& path,
                                               const std::vector<std::string>& symbols) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path.string());
    std::vector<SegmentInterval> segments;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string ctx = path.string() + ":" + std::to_string(lineno);
        if (fields.size() != 4)
            throw DataError(ctx + ": expected 4 fields (start,end,symbol,inter)");
        SegmentInterval seg;
        seg.start_s = parse_double(fields[0], ctx);
        seg.end_s = parse_double(fields[1], ctx);
        const std::string symbol = trim(fields[2]);
        const auto it = std::find(symbols.begin(), symbols.end(), symbol);
        if (it == symbols.end())
            throw DataError(ctx + ": unknown phoneme symbol '" + symbol + "'");
        seg.label.index = static_cast<int>(it - symbols.begin());
        seg.label.is_silence = (symbol == kSilenceSymbol);
        const std::string inter = trim(fields[3]);
        if (inter != "0" && inter != "1")
            throw DataError(ctx + ": inter flag must be 0 or 1");
        seg.inter_sentence = (inter == "1");
        if (seg.inter_sentence && !seg.label.is_silence)
            throw DataError(ctx + ": inter-sentence flag on non-silence interval");
        segments.push_back(seg);
    }
    return segments;
}

json stats_to_json(const dsp::FeatureStats& s) {
    json j;
    j["mean"] = std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size());
    j["std"] = std::vector<double>(s.std.data(), s.std.data() + s.std.size());
    return j;
}

dsp::FeatureStats stats_from_json(const json& j) {
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto sd = j.at("std").get<std::vector<double>>();
    if (mean.size() != sd.size()) throw DataError("norm stats: mean/std size mismatch");
    dsp::FeatureStats s;
    s.mean = Eigen::Map<const Vec>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    s.std = Eigen::Map<const Vec>(sd.data(), static_cast<Eigen::Index>(sd.size()));
    return s;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot create " + path.string());
    f << content;
    if (!f) throw DataError("failed writing " + path.string());
}

} // namespace

std::vector<TongueContour> interpolate_contours(const std::vector<TongueContour>& contours,
                                                const std::vector<double>& grid_s) {
    if (contours.size() < 2)
        throw DataError("interpolate_contours: need at least 2 contours");
    std::vector<TongueContour> out;
    out.reserve(grid_s.size());
    const double t_first = contours.front().timestamp_s;
    const double t_last = contours.back().timestamp_s;
    std::size_t hi = 1;
    for (double t : grid_s) {
        if (t < t_first || t > t_last)
            throw DataError("interpolate_contours: grid time " + std::to_string(t) +
                            " outside contour span [" + std::to_string(t_first) + ", " +
                            std::to_string(t_last) + "]");
        while (hi + 1 < contours.size() && contours[hi].timestamp_s < t) ++hi;
        const auto& a = contours[hi - 1];
        const auto& b = contours[hi];
        const double lam = (t - a.timestamp_s) / (b.timestamp_s - a.timestamp_s);
        TongueContour c;
        c.timestamp_s = t;
        for (int i = 0; i < kContourPoints; ++i) {
            c.points[i].x = (1.0 - lam) * a.points[i].x + lam * b.points[i].x;
            c.points[i].y = (1.0 - lam) * a.points[i].y + lam * b.points[i].y;
        }
        out.push_back(c);
    }
    return out;
}

AlignedAcquisition align_acquisition(const Acquisition& acq, const dsp::DspConfig& cfg) {
    acq.validate();
    if (acq.contours.size() < 2)
        throw DataError(acq.id + ": need at least 2 contours for interpolation");

    const Mat feats = dsp::compute_features(acq.audio, cfg);
    const int n_frames = static_cast<int>(feats.rows());

    const double t_first = acq.contours.front().timestamp_s;
    const double t_last = acq.contours.back().timestamp_s;

    AlignedAcquisition out;
    out.id = acq.id;
    std::vector<int> kept;
    std::vector<double> grid;
    for (int i = 0; i < n_frames; ++i) {
        const double t = dsp::frame_time_s(i, cfg);
        if (t < t_first || t > t_last) {
            ++out.dropped_outside_span;
            continue;
        }
        kept.push_back(i);
        grid.push_back(t);
    }
    if (kept.empty())
        throw DataError(acq.id + ": no feature frame falls inside the contour span");

    const auto interp = interpolate_contours(acq.contours, grid);

    out.features.resize(static_cast<Eigen::Index>(kept.size()), feats.cols());
    out.contours.resize(static_cast<Eigen::Index>(kept.size()), kContourDim);
    out.labels.reserve(kept.size());
    out.inter_silence.reserve(kept.size());
    out.times_s = grid;

    std::size_t seg_idx = 0;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        out.features.row(static_cast<Eigen::Index>(k)) = feats.row(kept[k]);
        out.contours.row(static_cast<Eigen::Index>(k)) =
            flatten_contour(interp[k]).transpose();

        const double t = grid[k];
        while (seg_idx < acq.segments.size() && acq.segments[seg_idx].end_s <= t) ++seg_idx;
        if (seg_idx >= acq.segments.size() || acq.segments[seg_idx].start_s > t)
            throw DataError(acq.id + ": frame at " + std::to_string(t) +
                            " s not covered by any segment interval");
        out.labels.push_back(acq.segments[seg_idx].label);
        out.inter_silence.push_back(acq.segments[seg_idx].inter_sentence ? 1 : 0);
    }
    return out;
}

std::vector<RawSentence> filter_silences(const AlignedAcquisition& aligned) {
    const int n = static_cast<int>(aligned.labels.size());
    std::vector<RawSentence> sentences;
    int start = -1;
    auto flush = [&](int end) {
        if (start < 0) return;
        RawSentence s;
        const int len = end - start;
        std::ostringstream id;
        id << aligned.id << "_s" << std::setw(3) << std::setfill('0') << sentences.size();
        s.id = id.str();
        s.acquisition_id = aligned.id;
        s.t0_s = aligned.times_s[static_cast<std::size_t>(start)];
        s.features = aligned.features.middleRows(start, len);
        s.contours = aligned.contours.middleRows(start, len);
        s.labels.assign(aligned.labels.begin() + start, aligned.labels.begin() + end);
        sentences.push_back(std::move(s));
        start = -1;
    };
    for (int i = 0; i < n; ++i) {
        if (aligned.inter_silence[static_cast<std::size_t>(i)]) {
            flush(i);
        } else if (start < 0) {
            start = i;
        }
    }
    flush(n);
    return sentences;
}

dsp::FeatureStats contour_norm_stats(const std::vector<Mat>& contour_blocks,
                                     std::size_t index, int halfwindow) {
    if (contour_blocks.empty()) throw DataError("contour_norm_stats: empty corpus");
    if (index >= contour_blocks.size())
        throw DataError("contour_norm_stats: index out of range");
    const std::size_t lo = index >= static_cast<std::size_t>(halfwindow)
                               ? index - static_cast<std::size_t>(halfwindow)
                               : 0;
    const std::size_t hi =
        std::min(contour_blocks.size() - 1, index + static_cast<std::size_t>(halfwindow));
    std::vector<const Mat*> window;
    for (std::size_t i = lo; i <= hi; ++i) window.push_back(&contour_blocks[i]);
    auto stats = dsp::compute_stats(window);
    dsp::check_stats(stats);
    return stats;
}

SplitManifest make_split(const std::vector<std::string>& ids, std::uint64_t seed) {
    if (ids.size() < 10)
        throw DataError("make_split: need at least 10 acquisitions, got " +
                        std::to_string(ids.size()));
    std::vector<std::string> shuffled = ids;
    Rng rng(mix_seed(seed, 0x511));
    deterministic_shuffle(shuffled, rng);

    const std::size_t n = shuffled.size();
    const std::size_t n_val = static_cast<std::size_t>(std::llround(n / 10.0));
    const std::size_t n_test = n_val;

    SplitManifest m;
    m.seed = seed;
    m.validation.assign(shuffled.begin(), shuffled.begin() + n_val);
    m.test.assign(shuffled.begin() + n_val, shuffled.begin() + n_val + n_test);
    m.train.assign(shuffled.begin() + n_val + n_test, shuffled.end());
    std::sort(m.train.begin(), m.train.end());
    std::sort(m.validation.begin(), m.validation.end());
    std::sort(m.test.begin(), m.test.end());
    return m;
}

std::vector<std::string> load_phoneme_inventory(const fs::path& corpus_dir) {
    const fs::path path = corpus_dir / "phonemes.txt";
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path.string());
    std::vector<std::string> symbols;
    std::string line;
    while (std::getline(f, line)) {
        const std::string s = trim(line);
        if (!s.empty()) symbols.push_back(s);
    }
    if (static_cast<int>(symbols.size()) != kNumPhonemes)
        throw DataError(path.string() + ": expected " + std::to_string(kNumPhonemes) +
                        " symbols, got " + std::to_string(symbols.size()));
    if (std::find(symbols.begin(), symbols.end(), kSilenceSymbol) == symbols.end())
        throw DataError(path.string() + ": missing silence symbol '" +
                        std::string(kSilenceSymbol) + "'");
    return symbols;
}

std::vector<std::string> list_acquisition_ids(const fs::path& corpus_dir) {
    if (!fs::is_directory(corpus_dir))
        throw DataError("corpus directory not found: " + corpus_dir.string());
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(corpus_dir))
        if (entry.is_directory() && fs::exists(entry.path() / "audio.wav"))
            ids.push_back(entry.path().filename().string());
    std::sort(ids.begin(), ids.end()); // recording order is lexicographic
    if (ids.empty())
        throw DataError("no acquisitions under " + corpus_dir.string());
    return ids;
}

Acquisition load_acquisition(const fs::path& corpus_dir, const std::string& id,
                             const std::vector<std::string>& phoneme_symbols) {
    const fs::path dir = corpus_dir / id;
    Acquisition acq;
    acq.id = id;
    acq.audio = read_wav(dir / "audio.wav");
    acq.contours = read_contours_csv(dir / "contours.csv");
    acq.segments = read_segments_csv(dir / "segments.csv", phoneme_symbols);
    acq.validate();
    return acq;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

PrepSummary prepare_dataset(const fs::path& corpus_dir, const fs::path& out_dir,
                            const PrepConfig& cfg) {
    dsp::ContextConfig ctx{cfg.context_frames};
    ctx.validate();
    cfg.dsp.validate();

    const auto symbols = load_phoneme_inventory(corpus_dir);
    const auto ids = list_acquisition_ids(corpus_dir);

    PrepSummary summary;
    summary.acquisitions = static_cast<int>(ids.size());

    // Pass 1: ingest, align, filter. Raw contour blocks are kept for the
    // windowed statistics.
    std::vector<Mat> contour_blocks;
    std::vector<std::vector<RawSentence>> per_acq_sentences;
    contour_blocks.reserve(ids.size());
    per_acq_sentences.reserve(ids.size());
    for (const auto& id : ids) {
        const Acquisition acq = load_acquisition(corpus_dir, id, symbols);
        Mat block(static_cast<Eigen::Index>(acq.contours.size()), kContourDim);
        for (std::size_t i = 0; i < acq.contours.size(); ++i)
            block.row(static_cast<Eigen::Index>(i)) = flatten_contour(acq.contours[i]).transpose();
        contour_blocks.push_back(std::move(block));

        const auto aligned = align_acquisition(acq, cfg.dsp);
        summary.frames_dropped_outside_span += aligned.dropped_outside_span;
        long long kept_in_sentences = 0;
        auto sentences = filter_silences(aligned);
        for (const auto& s : sentences) kept_in_sentences += s.features.rows();
        summary.frames_dropped_inter_silence +=
            static_cast<long long>(aligned.labels.size()) - kept_in_sentences;
        summary.frames_kept += kept_in_sentences;
        summary.sentences += static_cast<int>(sentences.size());
        per_acq_sentences.push_back(std::move(sentences));
    }

    // Per-acquisition contour statistics over the +/-30 recording window.
    NormStats stats;
    for (std::size_t i = 0; i < ids.size(); ++i)
        stats.contours[ids[i]] = contour_norm_stats(contour_blocks, i);

    const SplitManifest split = make_split(ids, cfg.seed);
    summary.train_acquisitions = static_cast<int>(split.train.size());
    summary.validation_acquisitions = static_cast<int>(split.validation.size());
    summary.test_acquisitions = static_cast<int>(split.test.size());

    auto split_of = [&](const std::string& id) -> std::string {
        if (std::binary_search(split.train.begin(), split.train.end(), id)) return "train";
        if (std::binary_search(split.validation.begin(), split.validation.end(), id))
            return "validation";
        return "test";
    };

    // Feature statistics over the surviving frames of the training split.
    {
        std::vector<const Mat*> train_feats;
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (split_of(ids[i]) == "train")
                for (const auto& s : per_acq_sentences[i]) train_feats.push_back(&s.features);
        if (train_feats.empty()) throw DataError("prepare_dataset: empty training split");
        stats.features = dsp::compute_stats(train_feats);
        dsp::check_stats(stats.features);
    }

    fs::create_directories(out_dir / "sentences");

    // Pass 2: normalize, stack context, write per-sentence files.
    json sent_list = json::array();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& acq_stats = stats.contours.at(ids[i]);
        const std::string split_name = split_of(ids[i]);
        for (const auto& s : per_acq_sentences[i]) {
            const Mat feats_norm = dsp::zscore(s.features, stats.features);
            const Mat stacked = dsp::stack_context(feats_norm, ctx);
            const Mat cont_norm = dsp::zscore(s.contours, acq_stats);
            Mat phn(static_cast<Eigen::Index>(s.labels.size()), 1);
            for (std::size_t k = 0; k < s.labels.size(); ++k)
                phn(static_cast<Eigen::Index>(k), 0) = s.labels[k].index;

            const std::string base = "sentences/" + s.id;
            write_aaif(out_dir / (base + ".feat"), stacked);
            write_aaif(out_dir / (base + ".cont"), cont_norm);
            write_aaif(out_dir / (base + ".phn"), phn);

            json e;
            e["id"] = s.id;
            e["acquisition"] = s.acquisition_id;
            e["split"] = split_name;
            e["frames"] = static_cast<int>(s.features.rows());
            e["t0_s"] = s.t0_s;
            e["feat"] = base + ".feat";
            e["contour"] = base + ".cont";
            e["phoneme"] = base + ".phn";
            sent_list.push_back(e);
        }
    }

    // split.json
    {
        json j;
        j["seed"] = cfg.seed;
        j["train"] = split.train;
        j["validation"] = split.validation;
        j["test"] = split.test;
        write_text_file(out_dir / "split.json", j.dump(2) + "\n");
    }

    // norm_stats.json
    std::string stats_bytes;
    {
        json j;
        j["features"] = stats_to_json(stats.features);
        json cont = json::object();
        for (const auto& [id, st] : stats.contours) cont[id] = stats_to_json(st);
        j["contours"] = cont;
        stats_bytes = j.dump(2) + "\n";
        write_text_file(out_dir / "norm_stats.json", stats_bytes);
    }

    // dataset.json
    {
        json j;
        j["format"] = "aai-dataset";
        j["version"] = 1;
        j["context_frames"] = cfg.context_frames;
        j["base_dim"] = 39;
        j["feature_dim"] = ctx.stacked_dim(39);
        j["seed"] = cfg.seed;
        j["phonemes"] = symbols;
        j["stats_fnv"] = fnv1a(stats_bytes);
        json counts;
        counts["frames_kept"] = summary.frames_kept;
        counts["frames_dropped_outside_span"] = summary.frames_dropped_outside_span;
        counts["frames_dropped_inter_silence"] = summary.frames_dropped_inter_silence;
        counts["sentences"] = summary.sentences;
        j["counts"] = counts;
        j["sentences"] = sent_list;
        write_text_file(out_dir / "dataset.json", j.dump(2) + "\n");
    }
    return summary;
}

std::vector<const PreparedSentence*> Dataset::split_sentences(const std::string& split_name) const {
    std::vector<const PreparedSentence*> out;
    for (const auto& s : sentences)
        if (s.split == split_name) out.push_back(&s);
    return out;
}

const dsp::FeatureStats& Dataset::contour_stats_for(const std::string& acquisition_id) const {
    const auto it = stats.contours.find(acquisition_id);
    if (it == stats.contours.end())
        throw DataError("no contour statistics for acquisition " + acquisition_id);
    return it->second;
}

Dataset load_dataset(const fs::path& prep_dir) {
    const fs::path meta_path = prep_dir / "dataset.json";
    json j;
    try {
        j = json::parse(read_text_file(meta_path));
    } catch (const json::exception& e) {
        throw DataError(meta_path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "aai-dataset")
        throw DataError(meta_path.string() + ": not an aai dataset manifest");

    Dataset ds;
    ds.context_frames = j.at("context_frames").get<int>();
    ds.feature_dim = j.at("feature_dim").get<int>();
    ds.base_dim = j.at("base_dim").get<int>();
    ds.seed = j.at("seed").get<std::uint64_t>();
    ds.phoneme_symbols = j.at("phonemes").get<std::vector<std::string>>();

    const std::string stats_bytes = read_text_file(prep_dir / "norm_stats.json");
    if (j.contains("stats_fnv") && j.at("stats_fnv").get<std::uint64_t>() != fnv1a(stats_bytes))
        throw DataError(prep_dir.string() + ": norm_stats.json does not match dataset.json");
    json js;
    try {
        js = json::parse(stats_bytes);
    } catch (const json::exception& e) {
        throw DataError((prep_dir / "norm_stats.json").string() + ": " + e.what());
    }
    ds.stats.features = stats_from_json(js.at("features"));
    for (const auto& [id, st] : js.at("contours").items())
        ds.stats.contours[id] = stats_from_json(st);

    json sp;
    try {
        sp = json::parse(read_text_file(prep_dir / "split.json"));
    } catch (const json::exception& e) {
        throw DataError((prep_dir / "split.json").string() + ": " + e.what());
    }
    ds.split.seed = sp.at("seed").get<std::uint64_t>();
    ds.split.train = sp.at("train").get<std::vector<std::string>>();
    ds.split.validation = sp.at("validation").get<std::vector<std::string>>();
    ds.split.test = sp.at("test").get<std::vector<std::string>>();

    for (const auto& e : j.at("sentences")) {
        PreparedSentence s;
        s.id = e.at("id").get<std::string>();
        s.acquisition_id = e.at("acquisition").get<std::string>();
        s.split = e.at("split").get<std::string>();
        s.t0_s = e.at("t0_s").get<double>();
        s.features = read_aaif(prep_dir / e.at("feat").get<std::string>());
        s.contours = read_aaif(prep_dir / e.at("contour").get<std::string>());
        const Mat phn = read_aaif(prep_dir / e.at("phoneme").get<std::string>());
        if (s.features.cols() != ds.feature_dim)
            throw DataError(s.id + ": feature dim " + std::to_string(s.features.cols()) +
                            " does not match dataset header " + std::to_string(ds.feature_dim));
        if (s.contours.cols() != kContourDim)
            throw DataError(s.id + ": contour dim mismatch");
        if (phn.rows() != s.features.rows() || s.contours.rows() != s.features.rows())
            throw DataError(s.id + ": frame count mismatch between files");
        s.phonemes.resize(static_cast<std::size_t>(phn.rows()));
        for (Eigen::Index r = 0; r < phn.rows(); ++r) {
            const int idx = static_cast<int>(phn(r, 0));
            if (idx < 0 || idx >= kNumPhonemes)
                throw DataError(s.id + ": phoneme index out of range");
            s.phonemes[static_cast<std::size_t>(r)] = idx;
        }
        ds.sentences.push_back(std::move(s));
    }
    return ds;
}

} // namespace aai::corpus
