#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aai/corpus.hpp"
#include "aai/synth.hpp"

using namespace aai;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

synth::SynthConfig tiny_config() {
    synth::SynthConfig cfg;
    cfg.n_acquisitions = 2;
    cfg.sentences_per_acquisition = 2;
    cfg.noise_std = 0.005;
    cfg.seed = 21;
    return cfg;
}

} // namespace

TEST_CASE("deformation basis rows are orthogonal") {
    const Mat basis = synth::default_deformation_basis();
    REQUIRE(basis.rows() == 4);
    REQUIRE(basis.cols() == 100);
    for (int a = 0; a < 4; ++a) {
        CHECK(basis.row(a).norm() == doctest::Approx(1.0).epsilon(1e-12));
        for (int b = a + 1; b < 4; ++b)
            CHECK(std::abs(basis.row(a).dot(basis.row(b))) < 1e-12);
    }
}

TEST_CASE("base contour stays well inside the image") {
    const Vec base = synth::default_base_contour();
    REQUIRE(base.size() == 100);
    CHECK(base.minCoeff() > 20.0);
    CHECK(base.maxCoeff() < 116.0);
}

TEST_CASE("same seed regenerates a byte-identical corpus") {
    const fs::path a = fs::temp_directory_path() / "aai_synth_a";
    const fs::path b = fs::temp_directory_path() / "aai_synth_b";
    fs::remove_all(a);
    fs::remove_all(b);
    const auto cfg = tiny_config();
    synth::generate(cfg, a);
    synth::generate(cfg, b);

    int files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), a);
        CHECK(slurp(entry.path()) == slurp(b / rel));
        ++files;
    }
    CHECK(files == 1 + 2 * 3); // phonemes.txt + 3 files per acquisition
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("zero deformation rows are rejected") {
    const fs::path dir = fs::temp_directory_path() / "aai_synth_zero";
    fs::remove_all(dir);
    auto cfg = tiny_config();
    cfg.n_acquisitions = 1;
    cfg.deform_amplitude_px = {0.0, 0.0, 0.0, 0.0};
    cfg.deformation_basis = Mat::Zero(4, 100);
    CHECK_THROWS_AS(synth::generate(cfg, dir), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("frozen latents give a constant contour track") {
    const fs::path dir = fs::temp_directory_path() / "aai_synth_frozen";
    fs::remove_all(dir);
    auto cfg = tiny_config();
    cfg.n_acquisitions = 1;
    cfg.freeze_latents = true;
    cfg.noise_std = 0.0;
    synth::generate(cfg, dir);

    const auto symbols = corpus::load_phoneme_inventory(dir);
    const auto acq = corpus::load_acquisition(dir, "acq000", symbols);
    REQUIRE(acq.contours.size() > 2);
    const Vec first = flatten_contour(acq.contours.front());
    for (const auto& c : acq.contours)
        CHECK((flatten_contour(c) - first).cwiseAbs().maxCoeff() < 1e-7);
    fs::remove_all(dir);
}

TEST_CASE("generated corpus round-trips through ingestion") {
    const fs::path dir = fs::temp_directory_path() / "aai_synth_roundtrip";
    fs::remove_all(dir);
    auto cfg = tiny_config();
    cfg.n_acquisitions = 3;
    synth::generate(cfg, dir);

    const auto symbols = corpus::load_phoneme_inventory(dir);
    const auto ids = corpus::list_acquisition_ids(dir);
    REQUIRE(ids.size() == 3);

    dsp::DspConfig dsp_cfg;
    for (const auto& id : ids) {
        const auto acq = corpus::load_acquisition(dir, id, symbols);
        CHECK_NOTHROW(acq.validate());
        const auto aligned = corpus::align_acquisition(acq, dsp_cfg);
        CHECK(aligned.dropped_outside_span == 0);
        const auto sentences = corpus::filter_silences(aligned);
        CHECK(static_cast<int>(sentences.size()) == cfg.sentences_per_acquisition);
        for (const auto& s : sentences) {
            CHECK(s.features.rows() > 0);
            CHECK(s.features.rows() == static_cast<Eigen::Index>(s.labels.size()));
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("intra-sentence silences appear inside sentences") {
    const fs::path dir = fs::temp_directory_path() / "aai_synth_intra";
    fs::remove_all(dir);
    auto cfg = tiny_config();
    cfg.n_acquisitions = 1;
    cfg.sentences_per_acquisition = 3; // sentence index 1 carries the pause
    synth::generate(cfg, dir);

    const auto symbols = corpus::load_phoneme_inventory(dir);
    const auto acq = corpus::load_acquisition(dir, "acq000", symbols);
    bool found_intra = false;
    for (const auto& seg : acq.segments)
        if (seg.label.is_silence && !seg.inter_sentence) found_intra = true;
    CHECK(found_intra);

    dsp::DspConfig dsp_cfg;
    const auto sentences = corpus::filter_silences(corpus::align_acquisition(acq, dsp_cfg));
    REQUIRE(sentences.size() == 3);
    bool kept_silence_frame = false;
    for (const auto& lab : sentences[1].labels)
        if (lab.is_silence) kept_silence_frame = true;
    CHECK(kept_silence_frame);
    fs::remove_all(dir);
}

TEST_CASE("oversized deformation basis trips the clipping guard") {
    const fs::path dir = fs::temp_directory_path() / "aai_synth_clip";
    fs::remove_all(dir);
    auto cfg = tiny_config();
    cfg.n_acquisitions = 1;
    cfg.deform_amplitude_px = {220.0, 220.0, 220.0, 220.0}; // way past the frame
    CHECK_THROWS_AS(synth::generate(cfg, dir), ConfigError);
    fs::remove_all(dir);
}
