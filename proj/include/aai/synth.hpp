#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "aai/tensor.hpp"
#include "aai/types.hpp"

namespace aai::synth {

// Generator for a corpus whose articulatory-to-acoustic forward map is known
// and injective: hidden parameters p(t) drive both the contour (through an
// orthogonal deformation basis) and the audio spectrum (through disjoint,
// monotone formant-like peaks), so an inversion model can in principle reach
// near-zero error.
struct SynthConfig {
    int n_acquisitions = 30;
    int sentences_per_acquisition = 3;
    int n_latent = 4;
    double noise_std = 0.01;
    std::uint64_t seed = 1;

    double sentence_s = 0.72;      // speech per sentence
    double inter_silence_s = 0.30; // gap between sentences (discarded downstream)
    double intra_silence_s = 0.12; // pause inside every third sentence (kept)
    double f0_hz = 120.0;
    double audio_gain = 0.08;

    bool freeze_latents = false; // test fixture: p(t) constant per acquisition

    // Empty -> defaults from default_base_contour / default_deformation_basis.
    Vec base_contour;        // 100
    Mat deformation_basis;   // n_latent x 100, mutually orthogonal rows
    std::vector<double> deform_amplitude_px = {6.0, 6.0, 10.0, 8.0};

    void validate() const;
};

// Tongue-like arc placed well inside the 136 px frame.
Vec default_base_contour();

// Four orthonormal rows: vertical shift, horizontal shift, dorsum bump,
// tip bump (Gram-Schmidt orthogonalized).
Mat default_deformation_basis();

// Writes the corpus directory layout consumed by the corpus module:
// <out>/<acq>/audio.wav, contours.csv, segments.csv and <out>/phonemes.txt.
// Byte-identical for a fixed config.
void generate(const SynthConfig& cfg, const std::filesystem::path& out_dir);

} // namespace aai::synth
