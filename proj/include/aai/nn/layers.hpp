#pragma once

#include "aai/tensor.hpp"

namespace aai::nn {

enum class Activation { Tanh, Identity };

// Weights are referenced across threads during a batch; forward/backward
// never mutate them. Gradients accumulate into the separate *Grads structs.

struct DenseParams {
    Mat W; // out x in
    Vec b; // out
    Activation act = Activation::Tanh;

    void init(int out, int in, Activation a, Rng& rng);
    int in_dim() const { return static_cast<int>(W.cols()); }
    int out_dim() const { return static_cast<int>(W.rows()); }
};

struct DenseGrads {
    Mat W;
    Vec b;

    static DenseGrads zeros_like(const DenseParams& p);
};

struct DenseCache {
    Mat x; // T x in
    Mat y; // T x out, post-activation (tanh gradient reads it)
};

Mat dense_forward(const DenseParams& p, const Mat& x, DenseCache* cache = nullptr);

// Returns dx; accumulates parameter gradients.
Mat dense_backward(const DenseParams& p, const DenseCache& cache, const Mat& dy,
                   DenseGrads& g);

// One LSTM direction. Gate blocks are stacked [i, f, g, o] along the 4H axis;
// i/f/o are sigmoid gates, g is the tanh candidate.
struct LstmDirParams {
    Mat W; // 4H x D
    Mat U; // 4H x H
    Vec b; // 4H
};

struct LstmDirGrads {
    Mat W;
    Mat U;
    Vec b;
};

struct LstmDirCache {
    Mat x;      // T x D
    Mat gates;  // T x 4H, post-activation
    Mat c;      // T x H
    Mat tanh_c; // T x H
    Mat h;      // T x H
};

struct BiLstmParams {
    LstmDirParams fwd, bwd;
    int hidden = 0;
    int input = 0;

    // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases except
    // the forget-gate bias at +1.
    void init(int hidden_per_direction, int input_dim, Rng& rng);
    int out_dim() const { return 2 * hidden; }
};

struct BiLstmGrads {
    LstmDirGrads fwd, bwd;

    static BiLstmGrads zeros_like(const BiLstmParams& p);
};

struct BiLstmCache {
    LstmDirCache fwd, bwd;
};

// T x D -> T x 2H. The forward cell scans 0..T-1, the backward cell T-1..0;
// both start from zero states; output row t concatenates the two hidden
// states at absolute time t.
Mat bilstm_forward(const BiLstmParams& p, const Mat& x, BiLstmCache* cache = nullptr);

// Exact backpropagation through time. Requires the forward cache; returns dx.
Mat bilstm_backward(const BiLstmParams& p, const BiLstmCache& cache, const Mat& dy,
                    BiLstmGrads& g);

Mat softmax_rows(const Mat& logits);
Mat log_softmax_rows(const Mat& logits);

} // namespace aai::nn
