#include "aai/nn/layers.hpp"

#include <cmath>

namespace aai::nn {

namespace {

void init_uniform(Mat& m, int fan_in, Rng& rng) {
    const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-r, r);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

void DenseParams::init(int out, int in, Activation a, Rng& rng) {
    W.resize(out, in);
    init_uniform(W, in, rng);
    b = Vec::Zero(out);
    act = a;
}

DenseGrads DenseGrads::zeros_like(const DenseParams& p) {
    DenseGrads g;
    g.W = Mat::Zero(p.W.rows(), p.W.cols());
    g.b = Vec::Zero(p.b.size());
    return g;
}

Mat dense_forward(const DenseParams& p, const Mat& x, DenseCache* cache) {
    if (x.cols() != p.W.cols())
        throw ShapeError("dense_forward: input dim " + std::to_string(x.cols()) +
                         " != layer dim " + std::to_string(p.W.cols()));
    Mat y = x * p.W.transpose();
    y.rowwise() += p.b.transpose();
    if (p.act == Activation::Tanh) y = y.array().tanh();
    if (cache) {
        cache->x = x;
        cache->y = y;
    }
    return y;
}

Mat dense_backward(const DenseParams& p, const DenseCache& cache, const Mat& dy,
                   DenseGrads& g) {
    Mat dz = dy;
    if (p.act == Activation::Tanh)
        dz.array() *= 1.0 - cache.y.array().square();
    g.W.noalias() += dz.transpose() * cache.x;
    g.b.noalias() += dz.colwise().sum().transpose();
    return dz * p.W;
}

void BiLstmParams::init(int hidden_per_direction, int input_dim, Rng& rng) {
    hidden = hidden_per_direction;
    input = input_dim;
    for (LstmDirParams* dir : {&fwd, &bwd}) {
        dir->W.resize(4 * hidden, input);
        init_uniform(dir->W, input, rng);
        dir->U.resize(4 * hidden, hidden);
        init_uniform(dir->U, hidden, rng);
        dir->b = Vec::Zero(4 * hidden);
        dir->b.segment(hidden, hidden).setOnes(); // forget gate
    }
}

BiLstmGrads BiLstmGrads::zeros_like(const BiLstmParams& p) {
    BiLstmGrads g;
    for (auto [gd, pd] : {std::pair{&g.fwd, &p.fwd}, std::pair{&g.bwd, &p.bwd}}) {
        gd->W = Mat::Zero(pd->W.rows(), pd->W.cols());
        gd->U = Mat::Zero(pd->U.rows(), pd->U.cols());
        gd->b = Vec::Zero(pd->b.size());
    }
    return g;
}

namespace {

// reverse=false scans 0..T-1, reverse=true scans T-1..0.
void lstm_dir_forward(const LstmDirParams& p, const Mat& x, bool reverse, int hidden,
                      LstmDirCache& cache) {
    const int T = static_cast<int>(x.rows());
    const int H = hidden;
    cache.x = x;
    cache.gates.resize(T, 4 * H);
    cache.c.resize(T, H);
    cache.tanh_c.resize(T, H);
    cache.h.resize(T, H);

    // Input contribution for the whole sequence in one product.
    Mat pre = x * p.W.transpose();
    pre.rowwise() += p.b.transpose();

    Vec z(4 * H), c_prev = Vec::Zero(H), h_prev = Vec::Zero(H);
    for (int s = 0; s < T; ++s) {
        const int t = reverse ? T - 1 - s : s;
        z = pre.row(t).transpose();
        z.noalias() += p.U * h_prev;
        for (int j = 0; j < H; ++j) {
            const double i_g = sigmoid(z[j]);
            const double f_g = sigmoid(z[H + j]);
            const double g_g = std::tanh(z[2 * H + j]);
            const double o_g = sigmoid(z[3 * H + j]);
            const double c = f_g * c_prev[j] + i_g * g_g;
            const double tc = std::tanh(c);
            cache.gates(t, j) = i_g;
            cache.gates(t, H + j) = f_g;
            cache.gates(t, 2 * H + j) = g_g;
            cache.gates(t, 3 * H + j) = o_g;
            cache.c(t, j) = c;
            cache.tanh_c(t, j) = tc;
            cache.h(t, j) = o_g * tc;
        }
        c_prev = cache.c.row(t).transpose();
        h_prev = cache.h.row(t).transpose();
    }
}

void lstm_dir_backward(const LstmDirParams& p, const LstmDirCache& cache, const Mat& dy,
                       bool reverse, int hidden, LstmDirGrads& g, Mat& dx) {
    const int T = static_cast<int>(cache.x.rows());
    const int H = hidden;

    Mat dz_all(T, 4 * H);
    Mat h_prev_all = Mat::Zero(T, H); // hidden state one scan step earlier

    Vec dh_acc = Vec::Zero(H), dc_acc = Vec::Zero(H);
    Vec dh(H), dc(H), dz(4 * H);
    for (int s = T - 1; s >= 0; --s) {
        const int t = reverse ? T - 1 - s : s;
        const int t_prev = reverse ? t + 1 : t - 1;
        const bool has_prev = s > 0;
        if (has_prev) h_prev_all.row(t) = cache.h.row(t_prev);

        dh = dy.row(t).transpose() + dh_acc;
        dc = dc_acc;
        for (int j = 0; j < H; ++j) {
            const double i_g = cache.gates(t, j);
            const double f_g = cache.gates(t, H + j);
            const double g_g = cache.gates(t, 2 * H + j);
            const double o_g = cache.gates(t, 3 * H + j);
            const double tc = cache.tanh_c(t, j);
            const double c_prev = has_prev ? cache.c(t_prev, j) : 0.0;

            const double d_o = dh[j] * tc;
            dc[j] += dh[j] * o_g * (1.0 - tc * tc);
            const double d_i = dc[j] * g_g;
            const double d_g = dc[j] * i_g;
            const double d_f = dc[j] * c_prev;

            dz[j] = d_i * i_g * (1.0 - i_g);
            dz[H + j] = d_f * f_g * (1.0 - f_g);
            dz[2 * H + j] = d_g * (1.0 - g_g * g_g);
            dz[3 * H + j] = d_o * o_g * (1.0 - o_g);

            dc_acc[j] = dc[j] * f_g;
        }
        dz_all.row(t) = dz.transpose();
        dh_acc.noalias() = p.U.transpose() * dz;
    }

    g.W.noalias() += dz_all.transpose() * cache.x;
    g.U.noalias() += dz_all.transpose() * h_prev_all;
    g.b.noalias() += dz_all.colwise().sum().transpose();
    dx.noalias() += dz_all * p.W;
}

} // namespace

Mat bilstm_forward(const BiLstmParams& p, const Mat& x, BiLstmCache* cache) {
    if (x.rows() < 1) throw DataError("bilstm_forward: empty sequence");
    if (x.cols() != p.input)
        throw ShapeError("bilstm_forward: input dim " + std::to_string(x.cols()) +
                         " != layer dim " + std::to_string(p.input));
    BiLstmCache local;
    BiLstmCache& c = cache ? *cache : local;
    lstm_dir_forward(p.fwd, x, false, p.hidden, c.fwd);
    lstm_dir_forward(p.bwd, x, true, p.hidden, c.bwd);
    Mat out(x.rows(), 2 * p.hidden);
    out.leftCols(p.hidden) = c.fwd.h;
    out.rightCols(p.hidden) = c.bwd.h;
    return out;
}

Mat bilstm_backward(const BiLstmParams& p, const BiLstmCache& cache, const Mat& dy,
                    BiLstmGrads& g) {
    if (cache.fwd.x.rows() == 0)
        throw Error("bilstm_backward: missing forward cache");
    if (dy.rows() != cache.fwd.x.rows() || dy.cols() != 2 * p.hidden)
        throw ShapeError("bilstm_backward: upstream gradient shape mismatch");
    Mat dx = Mat::Zero(cache.fwd.x.rows(), cache.fwd.x.cols());
    lstm_dir_backward(p.fwd, cache.fwd, dy.leftCols(p.hidden), false, p.hidden, g.fwd, dx);
    lstm_dir_backward(p.bwd, cache.bwd, dy.rightCols(p.hidden), true, p.hidden, g.bwd, dx);
    return dx;
}

Mat softmax_rows(const Mat& logits) {
    Mat out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(r).array() - m).exp();
        out.row(r) = e / e.sum();
    }
    return out;
}

Mat log_softmax_rows(const Mat& logits) {
    Mat out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
        out.row(r) = logits.row(r).array() - lse;
    }
    return out;
}

} // namespace aai::nn
