#pragma once

#include <cstdint>
#include <vector>

#include "aai/tensor.hpp"

namespace aai::nn {

// Mean over all elements of (y - yhat)^2.
double mse(const Mat& y, const Mat& yhat);

// d mse / d yhat = 2 (yhat - y) / numel.
Mat mse_grad(const Mat& y, const Mat& yhat);

// Rows whose mask is 0 contribute nothing, to the numerator or denominator.
double mse_masked(const Mat& y, const Mat& yhat, const std::vector<std::uint8_t>& mask);

// -(1/n) sum_i log p_i[label_i] on explicit probability rows (each must sum
// to 1 within 1e-6). Training uses the fused logits path below instead.
double cross_entropy(const Mat& probs, const std::vector<int>& labels);

double cross_entropy_masked(const Mat& probs, const std::vector<int>& labels,
                            const std::vector<std::uint8_t>& mask);

// Stable log-softmax cross entropy, mean over rows. When dlogits is given it
// receives (softmax - onehot) / n.
double softmax_cross_entropy(const Mat& logits, const std::vector<int>& labels,
                             Mat* dlogits = nullptr);

// MSE + alpha * CrossEntropy.
double combined_loss(double mse_term, double ce_term, double alpha);

} // namespace aai::nn
