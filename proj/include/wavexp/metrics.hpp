#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wavexp/image.hpp"
#include "wavexp/net.hpp"
#include "wavexp/synthfaces.hpp"
#include "wavexp/trainer.hpp"

namespace wavexp {

/// Expression class of a label: sign pattern of (au - 0.5) on the first
/// three coordinates, giving 8 classes.
int expression_class(const AuVec& au);

/// Small convolutional expression classifier: strided trunk, a global
/// convolution that yields the penultimate feature vector, a linear head
/// over 8 classes. Inference helpers run gradient-free.
class FeatureNet {
  public:
    static constexpr int64_t kClasses = 8;

    FeatureNet(int64_t image_size, int64_t in_channels, Rng& rng);

    /// [N,C,S,S] in [-1,1] -> [N,kClasses]; records autodiff history.
    Tensor logits(const Tensor& x) const;
    /// Softmax rows of logits; each sums to 1 within 1e-5.
    std::vector<std::vector<double>> probabilities(const Tensor& x) const;
    /// Penultimate activations, one row per sample.
    std::vector<std::vector<float>> features(const Tensor& x) const;

    int64_t feature_dim() const { return feature_dim_; }
    int64_t image_size() const { return image_size_; }

    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }

    /// Filled by train_feature_net; metrics that need the net are
    /// unavailable unless ok().
    double heldout_accuracy = 0.0;
    bool ok() const { return heldout_accuracy >= 0.90; }

  private:
    Tensor feature_map(const Tensor& x) const;  // [N,F,1,1]

    int64_t image_size_ = 0;
    int64_t feature_dim_ = 0;
    ParamStore store_;
    ConvLayer stem_, mid_, feat_, head_;
};

/// Trains a fresh classifier on an 80/20 split of data (deterministic in
/// seed), storing the held-out accuracy on the result. Training stops early
/// once the held-out score clears the bar comfortably.
FeatureNet train_feature_net(const TrainSet& data, uint64_t seed);

/// exp of the mean KL divergence between each row and the row marginal;
/// natural log, probabilities floored at 1e-12. Rows must sum to 1 within
/// 1e-5; an empty set is rejected.
double inception_score(const std::vector<std::vector<double>>& probs);

struct GaussianStats {
    int64_t f = 0;
    std::vector<double> mu;   // length f
    std::vector<double> cov;  // f x f, row-major, symmetric
};

/// Sample mean and unbiased covariance of feature rows (needs at least two).
GaussianStats gaussian_stats(const std::vector<std::vector<float>>& features);

/// ||mu_a - mu_b||^2 + tr(Ca) + tr(Cb) - 2 * sum_i sqrt(lambda_i), with
/// lambda the eigenvalues of Ca*Cb clamped to be nonnegative.
double fid(const GaussianStats& a, const GaussianStats& b);

/// Mean L2 distance between the identity embeddings of paired images.
double acd(const std::vector<Image>& inputs, const std::vector<Image>& outputs);

/// Mean L2 distance between extracted expression coordinates and targets.
double expression_distance(const std::vector<Image>& generated,
                           const std::vector<AuVec>& targets);

/// Uniform 8x8 sliding-window structural similarity on [0,1] images,
/// averaged over windows and channels; C1 = 0.01^2, C2 = 0.03^2.
double ssim(const Image& x, const Image& y);

struct PsnrL1 {
    double psnr = 0.0;  // dB, capped at 100 below mse 1e-10
    double l1 = 0.0;
};

PsnrL1 psnr_l1(const Image& x, const Image& y);

struct MetricReport {
    double is_score = 0.0;
    double fid = 0.0;
    double acd = 0.0;
    double ssim = 0.0;
    double psnr = 0.0;
    double l1 = 0.0;
    double ed = 0.0;

    /// Header carries run-identifier columns first; non-finite fields are
    /// written as "na".
    static std::string csv_header();
    std::string csv_row(const std::string& run, int64_t step) const;
};

}  // namespace wavexp
