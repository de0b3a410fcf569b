#include "wavexp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "wavexp/optim.hpp"

namespace wavexp {

int expression_class(const AuVec& au) {
    int c = 0;
    if (au[0] > 0.5f) c |= 1;
    if (au[1] > 0.5f) c |= 2;
    if (au[2] > 0.5f) c |= 4;
    return c;
}

FeatureNet::FeatureNet(int64_t image_size, int64_t in_channels, Rng& rng)
    : image_size_(image_size), feature_dim_(16) {
    check(image_size >= 16 && image_size % 8 == 0,
          "FeatureNet: image size must be a multiple of 8, got ", image_size);
    stem_ = make_conv(store_, "stem", in_channels, 12, 4, 4, 0, rng);
    mid_ = make_conv(store_, "mid", 12, 24, 4, 2, 1, rng);
    feat_ = make_conv(store_, "feat", 24, feature_dim_, image_size / 8, 1, 0,
                      rng);
    head_ = make_conv(store_, "head", feature_dim_,
                      static_cast<int64_t>(kClasses), 1, 1, 0, rng);
}

Tensor FeatureNet::feature_map(const Tensor& x) const {
    check(x.shape().size() == 4 && x.shape()[2] == image_size_ &&
              x.shape()[3] == image_size_,
          "FeatureNet: expected [N,C,", image_size_, ",", image_size_,
          "], got ", shape_str(x.shape()));
    Tensor h = leaky_relu(stem_(x), 0.2f);
    h = leaky_relu(mid_(h), 0.2f);
    return leaky_relu(feat_(h), 0.2f);  // [N,F,1,1]
}

Tensor FeatureNet::logits(const Tensor& x) const {
    Tensor h = head_(feature_map(x));
    return reshape(h, {x.shape()[0], static_cast<int64_t>(kClasses)});
}

std::vector<std::vector<double>> FeatureNet::probabilities(
    const Tensor& x) const {
    NoGradGuard guard;
    Tensor lg = logits(x);
    const int64_t n = lg.shape()[0];
    std::vector<std::vector<double>> rows(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        const float* r = lg.data() + i * kClasses;
        double mx = r[0];
        for (int64_t c = 1; c < kClasses; ++c)
            mx = std::max(mx, static_cast<double>(r[c]));
        std::vector<double> p(static_cast<size_t>(kClasses));
        double sum = 0.0;
        for (int64_t c = 0; c < kClasses; ++c) {
            p[static_cast<size_t>(c)] = std::exp(r[c] - mx);
            sum += p[static_cast<size_t>(c)];
        }
        for (double& v : p) v /= sum;
        rows[static_cast<size_t>(i)] = std::move(p);
    }
    return rows;
}

std::vector<std::vector<float>> FeatureNet::features(const Tensor& x) const {
    NoGradGuard guard;
    Tensor f = feature_map(x);
    const int64_t n = f.shape()[0];
    std::vector<std::vector<float>> rows(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i)
        rows[static_cast<size_t>(i)] =
            std::vector<float>(f.data() + i * feature_dim_,
                               f.data() + (i + 1) * feature_dim_);
    return rows;
}

namespace {

double heldout_accuracy_of(const FeatureNet& net, const TrainSet& data,
                           const std::vector<int64_t>& idx) {
    int64_t hit = 0;
    const int64_t chunk = 64;
    NoGradGuard guard;
    for (size_t lo = 0; lo < idx.size(); lo += chunk) {
        std::vector<int64_t> part(
            idx.begin() + static_cast<int64_t>(lo),
            idx.begin() + static_cast<int64_t>(
                              std::min(lo + chunk, idx.size())));
        Tensor lg = net.logits(batch_images(data, part));
        for (size_t k = 0; k < part.size(); ++k) {
            const float* r = lg.data() + static_cast<int64_t>(k) *
                                             FeatureNet::kClasses;
            int best = 0;
            for (int c = 1; c < FeatureNet::kClasses; ++c)
                if (r[c] > r[best]) best = c;
            if (best ==
                expression_class(data.aus[static_cast<size_t>(part[k])]))
                ++hit;
        }
    }
    return idx.empty() ? 0.0
                       : static_cast<double>(hit) /
                             static_cast<double>(idx.size());
}

}  // namespace

FeatureNet train_feature_net(const TrainSet& data, uint64_t seed) {
    check(data.size() >= 16, "train_feature_net: need at least 16 samples, got ",
          data.size());
    const Image& first = data.images[0];
    Rng init = Rng::with_stream(seed, 21);
    FeatureNet net(first.h, first.c, init);

    Rng order = Rng::with_stream(seed, 22);
    std::vector<int64_t> perm(static_cast<size_t>(data.size()));
    std::iota(perm.begin(), perm.end(), 0);
    for (int64_t i = data.size() - 1; i > 0; --i)
        std::swap(perm[static_cast<size_t>(i)],
                  perm[static_cast<size_t>(
                      order.next_index(static_cast<uint64_t>(i + 1)))]);
    const int64_t n_hold = std::max<int64_t>(data.size() / 5, 1);
    std::vector<int64_t> hold(perm.begin(), perm.begin() + n_hold);
    std::vector<int64_t> train(perm.begin() + n_hold, perm.end());

    Adam opt(0.9, 0.999);
    const int64_t batch = 32;
    const int64_t max_epochs = 20;
    for (int64_t epoch = 0; epoch < max_epochs; ++epoch) {
        for (int64_t i = static_cast<int64_t>(train.size()) - 1; i > 0; --i)
            std::swap(train[static_cast<size_t>(i)],
                      train[static_cast<size_t>(
                          order.next_index(static_cast<uint64_t>(i + 1)))]);
        for (size_t lo = 0; lo < train.size(); lo += batch) {
            std::vector<int64_t> bi(
                train.begin() + static_cast<int64_t>(lo),
                train.begin() + static_cast<int64_t>(std::min(
                                    lo + batch, train.size())));
            std::vector<int> labels(bi.size());
            for (size_t k = 0; k < bi.size(); ++k)
                labels[k] =
                    expression_class(data.aus[static_cast<size_t>(bi[k])]);
            net.params().zero_grads();
            Tensor loss =
                cross_entropy_logits(net.logits(batch_images(data, bi)), labels);
            backward(loss);
            opt.step(net.params(), 2e-3);
        }
        net.heldout_accuracy = heldout_accuracy_of(net, data, hold);
        if (net.heldout_accuracy >= 0.92) break;  // comfortably above the bar
    }
    return net;
}

double inception_score(const std::vector<std::vector<double>>& probs) {
    check(!probs.empty(), "inception_score: empty probability set");
    const size_t c = probs[0].size();
    check(c >= 1, "inception_score: rows must have at least one class");
    std::vector<double> marginal(c, 0.0);
    for (const std::vector<double>& row : probs) {
        check(row.size() == c, "inception_score: ragged rows (", row.size(),
              " vs ", c, ")");
        double sum = 0.0;
        for (double p : row) sum += p;
        check(std::fabs(sum - 1.0) <= 1e-5,
              "inception_score: row sums to ", sum, ", expected 1");
        for (size_t k = 0; k < c; ++k) marginal[k] += row[k];
    }
    for (double& m : marginal) m /= static_cast<double>(probs.size());

    double mean_kl = 0.0;
    for (const std::vector<double>& row : probs) {
        double kl = 0.0;
        for (size_t k = 0; k < c; ++k)
            if (row[k] > 0.0)
                kl += row[k] * (std::log(std::max(row[k], 1e-12)) -
                                std::log(std::max(marginal[k], 1e-12)));
        mean_kl += kl;
    }
    mean_kl /= static_cast<double>(probs.size());
    return std::exp(mean_kl);
}

GaussianStats gaussian_stats(const std::vector<std::vector<float>>& features) {
    check(features.size() >= 2,
          "gaussian_stats: need at least two feature rows, got ",
          features.size());
    const size_t f = features[0].size();
    GaussianStats s;
    s.f = static_cast<int64_t>(f);
    s.mu.assign(f, 0.0);
    for (const std::vector<float>& row : features) {
        check(row.size() == f, "gaussian_stats: ragged feature rows");
        for (size_t i = 0; i < f; ++i) s.mu[i] += row[i];
    }
    const double n = static_cast<double>(features.size());
    for (double& m : s.mu) m /= n;

    s.cov.assign(f * f, 0.0);
    for (const std::vector<float>& row : features)
        for (size_t i = 0; i < f; ++i) {
            const double di = row[i] - s.mu[i];
            for (size_t j = i; j < f; ++j)
                s.cov[i * f + j] += di * (row[j] - s.mu[j]);
        }
    for (size_t i = 0; i < f; ++i)
        for (size_t j = i; j < f; ++j) {
            s.cov[i * f + j] /= (n - 1.0);  // unbiased normalization
            s.cov[j * f + i] = s.cov[i * f + j];
        }
    return s;
}

double fid(const GaussianStats& a, const GaussianStats& b) {
    check(a.f == b.f, "fid: feature sizes differ (", a.f, " vs ", b.f, ")");
    check(a.f >= 1, "fid: empty stats");
    auto finite = [](const GaussianStats& s) {
        for (double v : s.mu)
            if (!std::isfinite(v)) return false;
        for (double v : s.cov)
            if (!std::isfinite(v)) return false;
        return true;
    };
    check(finite(a) && finite(b), "fid: non-finite statistics");

    const int64_t f = a.f;
    Eigen::MatrixXd ca(f, f), cb(f, f);
    for (int64_t i = 0; i < f; ++i)
        for (int64_t j = 0; j < f; ++j) {
            ca(i, j) = a.cov[static_cast<size_t>(i * f + j)];
            cb(i, j) = b.cov[static_cast<size_t>(i * f + j)];
        }

    double dmu = 0.0;
    for (int64_t i = 0; i < f; ++i) {
        const double d = a.mu[static_cast<size_t>(i)] -
                         b.mu[static_cast<size_t>(i)];
        dmu += d * d;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(ca * cb, false);
    double sqrt_sum = 0.0;
    for (int64_t i = 0; i < f; ++i) {
        // the product of two PSD matrices has real nonnegative spectrum;
        // anything below zero here is numerics and gets clamped away
        const double lambda = std::max(es.eigenvalues()[i].real(), 0.0);
        sqrt_sum += std::sqrt(lambda);
    }

    // the exact value is a squared distance, hence nonnegative; eigenvalue
    // round-off on near-identical stats can land slightly below zero
    return std::max(dmu + ca.trace() + cb.trace() - 2.0 * sqrt_sum, 0.0);
}

namespace {

template <size_t K>
double array_l2(const std::array<float, K>& p, const std::array<float, K>& q) {
    double s = 0.0;
    for (size_t i = 0; i < K; ++i) {
        const double d = static_cast<double>(p[i]) - q[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

double acd(const std::vector<Image>& inputs,
           const std::vector<Image>& outputs) {
    check(inputs.size() == outputs.size(),
          "acd: batch sizes differ (", inputs.size(), " vs ", outputs.size(),
          ")");
    check(!inputs.empty(), "acd: empty batch");
    double acc = 0.0;
    for (size_t i = 0; i < inputs.size(); ++i)
        acc += array_l2(extract_identity(inputs[i]),
                        extract_identity(outputs[i]));
    return acc / static_cast<double>(inputs.size());
}

double expression_distance(const std::vector<Image>& generated,
                           const std::vector<AuVec>& targets) {
    check(generated.size() == targets.size(),
          "expression_distance: batch sizes differ (", generated.size(),
          " vs ", targets.size(), ")");
    check(!generated.empty(), "expression_distance: empty batch");
    double acc = 0.0;
    for (size_t i = 0; i < generated.size(); ++i)
        acc += array_l2(extract_au(generated[i]), targets[i]);
    return acc / static_cast<double>(generated.size());
}

double ssim(const Image& x, const Image& y) {
    check(x.c == y.c && x.h == y.h && x.w == y.w, "ssim: shape mismatch (",
          x.c, "x", x.h, "x", x.w, " vs ", y.c, "x", y.h, "x", y.w, ")");
    const int64_t win = 8;
    check(x.h >= win && x.w >= win, "ssim: image smaller than the ", win, "x",
          win, " window");
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const double area = static_cast<double>(win * win);

    double total = 0.0;
    int64_t windows = 0;
    for (int64_t ch = 0; ch < x.c; ++ch)
        for (int64_t i = 0; i + win <= x.h; ++i)
            for (int64_t j = 0; j + win <= x.w; ++j) {
                double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
                for (int64_t a = 0; a < win; ++a)
                    for (int64_t b = 0; b < win; ++b) {
                        const double vx = x.at(ch, i + a, j + b);
                        const double vy = y.at(ch, i + a, j + b);
                        sx += vx;
                        sy += vy;
                        sxx += vx * vx;
                        syy += vy * vy;
                        sxy += vx * vy;
                    }
                const double mx = sx / area, my = sy / area;
                const double vx = sxx / area - mx * mx;
                const double vy = syy / area - my * my;
                const double cov = sxy / area - mx * my;
                total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                         ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++windows;
            }
    return total / static_cast<double>(windows);
}

PsnrL1 psnr_l1(const Image& x, const Image& y) {
    check(x.c == y.c && x.h == y.h && x.w == y.w, "psnr_l1: shape mismatch (",
          x.c, "x", x.h, "x", x.w, " vs ", y.c, "x", y.h, "x", y.w, ")");
    double se = 0.0, ae = 0.0;
    const size_t n = x.data.size();
    for (size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(x.data[i]) - y.data[i];
        se += d * d;
        ae += std::fabs(d);
    }
    PsnrL1 out;
    out.l1 = ae / static_cast<double>(n);
    const double mse = se / static_cast<double>(n);
    out.psnr = mse < 1e-10 ? 100.0 : 10.0 * std::log10(1.0 / mse);
    return out;
}

std::string MetricReport::csv_header() {
    return "run,step,is,fid,acd,ssim,psnr,l1,ed";
}

std::string MetricReport::csv_row(const std::string& run,
                                  int64_t step) const {
    std::ostringstream os;
    os << run << ',' << step;
    const double vals[] = {is_score, fid, acd, ssim, psnr, l1, ed};
    os.precision(9);
    for (double v : vals) {
        os << ',';
        if (std::isfinite(v))
            os << v;
        else
            os << "na";
    }
    return os.str();
}

}  // namespace wavexp
