#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "softwarp/error.hpp"
#include "softwarp/tensor.hpp"

namespace softwarp {

/// Weights of the four generator objective terms. Defaults are a convention of this
/// library (adversarial 1, the three reconstruction terms 10).
struct LossWeights {
  double lambda_adv = 1.0;
  double lambda_pixel = 10.0;
  double lambda_perceptual = 10.0;
  double lambda_ph = 10.0;

  void validate() const {
    for (double v : {lambda_adv, lambda_pixel, lambda_perceptual, lambda_ph}) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("LossWeights: weights must be finite and non-negative");
    }
  }
};

/// Multi-scale feature builder: level 0 is the input, level i is i-fold 2x average pooling.
class PyramidExtractor {
 public:
  PyramidExtractor() : PyramidExtractor(std::vector<double>{1.0, 1.0, 1.0}) {}

  explicit PyramidExtractor(std::vector<double> alphas) : alphas_(std::move(alphas)) {
    if (alphas_.empty()) throw InvalidArgument("PyramidExtractor: need at least one level");
    for (double a : alphas_) {
      if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("PyramidExtractor: alphas must be finite and non-negative");
    }
  }

  int levels() const noexcept { return static_cast<int>(alphas_.size()); }
  std::span<const double> alphas() const noexcept { return alphas_; }

  /// 2x2 mean pooling with stride 2; a trailing odd row or column is dropped.
  static ImageTensor pool(const ImageTensor& t) {
    const int h = t.height() / 2;
    const int w = t.width() / 2;
    if (h == 0 || w == 0) throw ShapeError("PyramidExtractor: image too small to pool");
    ImageTensor out(h, w, t.channels());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < t.channels(); ++c) {
          out.at(y, x, c) = 0.25 * ((t.at(2 * y, 2 * x, c) + t.at(2 * y, 2 * x + 1, c)) +
                                    (t.at(2 * y + 1, 2 * x, c) + t.at(2 * y + 1, 2 * x + 1, c)));
        }
      }
    }
    return out;
  }

  /// Throws ShapeError when levels > log2(min(height, width)).
  void check_fits(const ImageTensor& t) const {
    int min_dim = std::min(t.height(), t.width());
    int max_levels = 0;
    while (min_dim >= 2) {
      min_dim /= 2;
      ++max_levels;
    }
    if (levels() > max_levels) {
      throw ShapeError("PyramidExtractor: image too small for " + std::to_string(levels()) + " levels");
    }
  }

  std::vector<ImageTensor> features(const ImageTensor& t) const {
    check_fits(t);
    std::vector<ImageTensor> out;
    out.push_back(t);
    for (int i = 1; i < levels(); ++i) out.push_back(pool(out.back()));
    return out;
  }

 private:
  std::vector<double> alphas_;
};

namespace detail {

inline double mean_abs_diff(const ImageTensor& a, const ImageTensor& b) {
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(a.data()[i] - b.data()[i]);
  return pairwise_sum(diff) / static_cast<double>(diff.size());
}

inline void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what) {
  if (a.empty() || !a.same_shape(b)) throw ShapeError(std::string(what) + ": tensor shapes differ");
}

}  // namespace detail

/// Mean absolute difference over all samples.
inline double pixel_loss(const ImageTensor& generated, const ImageTensor& target) {
  detail::require_same_shape(generated, target, "pixel_loss");
  return detail::mean_abs_diff(generated, target);
}

/// sum_i alpha_i * meanL1(F_i(generated), F_i(target)) over the extractor's pyramid levels.
inline double pyramid_loss(const ImageTensor& generated, const ImageTensor& target, const PyramidExtractor& extractor) {
  detail::require_same_shape(generated, target, "pyramid_loss");
  extractor.check_fits(generated);
  double total = 0.0;
  ImageTensor a = generated;
  ImageTensor b = target;
  for (int i = 0; i < extractor.levels(); ++i) {
    if (i > 0) {
      a = PyramidExtractor::pool(a);
      b = PyramidExtractor::pool(b);
    }
    total += extractor.alphas()[static_cast<std::size_t>(i)] * detail::mean_abs_diff(a, b);
  }
  return total;
}

/// Same pyramid machinery with its own weight vector; stands in for a pretrained feature network.
inline double perceptual_loss(const ImageTensor& generated, const ImageTensor& target, const PyramidExtractor& extractor) {
  return pyramid_loss(generated, target, extractor);
}

enum class AdversarialSide { kGenerator, kDiscriminator };

/// Standard GAN cross-entropy terms on discriminator probabilities in (0, 1).
///
/// Discriminator: -mean(log real) - mean(log(1 - fake)). Generator: -mean(log fake).
inline double adversarial_loss(std::span<const double> real_scores, std::span<const double> fake_scores,
                               AdversarialSide side) {
  auto check = [](std::span<const double> s, const char* which) {
    for (double v : s) {
      if (!(v > 0.0 && v < 1.0)) throw InvalidArgument(std::string("adversarial_loss: ") + which + " score outside (0, 1)");
    }
  };
  check(fake_scores, "fake");
  if (fake_scores.empty()) throw InvalidArgument("adversarial_loss: no fake scores");
  auto mean_of = [](std::span<const double> s, auto f) {
    std::vector<double> v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) v[i] = f(s[i]);
    return pairwise_sum(v) / static_cast<double>(v.size());
  };
  if (side == AdversarialSide::kGenerator) {
    return -mean_of(fake_scores, [](double p) { return std::log(p); });
  }
  check(real_scores, "real");
  if (real_scores.empty()) throw InvalidArgument("adversarial_loss: no real scores");
  return -mean_of(real_scores, [](double p) { return std::log(p); }) -
         mean_of(fake_scores, [](double p) { return std::log1p(-p); });
}

/// lambda_adv L_adv + lambda_pixel L_pixel + lambda_perceptual L_perceptual + lambda_ph L_ph.
inline double total_loss(double adv, double pixel, double perceptual, double ph, const LossWeights& w) {
  return w.lambda_adv * adv + w.lambda_pixel * pixel + w.lambda_perceptual * perceptual + w.lambda_ph * ph;
}

}  // namespace softwarp
