#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "softwarp/error.hpp"
#include "softwarp/tensor.hpp"

namespace softwarp {

/// Structural similarity parameters; defaults are the usual 11x11 Gaussian window with
/// sigma 1.5, k1 = 0.01, k2 = 0.03.
struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  void validate() const {
    if (window < 3 || window % 2 == 0) throw InvalidArgument("SsimConfig: window must be odd and >= 3");
    if (!(sigma > 0.0) || !(k1 > 0.0) || !(k2 > 0.0) || !(dynamic_range > 0.0)) {
      throw InvalidArgument("SsimConfig: sigma, k1, k2 and dynamic_range must be positive");
    }
  }
};

/// Normalized 2-D Gaussian weights, row-major window x window.
inline std::vector<double> gaussian_window(const SsimConfig& cfg) {
  const int r = cfg.window / 2;
  std::vector<double> g1(static_cast<std::size_t>(cfg.window));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    g1[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / (2.0 * cfg.sigma * cfg.sigma));
    sum += g1[static_cast<std::size_t>(i + r)];
  }
  for (auto& v : g1) v /= sum;
  std::vector<double> w(static_cast<std::size_t>(cfg.window * cfg.window));
  for (int y = 0; y < cfg.window; ++y) {
    for (int x = 0; x < cfg.window; ++x) {
      w[static_cast<std::size_t>(y * cfg.window + x)] = g1[static_cast<std::size_t>(y)] * g1[static_cast<std::size_t>(x)];
    }
  }
  return w;
}

/// Mean local SSIM over every full window position ("valid" placement), averaged over channels.
///
/// Local statistics use centred Gaussian-weighted moments, and every product is formed
/// symmetrically, so ssim(a, b) == ssim(b, a) bitwise and ssim(a, a) == 1.
inline double ssim(const ImageTensor& a, const ImageTensor& b, const SsimConfig& cfg = {}) {
  cfg.validate();
  if (a.empty() || !a.same_shape(b)) throw ShapeError("ssim: image shapes differ");
  if (a.height() < cfg.window || a.width() < cfg.window) throw ShapeError("ssim: image smaller than the window");
  const auto w = gaussian_window(cfg);
  const double c1 = (cfg.k1 * cfg.dynamic_range) * (cfg.k1 * cfg.dynamic_range);
  const double c2 = (cfg.k2 * cfg.dynamic_range) * (cfg.k2 * cfg.dynamic_range);
  const int n = cfg.window;
  const int oh = a.height() - n + 1;
  const int ow = a.width() - n + 1;

  std::vector<double> per_channel;
  std::vector<double> local(static_cast<std::size_t>(oh) * ow);
  for (int c = 0; c < a.channels(); ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double mu_a = 0.0, mu_b = 0.0;
        for (int j = 0; j < n; ++j) {
          for (int i = 0; i < n; ++i) {
            const double wt = w[static_cast<std::size_t>(j * n + i)];
            mu_a += wt * a.at(y + j, x + i, c);
            mu_b += wt * b.at(y + j, x + i, c);
          }
        }
        double var_a = 0.0, var_b = 0.0, cov = 0.0;
        for (int j = 0; j < n; ++j) {
          for (int i = 0; i < n; ++i) {
            const double wt = w[static_cast<std::size_t>(j * n + i)];
            const double da = a.at(y + j, x + i, c) - mu_a;
            const double db = b.at(y + j, x + i, c) - mu_b;
            var_a += wt * (da * da);
            var_b += wt * (db * db);
            cov += wt * (da * db);
          }
        }
        const double num = (2.0 * (mu_a * mu_b) + c1) * (2.0 * cov + c2);
        const double den = ((mu_a * mu_a + mu_b * mu_b) + c1) * ((var_a + var_b) + c2);
        local[static_cast<std::size_t>(y) * ow + x] = num / den;
      }
    }
    per_channel.push_back(pairwise_sum(local) / static_cast<double>(local.size()));
  }
  return pairwise_sum(per_channel) / static_cast<double>(per_channel.size());
}

/// Mean intersection-over-union across `labels`; labels absent from both maps are skipped.
/// Returns 1.0 when every requested label is absent from both maps.
inline double mean_iou(const SegmentationMap& a, const SegmentationMap& b, std::span<const int> labels) {
  if (!a.same_shape(b)) throw ShapeError("mean_iou: map dimensions differ");
  if (labels.empty()) throw InvalidArgument("mean_iou: empty label subset");
  double sum = 0.0;
  int counted = 0;
  for (int label : labels) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const bool in_a = a.labels()[i] == label;
      const bool in_b = b.labels()[i] == label;
      inter += (in_a && in_b) ? 1 : 0;
      uni += (in_a || in_b) ? 1 : 0;
    }
    if (uni == 0) continue;
    sum += static_cast<double>(inter) / static_cast<double>(uni);
    ++counted;
  }
  return counted == 0 ? 1.0 : sum / counted;
}

/// IoU of two binary masks thresholded at 0.5 (single channel).
inline double mask_iou(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw ShapeError("mask_iou: mask shapes differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool in_a = a.data()[i] >= 0.5;
    const bool in_b = b.data()[i] >= 0.5;
    inter += (in_a && in_b) ? 1 : 0;
    uni += (in_a || in_b) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace softwarp
