// Copyright 2026 The SPA Harness Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Image augmentation operators. Each operator is a pure function of its
// inputs and an RngStream; the `*_with` variants take the random draws as
// explicit arguments. Images are CHW floats in [0, 1]. Fractional pixel
// sizes and offsets round half away from zero.

#ifndef SPA_AUGMENTATION_HPP
#define SPA_AUGMENTATION_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spa/rng.hpp"
#include "spa/sample.hpp"

namespace spa::aug {

enum class Technique { flip, crop, translation, rotation, cutout, random_erasing, mixup, ricap };

inline constexpr std::array<std::pair<Technique, const char*>, 8> kTechniqueNames{{
    {Technique::flip, "flip"},
    {Technique::crop, "crop"},
    {Technique::translation, "translation"},
    {Technique::rotation, "rotation"},
    {Technique::cutout, "cutout"},
    {Technique::random_erasing, "random_erasing"},
    {Technique::mixup, "mixup"},
    {Technique::ricap, "ricap"},
}};

inline std::string to_string(Technique t) {
  for (const auto& [tech, name] : kTechniqueNames)
    if (tech == t) return name;
  return "?";
}

/// Numeric parameters for every technique; each AugConfig only reads the
/// fields of its own technique.
struct AugParams {
  double flip_probability = 0.5;  // per axis
  double crop_fraction = 0.8;
  double translate_t_min = -25.0;
  double translate_t_max = 25.0;
  double rotate_min_deg = 0.0;
  double rotate_max_deg = 360.0;
  double cutout_fraction = 0.5;
  double erase_area_min = 0.02;
  double erase_area_max = 0.4;
  double erase_aspect_min = 0.3;
  double erase_aspect_max = 3.0;
  int erase_max_attempts = 32;
  double beta_alpha = 1.0;  // mixup and RICAP
};

struct AugConfig {
  Technique technique;
  AugParams params{};
};

inline void validate(const AugParams& p) {
  auto bad = [](const std::string& what) { throw std::invalid_argument("augmentation: " + what); };
  if (!(p.flip_probability >= 0.0 && p.flip_probability <= 1.0)) bad("flip probability outside [0,1]");
  if (!(p.crop_fraction > 0.0 && p.crop_fraction <= 1.0)) bad("crop fraction outside (0,1]");
  if (!(p.translate_t_min < p.translate_t_max)) bad("degenerate translation range");
  if (!(p.rotate_min_deg < p.rotate_max_deg)) bad("degenerate rotation range");
  if (!(p.cutout_fraction > 0.0 && p.cutout_fraction <= 1.0)) bad("cutout fraction outside (0,1]");
  if (!(p.erase_area_min > 0.0 && p.erase_area_min < p.erase_area_max && p.erase_area_max <= 1.0))
    bad("erasing area range must satisfy 0 < min < max <= 1");
  if (!(p.erase_aspect_min > 0.0 && p.erase_aspect_min < p.erase_aspect_max))
    bad("erasing aspect range must satisfy 0 < min < max");
  if (p.erase_max_attempts < 1) bad("erasing needs at least one attempt");
  if (!(p.beta_alpha > 0.0)) bad("beta alpha must be > 0");
}

/// Ordered operators applied to each flagged sample.
class AugPipeline {
 public:
  AugPipeline() = default;
  explicit AugPipeline(std::vector<AugConfig> ops) : ops_(std::move(ops)) {
    int label_mixers = 0;
    for (const auto& op : ops_) {
      validate(op.params);
      if (op.technique == Technique::mixup || op.technique == Technique::ricap) ++label_mixers;
    }
    if (label_mixers > 1)
      throw std::invalid_argument("augmentation pipeline may contain at most one of mixup, ricap");
  }

  /// Parses "flip,crop"-style lists. Empty string and "none" give an empty
  /// pipeline.
  static AugPipeline parse(const std::string& spec, const AugParams& params = {}) {
    std::vector<AugConfig> ops;
    if (spec.empty() || spec == "none") return AugPipeline(ops);
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
      const auto b = token.find_first_not_of(" \t");
      const auto e = token.find_last_not_of(" \t");
      token = b == std::string::npos ? "" : token.substr(b, e - b + 1);
      bool found = false;
      for (const auto& [tech, name] : kTechniqueNames)
        if (token == name) {
          ops.push_back({tech, params});
          found = true;
        }
      if (!found) throw std::invalid_argument("unknown augmentation technique '" + token + "'");
    }
    return AugPipeline(std::move(ops));
  }

  const std::vector<AugConfig>& ops() const { return ops_; }
  bool empty() const { return ops_.empty(); }
  std::size_t partners_needed() const {
    for (const auto& op : ops_) {
      if (op.technique == Technique::mixup) return 1;
      if (op.technique == Technique::ricap) return 3;
    }
    return 0;
  }
  std::string str() const {
    std::string s;
    for (const auto& op : ops_) s += (s.empty() ? "" : ",") + to_string(op.technique);
    return s;
  }

 private:
  std::vector<AugConfig> ops_;
};

namespace detail {

inline float lerp_exact(float a, float b, double f) {
  if (f == 0.0 || a == b) return a;
  const double v = a + f * (static_cast<double>(b) - a);
  return static_cast<float>(std::clamp(v, static_cast<double>(std::min(a, b)),
                                       static_cast<double>(std::max(a, b))));
}

// Bilinear sample of one channel plane at (sy, sx); pixels outside read 0.
inline float bilinear(const float* plane, std::size_t h, std::size_t w, double sy, double sx) {
  const double fy0 = std::floor(sy), fx0 = std::floor(sx);
  const long y0 = static_cast<long>(fy0), x0 = static_cast<long>(fx0);
  const double fy = sy - fy0, fx = sx - fx0;
  auto at = [&](long y, long x) -> float {
    if (y < 0 || x < 0 || y >= static_cast<long>(h) || x >= static_cast<long>(w)) return 0.0f;
    return plane[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };
  const float top = lerp_exact(at(y0, x0), fx == 0.0 ? 0.0f : at(y0, x0 + 1), fx);
  if (fy == 0.0) return top;
  const float bottom = lerp_exact(at(y0 + 1, x0), fx == 0.0 ? 0.0f : at(y0 + 1, x0 + 1), fx);
  return lerp_exact(top, bottom, fy);
}

inline long round_half_away(double v) { return std::lround(v); }

// sin/cos of an angle in degrees, exact at multiples of 90.
inline std::pair<double, double> sincos_deg(double deg) {
  const double r = std::fmod(deg, 360.0);
  const double norm = r < 0 ? r + 360.0 : r;
  if (norm == 0.0) return {0.0, 1.0};
  if (norm == 90.0) return {1.0, 0.0};
  if (norm == 180.0) return {0.0, -1.0};
  if (norm == 270.0) return {-1.0, 0.0};
  const double rad = norm * M_PI / 180.0;
  return {std::sin(rad), std::cos(rad)};
}

inline void check_same_shape(const Sample& a, const Sample& b, const char* op) {
  if (a.image.shape() != b.image.shape() || a.label.size() != b.label.size())
    throw std::invalid_argument(std::string(op) + ": sample and partner shapes differ (" +
                                shape_str(a.image.shape()) + " vs " +
                                shape_str(b.image.shape()) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// flip

inline Sample flip_with(const Sample& s, bool horizontal, bool vertical) {
  Sample out = s;
  const std::size_t c = s.channels(), h = s.height(), w = s.width();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        out.px(ch, y, x) = s.px(ch, vertical ? h - 1 - y : y, horizontal ? w - 1 - x : x);
  return out;
}

inline Sample flip(const Sample& s, RngStream& rng, const AugParams& p = {}) {
  const bool h = rng.bernoulli(p.flip_probability);
  const bool v = rng.bernoulli(p.flip_probability);
  return flip_with(s, h, v);
}

// ---------------------------------------------------------------------------
// crop and resize

inline std::size_t crop_side(std::size_t side, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(side)));
}

/// Crops a (crop_h x crop_w) window at (top, left) and resizes it back to the
/// full frame with bilinear interpolation (half-pixel centres).
inline Sample crop_resize_with(const Sample& s, std::size_t top, std::size_t left,
                               std::size_t crop_h, std::size_t crop_w) {
  const std::size_t c = s.channels(), h = s.height(), w = s.width();
  if (crop_h == 0 || crop_w == 0 || top + crop_h > h || left + crop_w > w)
    throw std::invalid_argument("crop_resize: crop window outside image");
  Sample out = s;
  const double sy_scale = static_cast<double>(crop_h) / static_cast<double>(h);
  const double sx_scale = static_cast<double>(crop_w) / static_cast<double>(w);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const float* plane = s.image.data() + ch * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      double sy = (static_cast<double>(y) + 0.5) * sy_scale - 0.5;
      sy = std::clamp(sy, 0.0, static_cast<double>(crop_h - 1));
      for (std::size_t x = 0; x < w; ++x) {
        double sx = (static_cast<double>(x) + 0.5) * sx_scale - 0.5;
        sx = std::clamp(sx, 0.0, static_cast<double>(crop_w - 1));
        out.px(ch, y, x) = detail::bilinear(plane, h, w, static_cast<double>(top) + sy,
                                            static_cast<double>(left) + sx);
      }
    }
  }
  return out;
}

inline Sample crop_resize(const Sample& s, RngStream& rng, const AugParams& p = {}) {
  const std::size_t ch = crop_side(s.height(), p.crop_fraction);
  const std::size_t cw = crop_side(s.width(), p.crop_fraction);
  if (ch < 1 || cw < 1)
    throw std::invalid_argument("crop_resize: image " + shape_str(s.image.shape()) +
                                " too small for a 1-pixel crop");
  const std::size_t top = rng.below(s.height() - ch + 1);
  const std::size_t left = rng.below(s.width() - cw + 1);
  return crop_resize_with(s, top, left, ch, cw);
}

// ---------------------------------------------------------------------------
// translation

/// Pixel offset for translation parameter t on an image side of `side`.
inline long translation_offset(double t, std::size_t side) {
  return detail::round_half_away(t * static_cast<double>(side) / 128.0);
}

/// Shifts content by (dy, dx) pixels; vacated pixels become 0.
inline Sample translate_with(const Sample& s, long dy, long dx) {
  const std::size_t c = s.channels(), h = s.height(), w = s.width();
  Sample out = s;
  out.image.fill(0.0f);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y) {
      const long sy = static_cast<long>(y) - dy;
      if (sy < 0 || sy >= static_cast<long>(h)) continue;
      for (std::size_t x = 0; x < w; ++x) {
        const long sx = static_cast<long>(x) - dx;
        if (sx < 0 || sx >= static_cast<long>(w)) continue;
        out.px(ch, y, x) = s.px(ch, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
      }
    }
  return out;
}

inline Sample translate(const Sample& s, RngStream& rng, const AugParams& p = {}) {
  const double tx = rng.uniform(p.translate_t_min, p.translate_t_max);
  const double ty = rng.uniform(p.translate_t_min, p.translate_t_max);
  return translate_with(s, translation_offset(ty, s.height()), translation_offset(tx, s.width()));
}

// ---------------------------------------------------------------------------
// rotation

/// Shrink factor that fits a square rotated by `deg` back into its frame.
inline double rotation_scale(double deg) {
  const auto [sn, cs] = detail::sincos_deg(deg);
  return 1.0 / (std::abs(sn) + std::abs(cs));
}

/// Rotates counter-clockwise (as displayed, y down) about the image centre by
/// `deg`, shrinking by rotation_scale(deg). Bilinear sampling; outside reads 0.
inline Sample rotate_with(const Sample& s, double deg) {
  const std::size_t c = s.channels(), h = s.height(), w = s.width();
  const auto [sn, cs] = detail::sincos_deg(deg);
  const double inv_scale = 1.0 / rotation_scale(deg);
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  Sample out = s;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const float* plane = s.image.data() + ch * h * w;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        // Inverse map: output offset rotated back by -deg, then enlarged.
        const double u = static_cast<double>(x) - cx;
        const double v = static_cast<double>(y) - cy;
        const double su = (cs * u - sn * v) * inv_scale;
        const double sv = (sn * u + cs * v) * inv_scale;
        out.px(ch, y, x) = detail::bilinear(plane, h, w, cy + sv, cx + su);
      }
  }
  return out;
}

inline Sample rotate(const Sample& s, RngStream& rng, const AugParams& p = {}) {
  return rotate_with(s, rng.uniform(p.rotate_min_deg, p.rotate_max_deg));
}

// ---------------------------------------------------------------------------
// cutout

struct Rect {
  long top = 0, left = 0;
  long height = 0, width = 0;
};

/// Square mask of the configured fraction of each side, centred at
/// (cy, cx) and clipped to the frame.
inline Rect cutout_rect(std::size_t h, std::size_t w, std::size_t cy, std::size_t cx,
                        double fraction = 0.5) {
  const long mh = detail::round_half_away(fraction * static_cast<double>(h));
  const long mw = detail::round_half_away(fraction * static_cast<double>(w));
  const long top = static_cast<long>(cy) - mh / 2;
  const long left = static_cast<long>(cx) - mw / 2;
  const long y0 = std::max(top, 0L), x0 = std::max(left, 0L);
  const long y1 = std::min(top + mh, static_cast<long>(h));
  const long x1 = std::min(left + mw, static_cast<long>(w));
  return {y0, x0, std::max(y1 - y0, 0L), std::max(x1 - x0, 0L)};
}

inline Sample fill_rect(const Sample& s, const Rect& r, float value) {
  Sample out = s;
  for (std::size_t ch = 0; ch < s.channels(); ++ch)
    for (long y = r.top; y < r.top + r.height; ++y)
      for (long x = r.left; x < r.left + r.width; ++x)
        out.px(ch, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = value;
  return out;
}

inline Sample cutout_with(const Sample& s, std::size_t cy, std::size_t cx,
                          double fraction = 0.5) {
  return fill_rect(s, cutout_rect(s.height(), s.width(), cy, cx, fraction), 0.0f);
}

inline Sample cutout(const Sample& s, RngStream& rng, const AugParams& p = {}) {
  const std::size_t cy = rng.below(s.height());
  const std::size_t cx = rng.below(s.width());
  return cutout_with(s, cy, cx, p.cutout_fraction);
}

// ---------------------------------------------------------------------------
// random erasing

/// Mask (height, width) for area fraction `area` and aspect ratio `aspect`.
inline std::pair<long, long> erase_size(double area, double aspect, std::size_t h,
                                        std::size_t w) {
  const double target = area * static_cast<double>(h * w);
  return {detail::round_half_away(std::sqrt(target * aspect)),
          detail::round_half_away(std::sqrt(target / aspect))};
}

/// Draws a rectangle that fits inside the frame, or nothing once the attempt
/// budget is spent.
inline std::optional<Rect> draw_erase_rect(std::size_t h, std::size_t w, RngStream& rng,
                                           const AugParams& p = {}) {
  for (int attempt = 0; attempt < p.erase_max_attempts; ++attempt) {
    const double area = rng.uniform(p.erase_area_min, p.erase_area_max);
    const double aspect = rng.uniform(p.erase_aspect_min, p.erase_aspect_max);
    const auto [eh, ew] = erase_size(area, aspect, h, w);
    if (eh < 1 || ew < 1 || eh > static_cast<long>(h) || ew > static_cast<long>(w)) continue;
    const long top = static_cast<long>(rng.below(h - static_cast<std::size_t>(eh) + 1));
    const long left = static_cast<long>(rng.below(w - static_cast<std::size_t>(ew) + 1));
    return Rect{top, left, eh, ew};
  }
  return std::nullopt;
}

/// Fills `r` with i.i.d. U[0, 1) values, channel-major draw order.
inline Sample erase_with(const Sample& s, const Rect& r, RngStream& rng) {
  Sample out = s;
  for (std::size_t ch = 0; ch < s.channels(); ++ch)
    for (long y = r.top; y < r.top + r.height; ++y)
      for (long x = r.left; x < r.left + r.width; ++x)
        out.px(ch, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
            static_cast<float>(rng.uniform());
  return out;
}

inline Sample random_erasing(const Sample& s, RngStream& rng, const AugParams& p = {}) {
  const auto r = draw_erase_rect(s.height(), s.width(), rng, p);
  return r ? erase_with(s, *r, rng) : s;
}

// ---------------------------------------------------------------------------
// mixup

inline Sample mixup_with(const Sample& a, const Sample& b, double m) {
  detail::check_same_shape(a, b, "mixup");
  Sample out = a;
  for (std::size_t i = 0; i < a.image.size(); ++i)
    out.image[i] = static_cast<float>(m * a.image[i] + (1.0 - m) * b.image[i]);
  for (std::size_t k = 0; k < a.label.size(); ++k)
    out.label[k] = static_cast<float>(m * a.label[k] + (1.0 - m) * b.label[k]);
  return out;
}

inline Sample mixup(const Sample& a, const Sample& b, RngStream& rng, const AugParams& p = {}) {
  return mixup_with(a, b, rng.beta(p.beta_alpha, p.beta_alpha));
}

// ---------------------------------------------------------------------------
// RICAP

/// Source offsets (top, left) for the four patches, in the order
/// sample, partner 0 (top-right), partner 1 (bottom-left), partner 2
/// (bottom-right).
using PatchOffsets = std::array<std::pair<std::size_t, std::size_t>, 4>;

/// Patch extents for a boundary at column `bw`, row `bh`.
inline std::array<std::pair<std::size_t, std::size_t>, 4> ricap_patch_sizes(
    std::size_t h, std::size_t w, std::size_t bh, std::size_t bw) {
  return {{{bh, bw}, {bh, w - bw}, {h - bh, bw}, {h - bh, w - bw}}};
}

inline Sample ricap_with(const Sample& a, std::span<const Sample> partners, std::size_t bh,
                         std::size_t bw, const PatchOffsets& offsets) {
  if (partners.size() != 3) throw std::invalid_argument("ricap: needs exactly 3 partners");
  for (const auto& p : partners) detail::check_same_shape(a, p, "ricap");
  const std::size_t c = a.channels(), h = a.height(), w = a.width();
  if (bh > h || bw > w) throw std::invalid_argument("ricap: boundary outside image");
  const std::array<const Sample*, 4> src{&a, &partners[0], &partners[1], &partners[2]};
  const auto sizes = ricap_patch_sizes(h, w, bh, bw);
  const std::array<std::pair<std::size_t, std::size_t>, 4> dest{{{0, 0}, {0, bw}, {bh, 0}, {bh, bw}}};

  Sample out = a;
  std::vector<double> label(a.label.size(), 0.0);
  const double area_total = static_cast<double>(h * w);
  for (std::size_t q = 0; q < 4; ++q) {
    const auto [ph, pw] = sizes[q];
    if (ph == 0 || pw == 0) continue;
    const auto [oy, ox] = offsets[q];
    if (oy + ph > h || ox + pw > w) throw std::invalid_argument("ricap: patch offset outside source");
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < ph; ++y)
        for (std::size_t x = 0; x < pw; ++x)
          out.px(ch, dest[q].first + y, dest[q].second + x) = src[q]->px(ch, oy + y, ox + x);
    const double weight = static_cast<double>(ph * pw) / area_total;
    for (std::size_t k = 0; k < label.size(); ++k) label[k] += weight * src[q]->label[k];
  }
  for (std::size_t k = 0; k < label.size(); ++k) out.label[k] = static_cast<float>(label[k]);
  return out;
}

inline Sample ricap(const Sample& a, std::span<const Sample> partners, RngStream& rng,
                    const AugParams& p = {}) {
  const std::size_t h = a.height(), w = a.width();
  const double beta_w = rng.beta(p.beta_alpha, p.beta_alpha);
  const double beta_h = rng.beta(p.beta_alpha, p.beta_alpha);
  const auto bw = static_cast<std::size_t>(detail::round_half_away(static_cast<double>(w) * beta_w));
  const auto bh = static_cast<std::size_t>(detail::round_half_away(static_cast<double>(h) * beta_h));
  const auto sizes = ricap_patch_sizes(h, w, bh, bw);
  PatchOffsets offsets{};
  for (std::size_t q = 0; q < 4; ++q) {
    const auto [ph, pw] = sizes[q];
    if (ph == 0 || pw == 0) continue;
    offsets[q] = {rng.below(h - ph + 1), rng.below(w - pw + 1)};
  }
  return ricap_with(a, partners, bh, bw, offsets);
}

// ---------------------------------------------------------------------------
// pipeline application

/// Applies one configured operator. `partners` must hold at least as many
/// samples as the technique consumes.
inline Sample apply_op(const AugConfig& op, const Sample& s, std::span<const Sample> partners,
                       RngStream& rng) {
  switch (op.technique) {
    case Technique::flip: return flip(s, rng, op.params);
    case Technique::crop: return crop_resize(s, rng, op.params);
    case Technique::translation: return translate(s, rng, op.params);
    case Technique::rotation: return rotate(s, rng, op.params);
    case Technique::cutout: return cutout(s, rng, op.params);
    case Technique::random_erasing: return random_erasing(s, rng, op.params);
    case Technique::mixup:
      if (partners.empty()) throw std::invalid_argument("mixup: no partner supplied");
      return mixup(s, partners[0], rng, op.params);
    case Technique::ricap:
      if (partners.size() < 3) throw std::invalid_argument("ricap: needs 3 partners");
      return ricap(s, partners.first(3), rng, op.params);
  }
  throw std::logic_error("unhandled technique");
}

/// Per-sample augmentation streams keyed by (seed, epoch, step, index), so
/// results do not depend on which samples are flagged or on scheduling.
struct BatchStreams {
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;

  RngStream for_sample(std::size_t index) const {
    return RngStream::derive(seed, StreamId::augment, {epoch, step, index});
  }
};

/// Runs `pipeline` on every sample whose mask entry is set. Partners for
/// mixup/RICAP are drawn uniformly (with replacement) from the un-augmented
/// batch; unflagged samples are left bit-identical.
inline Batch apply_pipeline(const Batch& batch, const std::vector<bool>& mask,
                            const AugPipeline& pipeline, const BatchStreams& streams) {
  if (mask.size() != batch.size())
    throw std::invalid_argument("apply_pipeline: mask length " + std::to_string(mask.size()) +
                                " != batch size " + std::to_string(batch.size()));
  Batch out = batch;
  if (pipeline.empty()) return out;
  const std::size_t n_partners = pipeline.partners_needed();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!mask[i]) continue;
    RngStream rng = streams.for_sample(i);
    std::vector<Sample> partners;
    for (std::size_t p = 0; p < n_partners; ++p) partners.push_back(batch.sample(rng.below(batch.size())));
    Sample s = batch.sample(i);
    for (const auto& op : pipeline.ops()) s = apply_op(op, s, partners, rng);
    out.set_sample(i, s);
  }
  return out;
}

}  // namespace spa::aug

#endif  // SPA_AUGMENTATION_HPP
