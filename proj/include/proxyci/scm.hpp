#pragma once

// Synthetic additive-noise structural causal models with a latent U, a proxy
// W of U, and an optional direct X -> Y edge.
//
//   confounder graph:  U = N_root,  X = f_link(U) + N_link
//   mediator graph:    X = N_root,  U = f_link(X) + N_link
//   both:              W = f_w(U) + N_w
//                      Y = a * f_xy(X) * [edge] + f_y(U) + N_y
//
// The latent U is returned alongside the observed columns for diagnostics only.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "proxyci/error.hpp"
#include "proxyci/random.hpp"

namespace proxyci {

enum class Graph { Confounder, Mediator };
/// Zero is not part of the random menu; it switches a structural term off.
enum class FunctionKind { Linear, Tanh, Sin, Sigmoid, Zero };
enum class NoiseKind { Gaussian, Uniform, Exponential, Gamma };

inline constexpr std::array kFunctionMenu{FunctionKind::Linear, FunctionKind::Tanh, FunctionKind::Sin,
                                          FunctionKind::Sigmoid};
inline constexpr std::array kNoiseMenu{NoiseKind::Gaussian, NoiseKind::Uniform, NoiseKind::Exponential,
                                       NoiseKind::Gamma};

inline double apply(FunctionKind f, double v) noexcept {
  switch (f) {
    case FunctionKind::Linear: return v;
    case FunctionKind::Tanh: return std::tanh(v);
    case FunctionKind::Sin: return std::sin(v);
    case FunctionKind::Sigmoid: return 1.0 / (1.0 + std::exp(-v));
    case FunctionKind::Zero: return 0.0;
  }
  return v;
}

/// Noise law. Gaussian uses `scale` as standard deviation, Uniform draws from
/// [-scale, scale]. Exponential(rate) and Gamma(shape, rate) are shifted by
/// their mean so every draw is zero-mean.
struct Noise {
  NoiseKind kind = NoiseKind::Gaussian;
  double scale = 0.1;
  double rate = 10.0;
  double shape = 2.0;

  static Noise gaussian(double sd) { return {NoiseKind::Gaussian, sd, 10.0, 2.0}; }
  static Noise uniform(double half_width) { return {NoiseKind::Uniform, half_width, 10.0, 2.0}; }
  static Noise exponential(double rate) { return {NoiseKind::Exponential, 0.1, rate, 2.0}; }
  static Noise gamma(double shape, double rate) { return {NoiseKind::Gamma, 0.1, rate, shape}; }

  /// Default member of each family: scale 0.1 (mean 0.1 for the skewed laws).
  static Noise standard(NoiseKind kind) {
    switch (kind) {
      case NoiseKind::Gaussian: return gaussian(0.1);
      case NoiseKind::Uniform: return uniform(0.1);
      case NoiseKind::Exponential: return exponential(10.0);
      case NoiseKind::Gamma: return gamma(2.0, 20.0);
    }
    return gaussian(0.1);
  }

  void validate() const {
    const bool ok = kind == NoiseKind::Gaussian || kind == NoiseKind::Uniform ? scale > 0.0 && std::isfinite(scale)
                    : kind == NoiseKind::Exponential                        ? rate > 0.0 && std::isfinite(rate)
                                                                             : rate > 0.0 && shape > 0.0 &&
                                                                                   std::isfinite(rate) && std::isfinite(shape);
    if (!ok) throw Error(ErrorCode::SpecError, "noise parameters must be positive and finite");
  }

  double draw(Rng& rng) const {
    switch (kind) {
      case NoiseKind::Gaussian: return rng.normal(0.0, scale);
      case NoiseKind::Uniform: return rng.uniform(-scale, scale);
      case NoiseKind::Exponential: return rng.exponential(rate) - 1.0 / rate;
      case NoiseKind::Gamma: return rng.gamma(shape, rate) - shape / rate;
    }
    return 0.0;
  }

  friend bool operator==(const Noise&, const Noise&) = default;
};

/// Step discontinuity added to f_y: f_y(u) + magnitude * [u >= location].
struct Jump {
  double location = 0.0;
  double magnitude = 0.0;
  friend bool operator==(const Jump&, const Jump&) = default;
};

struct ScmSpec {
  Graph graph = Graph::Confounder;
  bool edge_xy = false;
  double effect_strength = 0.0;
  FunctionKind f_link = FunctionKind::Linear;
  FunctionKind f_w = FunctionKind::Linear;
  FunctionKind f_y = FunctionKind::Linear;
  FunctionKind f_xy = FunctionKind::Linear;
  Noise noise_root = Noise::gaussian(1.0);
  Noise noise_link = Noise::gaussian(0.1);
  Noise noise_w = Noise::gaussian(0.1);
  Noise noise_y = Noise::gaussian(0.1);
  bool smooth = true;
  std::optional<Jump> jump;

  void validate() const {
    if (edge_xy != (effect_strength != 0.0))
      throw Error(ErrorCode::SpecError, "effect_strength must be non-zero exactly when the X->Y edge is present");
    if (!std::isfinite(effect_strength)) throw Error(ErrorCode::SpecError, "effect_strength must be finite");
    if (smooth == jump.has_value()) throw Error(ErrorCode::SpecError, "a jump is present exactly when smooth is false");
    if (jump && !(std::isfinite(jump->location) && std::isfinite(jump->magnitude)))
      throw Error(ErrorCode::SpecError, "jump parameters must be finite");
    for (const Noise* n : {&noise_root, &noise_link, &noise_w, &noise_y}) n->validate();
  }

  double f_y_value(double u) const {
    double v = apply(f_y, u);
    if (jump && u >= jump->location) v += jump->magnitude;
    return v;
  }

  friend bool operator==(const ScmSpec&, const ScmSpec&) = default;
};

/// Observed columns plus the latent U (oracle; never passed to the test).
struct ScmSample {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;
  std::vector<double> u;

  std::size_t size() const noexcept { return x.size(); }
};

namespace detail {
inline constexpr std::uint64_t kSampleStream = 0x5ca1ab1eULL;
inline constexpr std::uint64_t kSpecStream = 0x5bec5becULL;
inline constexpr std::uint64_t kJumpStream = 0x0d15c0ULL;
}  // namespace detail

/// Draws n rows. Noise columns are drawn in the order root, link, w, y.
inline ScmSample sample_scm(const ScmSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw Error(ErrorCode::SpecError, "sample size must be at least 1");
  Rng rng(combine_seed({detail::kSampleStream, seed}));
  ScmSample s;
  s.x.resize(n);
  s.y.resize(n);
  s.w.resize(n);
  s.u.resize(n);
  std::vector<double> root(n);
  for (auto& v : root) v = spec.noise_root.draw(rng);
  if (spec.graph == Graph::Confounder) {
    s.u = root;
    for (std::size_t t = 0; t < n; ++t) s.x[t] = apply(spec.f_link, s.u[t]) + spec.noise_link.draw(rng);
  } else {
    s.x = root;
    for (std::size_t t = 0; t < n; ++t) s.u[t] = apply(spec.f_link, s.x[t]) + spec.noise_link.draw(rng);
  }
  for (std::size_t t = 0; t < n; ++t) s.w[t] = apply(spec.f_w, s.u[t]) + spec.noise_w.draw(rng);
  for (std::size_t t = 0; t < n; ++t) {
    const double direct = spec.edge_xy ? spec.effect_strength * apply(spec.f_xy, s.x[t]) : 0.0;
    s.y[t] = direct + spec.f_y_value(s.u[t]) + spec.noise_y.draw(rng);
  }
  return s;
}

/// Draws functions and noise laws uniformly from the menus. Under h1 the
/// effect strength is uniform on [1, 10]; otherwise the edge is absent.
inline ScmSpec random_spec(Graph graph, bool h1, std::uint64_t seed) {
  Rng rng(combine_seed({detail::kSpecStream, seed}));
  ScmSpec spec;
  spec.graph = graph;
  spec.f_link = kFunctionMenu[rng.index(kFunctionMenu.size())];
  spec.f_w = kFunctionMenu[rng.index(kFunctionMenu.size())];
  spec.f_y = kFunctionMenu[rng.index(kFunctionMenu.size())];
  spec.f_xy = kFunctionMenu[rng.index(kFunctionMenu.size())];
  spec.noise_link = Noise::standard(kNoiseMenu[rng.index(kNoiseMenu.size())]);
  spec.noise_w = Noise::standard(kNoiseMenu[rng.index(kNoiseMenu.size())]);
  spec.noise_y = Noise::standard(kNoiseMenu[rng.index(kNoiseMenu.size())]);
  const double a = rng.uniform(1.0, 10.0);
  spec.edge_xy = h1;
  spec.effect_strength = h1 ? a : 0.0;
  return spec;
}

/// Adds a jump to f_y at the median of U's marginal, of size 3 x sd(f_y(U)).
/// Both moments come from a fixed-seed Monte-Carlo draw of the spec itself.
inline ScmSpec nonsmooth_variant(const ScmSpec& spec) {
  spec.validate();
  if (!spec.smooth) throw Error(ErrorCode::AlreadyNonsmooth, "spec already carries a discontinuity");
  constexpr std::size_t kDraws = 200001;
  const ScmSample s = sample_scm(spec, kDraws, detail::kJumpStream);
  std::vector<double> u = s.u;
  std::nth_element(u.begin(), u.begin() + kDraws / 2, u.end());
  const double median = u[kDraws / 2];
  double mean = 0.0;
  for (double v : s.u) mean += apply(spec.f_y, v);
  mean /= static_cast<double>(kDraws);
  double var = 0.0;
  for (double v : s.u) {
    const double d = apply(spec.f_y, v) - mean;
    var += d * d;
  }
  var /= static_cast<double>(kDraws - 1);
  ScmSpec out = spec;
  out.smooth = false;
  out.jump = Jump{median, 3.0 * std::sqrt(var)};
  return out;
}

inline constexpr std::string_view to_string(Graph g) noexcept {
  return g == Graph::Confounder ? "confounder" : "mediator";
}
inline constexpr std::string_view to_string(FunctionKind f) noexcept {
  switch (f) {
    case FunctionKind::Linear: return "linear";
    case FunctionKind::Tanh: return "tanh";
    case FunctionKind::Sin: return "sin";
    case FunctionKind::Sigmoid: return "sigmoid";
    case FunctionKind::Zero: return "zero";
  }
  return "linear";
}
inline constexpr std::string_view to_string(NoiseKind k) noexcept {
  switch (k) {
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Uniform: return "uniform";
    case NoiseKind::Exponential: return "exponential";
    case NoiseKind::Gamma: return "gamma";
  }
  return "gaussian";
}

}  // namespace proxyci
