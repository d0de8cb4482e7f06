#pragma once

#include "proxyci/scm.hpp"

namespace fixture {

// Smooth confounder model used for the calibration and power checks:
// U ~ N(0,1), X = U + N(0, 0.5^2), W = U + N(0, 0.3^2), Y = a X + U + N(0, 0.3^2).
inline proxyci::ScmSpec calibration_spec(double effect = 0.0) {
  proxyci::ScmSpec s;
  s.noise_link = proxyci::Noise::gaussian(0.5);
  s.noise_w = proxyci::Noise::gaussian(0.3);
  s.noise_y = proxyci::Noise::gaussian(0.3);
  s.edge_xy = effect != 0.0;
  s.effect_strength = effect;
  return s;
}

// Smooth confounder model with a nearly noiseless link, for the discretization-error curve.
inline proxyci::ScmSpec dis_error_spec() {
  proxyci::ScmSpec s;
  s.noise_link = proxyci::Noise::gaussian(0.05);
  s.noise_w = proxyci::Noise::gaussian(0.1);
  s.noise_y = proxyci::Noise::gaussian(1.0);
  return s;
}

}  // namespace fixture
