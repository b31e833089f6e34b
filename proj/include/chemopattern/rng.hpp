#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace chemo {

// Uniform [0,1) from the top 53 bits of one mt19937_64 draw. The explicit
// mapping keeps generated fields bit-identical across standard libraries
// (std::uniform_real_distribution is implementation-defined).
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller on the portable uniform mapping.
// Used for randomized range sketches; one draw per call, no caching.
inline double normal01(std::mt19937_64& eng) {
  double a;
  do {
    a = uniform01(eng);
  } while (a == 0.0);
  const double b = uniform01(eng);
  return std::sqrt(-2.0 * std::log(a)) *
         std::cos(6.283185307179586476925286766559 * b);
}

// value + amplitude*rand(x,y) at every node, drawn in node order.
inline Eigen::VectorXd perturbed_constant(double value, double amplitude,
                                          long n, std::mt19937_64& eng) {
  Eigen::VectorXd f(n);
  if (amplitude == 0.0) {
    f.setConstant(value);
    return f;
  }
  for (long i = 0; i < n; ++i) f[i] = value + amplitude * uniform01(eng);
  return f;
}

}  // namespace chemo
