#include "bmsfed/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bmsfed/error.hpp"

namespace bmsfed {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t x) {
  return splitmix64(x);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix(static_cast<std::uint64_t>(purpose));
  h = mix(h ^ (a + 0x9E3779B97F4A7C15ULL));
  h = mix(h ^ (b + 0xD1B54A32D192ED03ULL));
  return h;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ mix(stream);
  for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256**
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
  if (n == 0) throw ParameterError("next_below: n must be positive");
  const std::uint64_t threshold = -n % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

double RngStream::next_gaussian(double mean, double stddev) {
  if (stddev < 0.0) throw ParameterError("next_gaussian: stddev must be >= 0");
  // Box-Muller; two uniforms per draw keeps the stream layout trivial.
  const double u1 = 1.0 - next_double();  // (0, 1]
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
}

double RngStream::next_gamma(double shape) {
  if (shape <= 0.0) throw ParameterError("next_gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost to shape+1, then scale by U^(1/shape).
    const double g = next_gamma(shape + 1.0);
    const double u = 1.0 - next_double();
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = next_gaussian(0.0, 1.0);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

Matrix RngStream::gaussian_matrix(std::size_t rows, std::size_t cols,
                                  double mean, double stddev) {
  if (stddev < 0.0) throw ParameterError("gaussian_matrix: stddev must be >= 0");
  Matrix out(rows, cols);
  for (double& v : out.data) v = next_gaussian(mean, stddev);
  check_finite(out, "gaussian_matrix");
  return out;
}

std::vector<std::size_t> RngStream::subset(
    const std::vector<std::size_t>& universe, std::size_t size) {
  if (size > universe.size()) {
    throw ParameterError("subset: size " + std::to_string(size) +
                         " exceeds universe of " +
                         std::to_string(universe.size()));
  }
  std::vector<std::size_t> pool = universe;
  // Partial Fisher-Yates: the first `size` slots become the sample.
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t j = i + next_below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(size);
  std::sort(pool.begin(), pool.end());
  return pool;
}

void RngStream::shuffle(std::vector<std::size_t>& items) {
  if (items.size() < 2) return;
  for (std::size_t i = items.size() - 1; i > 0; --i) {
    const std::size_t j = next_below(i + 1);
    std::swap(items[i], items[j]);
  }
}

std::vector<double> RngStream::dirichlet(double concentration, std::size_t n) {
  if (concentration <= 0.0) {
    throw ParameterError("dirichlet: concentration must be positive");
  }
  std::vector<double> draws(n);
  double total = 0.0;
  for (double& v : draws) {
    v = next_gamma(concentration);
    total += v;
  }
  if (total <= 0.0) {
    // All-zero underflow; fall back to uniform.
    for (double& v : draws) v = 1.0 / static_cast<double>(n);
    return draws;
  }
  for (double& v : draws) v /= total;
  return draws;
}

}  // namespace bmsfed
