#pragma once

#include <cstdint>
#include <vector>

#include "bmsfed/matrix.hpp"

namespace bmsfed {

/// Every random draw in the simulator belongs to one of these purposes.
/// Streams are keyed (seed, purpose, a, b) so that reordering clients or
/// rounds cannot perturb any other consumer's sequence.
enum class StreamPurpose : std::uint64_t {
  WeightInit = 1,
  TrainData = 2,
  TestData = 3,
  Partition = 4,
  Incongruity = 5,
  Batching = 6,    // a = client id, b = round
  Selection = 7,   // b = round
  DropMask = 8,    // b = round
  PowdPool = 9,    // b = round
  Test = 15,       // free-form streams inside unit tests
};

std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t a = 0,
                        std::uint64_t b = 0);

/// Counter-seeded xoshiro256** stream. Identical (seed, stream) pairs give
/// identical sequences everywhere; instances are single-owner and never
/// shared between workers.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);
  RngStream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a = 0,
            std::uint64_t b = 0)
      : RngStream(seed, stream_id(purpose, a, b)) {}

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double next_double();

  /// Uniform integer in [0, n); n must be positive. Rejection sampled, unbiased.
  std::uint64_t next_below(std::uint64_t n);

  double next_gaussian(double mean, double stddev);

  /// Marsaglia-Tsang gamma variate, shape > 0, unit scale.
  double next_gamma(double shape);

  /// Matrix of i.i.d. normal draws; stddev must be >= 0.
  Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double mean,
                         double stddev);

  /// Uniform size-element subset of universe without replacement, returned
  /// in ascending order. size must not exceed the universe.
  std::vector<std::size_t> subset(const std::vector<std::size_t>& universe,
                                  std::size_t size);

  /// In-place Fisher-Yates shuffle.
  void shuffle(std::vector<std::size_t>& items);

  /// Dirichlet(concentration) draw over n components.
  std::vector<double> dirichlet(double concentration, std::size_t n);

 private:
  std::uint64_t state_[4];
};

}  // namespace bmsfed
