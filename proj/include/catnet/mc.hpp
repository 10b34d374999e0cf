#ifndef CATNET_MC_HPP
#define CATNET_MC_HPP

#include <cmath>
#include <cstdint>
#include <string>

namespace catnet {

// Point estimate with its standard error and draw provenance.
struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::string stream;  // "seed/purpose/index" of the generating stream
};

// Streaming first/second moment accumulator; merges are exact so block
// reductions in fixed order give deterministic results.
struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  void merge(const Accumulator& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    n += o.n;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double variance() const {
    if (n < 2) return 0.0;
    double m = mean();
    double v = (sum_sq - n * m * m) / (n - 1.0);
    return v > 0.0 ? v : 0.0;
  }
  double std_error_of_mean() const { return n ? std::sqrt(variance() / n) : 0.0; }
  McEstimate estimate(const std::string& stream) const {
    return {mean(), std_error_of_mean(), n, stream};
  }
};

}  // namespace catnet

#endif  // CATNET_MC_HPP
