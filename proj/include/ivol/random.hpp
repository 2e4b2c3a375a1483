#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ivol {

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic child seed; order of `parts` matters.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts);

/// Seed for one instrument, stable under adding or removing other instruments.
std::uint64_t symbol_seed(std::uint64_t global_seed, std::string_view symbol);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return std::ldexp(static_cast<double>(engine_() >> 11), -53); }
  /// Uniform on [0, n).
  std::size_t below(std::size_t n);
  Eigen::VectorXd normal_vector(Eigen::Index n);
  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ivol
