#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pelab/numkit.hpp"

namespace pelab::tasks {

using numkit::Matrix;

/// Running-sum task: targets[s](i) = Σ_{j ≤ i} inputs[s](j).
struct Dataset {
  std::vector<Matrix> inputs;   // each seq_len × 1, standard normal
  std::vector<Matrix> targets;  // each seq_len × 1, prefix sums
  std::size_t seq_len = 0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return inputs.size(); }
};

/// Prefix sums of a column vector.
Matrix running_sum(const Matrix& x);

/// Sample s draws its inputs from SplitMix64(derive_seed(seed, s)), so any
/// sample can be regenerated independently of the others.
Dataset gen_running_sum(std::size_t n_samples, std::size_t seq_len, std::uint64_t seed);

/// One row per token: sample_id,position,x,y.
void export_csv(const Dataset& data, const std::string& path);

}  // namespace pelab::tasks
