#include "pelab/tasks.hpp"

#include "pelab/csv.hpp"
#include "pelab/errors.hpp"

namespace pelab::tasks {

Matrix running_sum(const Matrix& x) {
  if (x.cols() != 1) throw DimensionError("running_sum: expected a column vector");
  Matrix y(x.rows(), 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    acc += x(i, 0);
    y(i, 0) = acc;
  }
  return y;
}

Dataset gen_running_sum(std::size_t n_samples, std::size_t seq_len, std::uint64_t seed) {
  Dataset d;
  d.seq_len = seq_len;
  d.seed = seed;
  d.inputs.reserve(n_samples);
  d.targets.reserve(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    numkit::SplitMix64 rng(numkit::derive_seed(seed, s));
    Matrix x(seq_len, 1);
    for (double& v : x.data()) v = rng.normal();
    d.targets.push_back(running_sum(x));
    d.inputs.push_back(std::move(x));
  }
  return d;
}

void export_csv(const Dataset& data, const std::string& path) {
  csv::Writer w(path, {"sample_id", "position", "x", "y"});
  for (std::size_t s = 0; s < data.size(); ++s)
    for (std::size_t i = 0; i < data.seq_len; ++i)
      w.row(s, i, data.inputs[s](i, 0), data.targets[s](i, 0));
  w.close();
}

}  // namespace pelab::tasks
