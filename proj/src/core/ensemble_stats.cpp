#include "fwtlab/core/ensemble_stats.hpp"

#include <cmath>

#include "fwtlab/core/random.hpp"

namespace fwt {

SampleSet::SampleSet(Index block_dim, std::vector<double> block_weights,
                     Index rows)
    : block_dim_(block_dim), weights_(std::move(block_weights)) {
  if (block_dim < 1 || weights_.empty() || rows < 1) {
    throw InvalidInput("SampleSet: empty layout");
  }
  data_ = RowMatrix::Zero(rows, blocks() * block_dim * block_dim);
}

void SampleSet::set_block(Index row, Index block, const Matrix& m) {
  const Index len = block_dim_ * block_dim_;
  data_.row(row).segment(block * len, len) =
      Eigen::Map<const RowVector>(m.data(), len);
}

Matrix SampleSet::block(const RowVector& row, Index b) const {
  const Index len = block_dim_ * block_dim_;
  Matrix m(block_dim_, block_dim_);
  Eigen::Map<RowVector>(m.data(), len) = row.segment(b * len, len);
  return m;
}

RowVector SampleSet::mean(Index first, Index count) const {
  if (count < 1 || first < 0 || first + count > size()) {
    throw InvalidInput("SampleSet::mean: range out of bounds");
  }
  return data_.middleRows(first, count).colwise().sum() / double(count);
}

double SampleSet::norm(const RowVector& row) const {
  double total = 0.0;
  for (Index b = 0; b < blocks(); ++b) {
    total += weights_[static_cast<std::size_t>(b)] * trace_norm(block(row, b));
  }
  return total;
}

double bootstrap_standard_error(const SampleSet& s, int resamples,
                                std::uint64_t seed) {
  if (resamples < 2) throw InvalidInput("bootstrap: need >= 2 resamples");
  const RowVector centre = s.mean();
  const Index n = s.size();
  Rng rng = make_stream(seed, 0xB007);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  RowVector acc(s.data().cols());
  double sum_sq = 0.0;
  for (int b = 0; b < resamples; ++b) {
    acc.setZero();
    for (Index k = 0; k < n; ++k) acc += s.data().row(pick(rng));
    acc /= double(n);
    const double d = s.norm(acc - centre);
    sum_sq += d * d;
  }
  return std::sqrt(sum_sq / resamples);
}

MixtureLinearityStats mixture_linearity(const SampleSet& mix,
                                        const SampleSet& first,
                                        const SampleSet& second, double alpha,
                                        const MixtureLinearityOptions& opts) {
  if (mix.size() != first.size() || mix.size() != second.size() ||
      mix.data().cols() != first.data().cols() ||
      mix.data().cols() != second.data().cols()) {
    throw InvalidInput("mixture_linearity: mismatched sample sets");
  }
  MixtureLinearityStats st;
  st.n = mix.size();
  st.alpha = alpha;

  auto deficit_of = [&](Index begin, Index count) {
    const RowVector d = mix.mean(begin, count) -
                        alpha * first.mean(begin, count) -
                        (1.0 - alpha) * second.mean(begin, count);
    return mix.norm(d);
  };
  st.deficit = deficit_of(0, st.n);

  const std::uint64_t s0 = opts.bootstrap_seed;
  st.se_mixture = bootstrap_standard_error(mix, opts.bootstrap_resamples, s0);
  st.se_first =
      bootstrap_standard_error(first, opts.bootstrap_resamples, s0 + 1);
  st.se_second =
      bootstrap_standard_error(second, opts.bootstrap_resamples, s0 + 2);
  st.combined_se = std::sqrt(st.se_mixture * st.se_mixture +
                             alpha * alpha * st.se_first * st.se_first +
                             (1.0 - alpha) * (1.0 - alpha) * st.se_second *
                                 st.se_second);
  st.bound = 3.0 * st.combined_se;

  for (Index div : opts.ladder_divisors) {
    const Index n = st.n / div;
    if (n < 1) continue;
    LadderPoint p;
    p.n = n;
    p.replicates = st.n / n;
    double sum = 0.0;
    for (Index r = 0; r < p.replicates; ++r) sum += deficit_of(r * n, n);
    p.mean_deficit = sum / double(p.replicates);
    st.ladder.push_back(p);
  }
  if (st.ladder.size() >= 2 && st.ladder[1].mean_deficit > 0.0) {
    st.scaling_ratio = st.ladder[0].mean_deficit / st.ladder[1].mean_deficit;
  }
  return st;
}

}  // namespace fwt
