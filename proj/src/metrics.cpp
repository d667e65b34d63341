#include "prooflab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace prooflab {

int Confusion3::class_index(DiagLabel label) {
  switch (label) {
    case DiagLabel::Optimal:
      return 0;
    case DiagLabel::ValidAlternative:
      return 1;
    case DiagLabel::Incorrect:
      return 2;
    default:
      throw Error("Indeterminate has no confusion-matrix class");
  }
}

void Confusion3::add(DiagLabel truth, DiagLabel predicted) {
  ++counts[class_index(truth)][class_index(predicted)];
}

long Confusion3::truth_total(DiagLabel label) const {
  const auto& row = counts[class_index(label)];
  return row[0] + row[1] + row[2];
}

long Confusion3::predicted_total(DiagLabel label) const {
  const int j = class_index(label);
  return counts[0][j] + counts[1][j] + counts[2][j];
}

long Confusion3::total() const {
  long sum = 0;
  for (const auto& row : counts) sum += row[0] + row[1] + row[2];
  return sum;
}

Confusion3& Confusion3::merge(const Confusion3& other) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) counts[i][j] += other.counts[i][j];
  }
  indeterminate_count += other.indeterminate_count;
  parse_failure_count += other.parse_failure_count;
  return *this;
}

std::array<ClassScores, 3> f1_per_class(const Confusion3& c) {
  std::array<ClassScores, 3> out{};
  for (int k = 0; k < 3; ++k) {
    const double tp = static_cast<double>(c.counts[k][k]);
    double fp = 0.0;
    double fn = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (i != k) {
        fp += static_cast<double>(c.counts[i][k]);
        fn += static_cast<double>(c.counts[k][i]);
      }
    }
    ClassScores s;
    s.precision = (tp + fp > 0) ? tp / (tp + fp) : 0.0;
    s.recall = (tp + fn > 0) ? tp / (tp + fn) : 0.0;
    s.f1 = (s.precision + s.recall > 0)
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    out[k] = s;
  }
  return out;
}

std::optional<double> over_rejection(const Confusion3& c) {
  const long va = c.truth_total(DiagLabel::ValidAlternative);
  if (va == 0) return std::nullopt;
  const long rejected = c.counts[1][2];
  return static_cast<double>(rejected) / static_cast<double>(va);
}

std::optional<double> over_validation(const Confusion3& c) {
  const long inc = c.truth_total(DiagLabel::Incorrect);
  if (inc == 0) return std::nullopt;
  const long validated = c.counts[2][0] + c.counts[2][1];
  return static_cast<double>(validated) / static_cast<double>(inc);
}

double eta_squared(const std::vector<double>& outcome,
                   const std::vector<std::string>& groups) {
  if (outcome.size() != groups.size() || outcome.empty()) {
    throw DegenerateGroupingError("outcome/group lists must align");
  }
  std::map<std::string, std::pair<double, long>> sums;  // group -> (sum, n)
  for (std::size_t i = 0; i < outcome.size(); ++i) {
    auto& [sum, n] = sums[groups[i]];
    sum += outcome[i];
    ++n;
  }
  if (sums.size() < 2) {
    throw DegenerateGroupingError("need at least two groups");
  }
  const double grand =
      std::accumulate(outcome.begin(), outcome.end(), 0.0) /
      static_cast<double>(outcome.size());
  double ss_total = 0.0;
  for (double x : outcome) ss_total += (x - grand) * (x - grand);
  if (ss_total == 0.0) return 0.0;
  double ss_between = 0.0;
  for (const auto& [name, agg] : sums) {
    const double mean = agg.first / static_cast<double>(agg.second);
    ss_between += static_cast<double>(agg.second) * (mean - grand) *
                  (mean - grand);
  }
  return ss_between / ss_total;
}

namespace {

// Midranks of the pooled samples, in pooled order.
std::vector<double> midranks(const std::vector<double>& pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return pooled[a] < pooled[b];
                   });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) +
                         static_cast<double>(j + 1)) /
                        2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double u_from_ranks(const std::vector<double>& ranks,
                    const std::vector<std::size_t>& a_positions,
                    std::size_t n_a) {
  double rank_sum = 0.0;
  for (std::size_t pos : a_positions) rank_sum += ranks[pos];
  return rank_sum - static_cast<double>(n_a) *
                        (static_cast<double>(n_a) + 1.0) / 2.0;
}

}  // namespace

MannWhitneyResult mann_whitney_u(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.empty() || b.empty()) {
    throw EmptySampleError("mann_whitney_u needs non-empty samples");
  }
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::vector<double> ranks = midranks(pooled);

  std::vector<std::size_t> a_positions(n);
  std::iota(a_positions.begin(), a_positions.end(), 0);
  const double u = u_from_ranks(ranks, a_positions, n);
  const double mean = static_cast<double>(n) * static_cast<double>(m) / 2.0;

  MannWhitneyResult out;
  out.u = u;

  if (n * m <= 64) {
    // Exact permutation distribution over all assignments of n pooled
    // positions to the first sample.
    out.exact = true;
    const std::size_t total = n + m;
    std::vector<std::size_t> combo(n);
    std::iota(combo.begin(), combo.end(), 0);
    const double observed_dev = std::fabs(u - mean);
    long extreme = 0;
    long count = 0;
    while (true) {
      const double u_perm = u_from_ranks(ranks, combo, n);
      if (std::fabs(u_perm - mean) >= observed_dev - 1e-12) ++extreme;
      ++count;
      // next combination
      std::size_t i = n;
      while (i > 0 && combo[i - 1] == total - n + i - 1) --i;
      if (i == 0) break;
      ++combo[i - 1];
      for (std::size_t k = i; k < n; ++k) combo[k] = combo[k - 1] + 1;
    }
    out.p = static_cast<double>(extreme) / static_cast<double>(count);
    return out;
  }

  // Normal approximation with tie correction and continuity correction.
  const double big_n = static_cast<double>(n + m);
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double variance = static_cast<double>(n) * static_cast<double>(m) /
                          12.0 *
                          ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
  if (variance <= 0.0) {
    out.p = 1.0;
    return out;
  }
  const double z = std::max(0.0, std::fabs(u - mean) - 0.5) /
                   std::sqrt(variance);
  out.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return out;
}

double cohens_kappa(const std::vector<std::string>& r1,
                    const std::vector<std::string>& r2) {
  if (r1.size() != r2.size() || r1.empty()) {
    throw LengthMismatchError("rater lists must align and be non-empty");
  }
  const double n = static_cast<double>(r1.size());
  std::map<std::string, long> m1;
  std::map<std::string, long> m2;
  long agree = 0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    ++m1[r1[i]];
    ++m2[r2[i]];
    if (r1[i] == r2[i]) ++agree;
  }
  const double p_o = static_cast<double>(agree) / n;
  double p_e = 0.0;
  for (const auto& [label, c1] : m1) {
    auto it = m2.find(label);
    if (it != m2.end()) {
      p_e += (static_cast<double>(c1) / n) *
             (static_cast<double>(it->second) / n);
    }
  }
  if (p_e >= 1.0) return 1.0;  // both raters constant and identical
  return (p_o - p_e) / (1.0 - p_e);
}

std::string_view tier_of(double value, TierKind kind, const TierSpec& spec) {
  if (kind == TierKind::Complexity) {
    if (value <= spec.complexity_low_max) return "low";
    if (value <= spec.complexity_medium_max) return "medium";
    return "high";
  }
  if (value <= spec.distance_near_max) return "near";
  if (value <= spec.distance_mid_max) return "mid";
  return "far";
}

}  // namespace prooflab
