#ifndef PROOFLAB_METRICS_HPP
#define PROOFLAB_METRICS_HPP

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prooflab/diagnosis.hpp"

namespace prooflab {

class DegenerateGroupingError : public Error {
 public:
  using Error::Error;
};

class EmptySampleError : public Error {
 public:
  using Error::Error;
};

class LengthMismatchError : public Error {
 public:
  using Error::Error;
};

/// 3x3 confusion counts over {Optimal, ValidAlternative, Incorrect}, plus
/// the excluded Indeterminate / ParseFailure tallies.
struct Confusion3 {
  std::array<std::array<long, 3>, 3> counts{};  // [truth][predicted]
  long indeterminate_count = 0;
  long parse_failure_count = 0;

  static int class_index(DiagLabel label);
  void add(DiagLabel truth, DiagLabel predicted);
  long truth_total(DiagLabel label) const;
  long predicted_total(DiagLabel label) const;
  long total() const;
  Confusion3& merge(const Confusion3& other);
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// One-vs-rest precision/recall/F1 per class; F1 is 0 when precision and
/// recall are both 0.
std::array<ClassScores, 3> f1_per_class(const Confusion3& c);

/// Fraction of truth-ValidAlternative instances predicted Incorrect.
/// nullopt when there are no truth-ValidAlternative instances.
std::optional<double> over_rejection(const Confusion3& c);

/// Fraction of truth-Incorrect instances predicted Optimal or
/// ValidAlternative. nullopt when there are no truth-Incorrect instances.
std::optional<double> over_validation(const Confusion3& c);

/// One-way variance explained, SS_between / SS_total; 0 when SS_total is 0.
double eta_squared(const std::vector<double>& outcome,
                   const std::vector<std::string>& groups);

struct MannWhitneyResult {
  double u = 0.0;   // U statistic for the first sample
  double p = 1.0;   // two-sided
  bool exact = false;
};

/// Rank-sum U with midrank ties. Exact permutation p when n*m <= 64,
/// otherwise the tie-corrected normal approximation with continuity
/// correction.
MannWhitneyResult mann_whitney_u(const std::vector<double>& a,
                                 const std::vector<double>& b);

double cohens_kappa(const std::vector<std::string>& r1,
                    const std::vector<std::string>& r2);

struct TierSpec {
  int complexity_low_max = 2;   // low covers 0-2, medium 3-4, high 5+
  int complexity_medium_max = 4;
  double distance_near_max = 2.0;  // near d<=2, mid 2<d<=3, far d>3
  double distance_mid_max = 3.0;
};

enum class TierKind { Complexity, Distance };

std::string_view tier_of(double value, TierKind kind,
                         const TierSpec& spec = {});

}  // namespace prooflab

#endif  // PROOFLAB_METRICS_HPP
