#include "prooflab/metrics.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using namespace prooflab;

namespace {

constexpr DiagLabel O = DiagLabel::Optimal;
constexpr DiagLabel VA = DiagLabel::ValidAlternative;
constexpr DiagLabel I = DiagLabel::Incorrect;

Confusion3 from_counts(std::initializer_list<std::tuple<DiagLabel, DiagLabel, long>>
                           cells) {
  Confusion3 c;
  for (const auto& [truth, predicted, n] : cells) {
    for (long k = 0; k < n; ++k) c.add(truth, predicted);
  }
  return c;
}

}  // namespace

TEST_CASE("f1 per class") {
  // perfect prediction
  auto perfect = from_counts({{O, O, 4}, {VA, VA, 3}, {I, I, 2}});
  for (const auto& s : f1_per_class(perfect)) CHECK(s.f1 == 1.0);

  // every valid-alternative called incorrect
  auto collapsed = from_counts({{VA, I, 10}});
  CHECK(f1_per_class(collapsed)[1].f1 == 0.0);

  // mixed counts, checked against the one-vs-rest definitions computed
  // directly from the cell sums
  auto mixed = from_counts({{O, O, 8}, {O, VA, 2}, {VA, VA, 5},
                            {VA, I, 5}, {I, I, 10}});
  const auto scores = f1_per_class(mixed);
  {
    const double tp = 8, fp = 0, fn = 2;
    const double prec = tp / (tp + fp), rec = tp / (tp + fn);
    CHECK(scores[0].f1 == doctest::Approx(2 * prec * rec / (prec + rec))
                              .epsilon(1e-12));
  }
  {
    const double tp = 5, fp = 2, fn = 5;
    const double prec = tp / (tp + fp), rec = tp / (tp + fn);
    CHECK(scores[1].f1 == doctest::Approx(2 * prec * rec / (prec + rec))
                              .epsilon(1e-12));
  }
  {
    const double tp = 10, fp = 5, fn = 0;
    const double prec = tp / (tp + fp), rec = tp / (tp + fn);
    CHECK(scores[2].f1 == doctest::Approx(2 * prec * rec / (prec + rec))
                              .epsilon(1e-12));
  }
}

TEST_CASE("over-rejection and over-validation") {
  CHECK(over_rejection(from_counts({{VA, I, 7}})) == 1.0);
  CHECK(over_rejection(from_counts({{VA, VA, 4}, {VA, O, 1}})) == 0.0);
  CHECK(over_rejection(from_counts({{VA, I, 5}, {VA, VA, 7}})) ==
        doctest::Approx(5.0 / 12.0).epsilon(1e-12));
  CHECK_FALSE(over_rejection(from_counts({{O, O, 3}})).has_value());

  CHECK(over_validation(from_counts({{I, O, 6}})) == 1.0);
  CHECK(over_validation(from_counts({{I, I, 6}})) == 0.0);
  CHECK(over_validation(from_counts({{I, O, 3}, {I, VA, 4}, {I, I, 3}})) ==
        doctest::Approx(0.7).epsilon(1e-12));
  CHECK_FALSE(over_validation(from_counts({{VA, VA, 2}})).has_value());
}

TEST_CASE("or/ov are invariant under extra truth-optimal rows") {
  auto base = from_counts({{VA, I, 3}, {VA, VA, 5}, {I, O, 2}, {I, I, 6}});
  auto padded = base;
  for (int i = 0; i < 100; ++i) padded.add(O, i % 2 == 0 ? O : I);
  CHECK(over_rejection(base) == over_rejection(padded));
  CHECK(over_validation(base) == over_validation(padded));
}

TEST_CASE("eta squared") {
  CHECK(eta_squared({1, 1, 2, 2}, {"a", "a", "b", "b"}) == 1.0);
  CHECK(eta_squared({0, 0, 0, 1, 1, 1}, {"a", "a", "a", "b", "b", "b"}) ==
        1.0);
  CHECK(eta_squared({3, 3, 3, 3}, {"a", "a", "b", "b"}) == 0.0);
  // {1,0} vs {1,1}: grand mean 3/4, SS_between 1/4, SS_total 3/4
  CHECK(eta_squared({1, 0, 1, 1}, {"a", "a", "b", "b"}) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(eta_squared({1, 2, 3}, {"a", "a", "a"}),
                  DegenerateGroupingError);
  CHECK_THROWS_AS(eta_squared({}, {}), DegenerateGroupingError);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> value(0, 1);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> xs;
    std::vector<std::string> gs;
    for (int j = 0; j < 30; ++j) {
      xs.push_back(value(rng));
      gs.push_back(j % 3 == 0 ? "a" : (j % 3 == 1 ? "b" : "c"));
    }
    const double eta = eta_squared(xs, gs);
    CHECK(eta >= 0.0);
    CHECK(eta <= 1.0);
  }
}

TEST_CASE("mann-whitney u") {
  auto separated = mann_whitney_u({1, 2, 3}, {4, 5, 6});
  CHECK(separated.u == 0.0);
  CHECK(separated.exact);

  auto identical = mann_whitney_u({1, 2, 3}, {1, 2, 3});
  CHECK(identical.u == doctest::Approx(4.5));  // n*m/2 under full ties
  CHECK(identical.p == doctest::Approx(1.0));

  // a={1,3}, b={2,4}: U=1; exact two-sided p enumerated over C(4,2) splits
  auto interleaved = mann_whitney_u({1, 3}, {2, 4});
  CHECK(interleaved.u == 1.0);
  CHECK(interleaved.exact);
  {
    // enumeration oracle: ranks 1..4, U values of all 2-subsets
    const double mean = 2.0;
    const double observed = std::fabs(1.0 - mean);
    int extreme = 0, total = 0;
    for (int i = 1; i <= 4; ++i) {
      for (int j = i + 1; j <= 4; ++j) {
        const double u = i + j - 3.0;  // rank sum minus n(n+1)/2
        if (std::fabs(u - mean) >= observed - 1e-12) ++extreme;
        ++total;
      }
    }
    CHECK(interleaved.p ==
          doctest::Approx(double(extreme) / total).epsilon(1e-12));
  }

  // symmetry: U(a,b) + U(b,a) == n*m
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> value(0, 5);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> a, b;
    std::uniform_int_distribution<int> len(1, 12);
    const int n = len(rng), m = len(rng);
    for (int j = 0; j < n; ++j) a.push_back(value(rng));
    for (int j = 0; j < m; ++j) b.push_back(value(rng));
    const auto ab = mann_whitney_u(a, b);
    const auto ba = mann_whitney_u(b, a);
    CHECK(ab.u + ba.u == doctest::Approx(double(n) * m).epsilon(1e-9));
    CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-9));
    CHECK(ab.p >= 0.0);
    CHECK(ab.p <= 1.0);
  }

  // the normal approximation engages above the exact threshold
  std::vector<double> big_a, big_b;
  for (int i = 0; i < 9; ++i) big_a.push_back(i);
  for (int i = 0; i < 9; ++i) big_b.push_back(i + 100);
  auto approx = mann_whitney_u(big_a, big_b);
  CHECK_FALSE(approx.exact);
  CHECK(approx.p < 0.01);

  CHECK_THROWS_AS(mann_whitney_u({}, {1.0}), EmptySampleError);
}

TEST_CASE("cohen's kappa") {
  CHECK(cohens_kappa({"A", "B", "A"}, {"A", "B", "A"}) == 1.0);
  // constant rater 1, half-half rater 2: p_o = p_e = 0.5
  CHECK(cohens_kappa({"A", "A", "A", "A"}, {"A", "A", "B", "B"}) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // 2x2 with 40 agreements and 20 disagreements, symmetric marginals:
  // p_o = 2/3, p_e = 1/2, kappa = 1/3
  {
    std::vector<std::string> r1, r2;
    for (int i = 0; i < 20; ++i) { r1.push_back("A"); r2.push_back("A"); }
    for (int i = 0; i < 20; ++i) { r1.push_back("B"); r2.push_back("B"); }
    for (int i = 0; i < 10; ++i) { r1.push_back("A"); r2.push_back("B"); }
    for (int i = 0; i < 10; ++i) { r1.push_back("B"); r2.push_back("A"); }
    CHECK(cohens_kappa(r1, r2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  // both raters constant and identical
  CHECK(cohens_kappa({"A", "A"}, {"A", "A"}) == 1.0);
  CHECK_THROWS_AS(cohens_kappa({"A"}, {"A", "B"}), LengthMismatchError);
  CHECK_THROWS_AS(cohens_kappa({}, {}), LengthMismatchError);

  std::mt19937 rng(23);
  std::uniform_int_distribution<int> label(0, 2);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::string> r1, r2;
    for (int j = 0; j < 40; ++j) {
      r1.push_back(std::string(1, char('A' + label(rng))));
      r2.push_back(std::string(1, char('A' + label(rng))));
    }
    CHECK(cohens_kappa(r1, r2) <= 1.0);
  }
}

TEST_CASE("tier bucketing") {
  const TierSpec spec;
  CHECK(tier_of(3, TierKind::Complexity, spec) == "medium");
  CHECK(tier_of(2, TierKind::Distance, spec) == "near");
  CHECK(tier_of(0, TierKind::Complexity, spec) == "low");
  CHECK(tier_of(1, TierKind::Complexity, spec) == "low");
  CHECK(tier_of(2, TierKind::Complexity, spec) == "low");
  CHECK(tier_of(4, TierKind::Complexity, spec) == "medium");
  CHECK(tier_of(5, TierKind::Complexity, spec) == "high");
  CHECK(tier_of(11, TierKind::Complexity, spec) == "high");
  CHECK(tier_of(0, TierKind::Distance, spec) == "near");
  CHECK(tier_of(3, TierKind::Distance, spec) == "mid");
  CHECK(tier_of(4, TierKind::Distance, spec) == "far");
}

TEST_CASE("confusion bookkeeping") {
  auto c = from_counts({{O, O, 2}, {O, I, 1}, {VA, VA, 3}, {I, VA, 4}});
  CHECK(c.truth_total(O) == 3);
  CHECK(c.truth_total(VA) == 3);
  CHECK(c.truth_total(I) == 4);
  CHECK(c.predicted_total(VA) == 7);
  CHECK(c.total() == 10);
  Confusion3 other;
  other.add(O, O);
  other.indeterminate_count = 2;
  c.merge(other);
  CHECK(c.total() == 11);
  CHECK(c.indeterminate_count == 2);
  CHECK_THROWS_AS(c.add(DiagLabel::Indeterminate, O), Error);
}
