#pragma once

#include <string>
#include <vector>

#include "podtpi/core.hpp"

namespace podtpi::mtpi2 {

enum class Region { kUnder, kEquivalence, kOver };

Decision decision_for(Region r);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_closed = true;
    bool hi_closed = true;

    double length() const { return hi - lo; }
    bool contains(double p) const;
};

/// Equivalence interval plus the equal-width sub-intervals below and above
/// it. `under[0]` and `over[0]` touch the equivalence interval; the last
/// element of each is truncated at 0 or 1.
struct IntervalPartition {
    double target = 0.0;
    Interval ei;
    std::vector<Interval> under;
    std::vector<Interval> over;

    int k1() const { return static_cast<int>(under.size()); }
    int k2() const { return static_cast<int>(over.size()); }
    int n_models() const { return k1() + k2() + 1; }

    /// Model intervals in ascending order of p: U_K1 .. U_1, E, O_1 .. O_K2.
    std::vector<Interval> models() const;
    Region region_of_model(int index) const;

    /// Region containing p, honoring the closed/open boundary conventions.
    Region classify(double p) const;
};

IntervalPartition build_partition(double target, double eps1, double eps2);

struct ModelPosterior {
    std::vector<double> probs;  // aligned with IntervalPartition::models()
};

ModelPosterior model_posterior(int n, int m, const IntervalPartition& part);

/// Complete-data decision. Models whose posterior is within a relative 1e-12
/// of the maximum are tied; ties resolve toward the safest decision.
Decision decide(int n, int m, const IntervalPartition& part);

/// Pr(p > target) under Beta(1 + n, 1 + m).
double prob_exceeds_target(int n, int m, double target);

struct DecisionTableEntry {
    int n;
    int m;
    Decision decision;
};

/// All (n, m) with 1 <= n + m <= n_max, ordered by n + m then n.
std::vector<DecisionTableEntry> decision_table(const IntervalPartition& part, int n_max);

/// CSV with header `n,m,decision`, decisions encoded D/S/E.
std::string decision_table_csv(const std::vector<DecisionTableEntry>& table);

/// Precomputed A(n, m) for n + m <= n_max; larger arguments are evaluated on
/// demand. Immutable after construction.
class DecisionRule {
public:
    DecisionRule() = default;
    DecisionRule(IntervalPartition part, int n_max);

    Decision operator()(int n, int m) const;
    const IntervalPartition& partition() const { return part_; }

private:
    IntervalPartition part_;
    int n_max_ = 0;
    std::vector<std::vector<Decision>> table_;  // [n][m]
};

}  // namespace podtpi::mtpi2
