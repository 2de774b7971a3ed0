#include "podtpi/mtpi2.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "podtpi/special.hpp"

namespace podtpi::mtpi2 {

namespace {

constexpr double kGridSlack = 1e-9;
constexpr double kTieTolerance = 1e-12;

}  // namespace

Decision decision_for(Region r) {
    switch (r) {
        case Region::kUnder: return Decision::kEscalate;
        case Region::kEquivalence: return Decision::kStay;
        case Region::kOver: return Decision::kDeescalate;
    }
    return Decision::kDeescalate;
}

bool Interval::contains(double p) const {
    const bool above_lo = lo_closed ? p >= lo : p > lo;
    const bool below_hi = hi_closed ? p <= hi : p < hi;
    return above_lo && below_hi;
}

std::vector<Interval> IntervalPartition::models() const {
    std::vector<Interval> out(under.rbegin(), under.rend());
    out.push_back(ei);
    out.insert(out.end(), over.begin(), over.end());
    return out;
}

Region IntervalPartition::region_of_model(int index) const {
    if (index < k1()) return Region::kUnder;
    if (index == k1()) return Region::kEquivalence;
    return Region::kOver;
}

Region IntervalPartition::classify(double p) const {
    if (ei.contains(p)) return Region::kEquivalence;
    return p < ei.lo ? Region::kUnder : Region::kOver;
}

IntervalPartition build_partition(double target, double eps1, double eps2) {
    const double lo = target - eps1;
    const double hi = target + eps2;
    if (!(eps1 > 0.0 && eps2 > 0.0) || !(lo > 0.0) || !(hi < 1.0))
        fail(ErrorKind::kInvalidArgument, "equivalence interval must lie strictly inside (0,1)");
    const double width = eps1 + eps2;

    IntervalPartition part;
    part.target = target;
    part.ei = {lo, hi, true, true};

    const int k1 = static_cast<int>(std::ceil(lo / width - kGridSlack));
    for (int k = 0; k < k1; ++k) {
        const double upper = lo - k * width;
        const double lower = (k == k1 - 1) ? 0.0 : lo - (k + 1) * width;
        part.under.push_back({lower, upper, true, false});
    }
    const int k2 = static_cast<int>(std::ceil((1.0 - hi) / width - kGridSlack));
    for (int k = 0; k < k2; ++k) {
        const double lower = hi + k * width;
        const double upper = (k == k2 - 1) ? 1.0 : hi + (k + 1) * width;
        part.over.push_back({lower, upper, false, true});
    }
    return part;
}

ModelPosterior model_posterior(int n, int m, const IntervalPartition& part) {
    require(n >= 0 && m >= 0, "counts must be non-negative");
    // Each model's marginal likelihood is B(n+1, m+1) [I_hi - I_lo] / len.
    // The beta function and the uniform model prior cancel in normalization.
    const double a = n + 1.0;
    const double b = m + 1.0;
    const auto models = part.models();
    ModelPosterior post;
    post.probs.reserve(models.size());
    double total = 0.0;
    for (const auto& iv : models) {
        if (!(iv.length() > 0.0)) fail(ErrorKind::kNumerical, "degenerate model interval");
        const double v = special::beta_interval_mass(a, b, iv.lo, iv.hi) / iv.length();
        post.probs.push_back(v);
        total += v;
    }
    if (!(total > 0.0) || !std::isfinite(total))
        fail(ErrorKind::kNumerical, "model posterior underflow");
    for (double& p : post.probs) p /= total;
    return post;
}

Decision decide(int n, int m, const IntervalPartition& part) {
    const ModelPosterior post = model_posterior(n, m, part);
    const double best = *std::max_element(post.probs.begin(), post.probs.end());
    Decision safest = Decision::kEscalate;
    for (int j = 0; j < static_cast<int>(post.probs.size()); ++j) {
        if (post.probs[j] < best * (1.0 - kTieTolerance)) continue;
        const Decision d = decision_for(part.region_of_model(j));
        if (to_int(d) < to_int(safest)) safest = d;
    }
    return safest;
}

double prob_exceeds_target(int n, int m, double target) {
    require(n >= 0 && m >= 0, "counts must be non-negative");
    require(target > 0.0 && target < 1.0, "target must lie in (0,1)");
    return special::beta_sf(target, 1.0 + n, 1.0 + m);
}

std::vector<DecisionTableEntry> decision_table(const IntervalPartition& part, int n_max) {
    std::vector<DecisionTableEntry> table;
    for (int total = 1; total <= n_max; ++total)
        for (int n = 0; n <= total; ++n)
            table.push_back({n, total - n, decide(n, total - n, part)});
    return table;
}

std::string decision_table_csv(const std::vector<DecisionTableEntry>& table) {
    std::ostringstream os;
    os << "n,m,decision\n";
    for (const auto& e : table) os << e.n << ',' << e.m << ',' << decision_code(e.decision) << '\n';
    return os.str();
}

DecisionRule::DecisionRule(IntervalPartition part, int n_max)
    : part_(std::move(part)), n_max_(n_max) {
    table_.resize(n_max_ + 1);
    for (int n = 0; n <= n_max_; ++n) {
        table_[n].reserve(n_max_ - n + 1);
        for (int m = 0; m + n <= n_max_; ++m) table_[n].push_back(decide(n, m, part_));
    }
}

Decision DecisionRule::operator()(int n, int m) const {
    if (n >= 0 && m >= 0 && n + m <= n_max_) return table_[n][m];
    return decide(n, m, part_);
}

}  // namespace podtpi::mtpi2
