#include "podtpi/mtdselect.hpp"

#include <algorithm>
#include <cmath>

#include "podtpi/engine.hpp"

namespace podtpi::mtdselect {

MeanVar posterior_mean_var(int n, int m, double a, double b) {
    require(a > 0.0 && b > 0.0, "beta hyperparameters must be positive");
    require(n >= 0 && m >= 0, "counts must be non-negative");
    const double aa = a + n;
    const double bb = b + m;
    const double s = aa + bb;
    return {aa / s, aa * bb / (s * s * (s + 1.0))};
}

IsotonicFit pava(const std::vector<double>& values, const std::vector<double>& weights) {
    require(!values.empty() && values.size() == weights.size(), "values and weights must match");
    for (double w : weights) require(w > 0.0 && std::isfinite(w), "weights must be positive");

    struct Block {
        double mean, weight;
        std::size_t size;
    };
    std::vector<Block> stack;
    for (std::size_t i = 0; i < values.size(); ++i) {
        stack.push_back({values[i], weights[i], 1});
        while (stack.size() > 1 && stack[stack.size() - 2].mean > stack.back().mean) {
            const Block top = stack.back();
            stack.pop_back();
            Block& prev = stack.back();
            const double w = prev.weight + top.weight;
            prev.mean = (prev.mean * prev.weight + top.mean * top.weight) / w;
            prev.weight = w;
            prev.size += top.size;
        }
    }
    IsotonicFit fit;
    fit.weights = weights;
    for (std::size_t b = 0; b < stack.size(); ++b) {
        for (std::size_t j = 0; j < stack[b].size; ++j) {
            fit.p_hat.push_back(stack[b].mean);
            fit.block.push_back(static_cast<int>(b));
        }
    }
    return fit;
}

const char* branch_name(Branch b) {
    switch (b) {
        case Branch::kNoData: return "no-data";
        case Branch::kSingleInterval: return "single-in-interval";
        case Branch::kClosestBelow: return "closest-at-or-below-target";
        case Branch::kClosest: return "closest";
        case Branch::kHighestUnder: return "highest-underdosing";
        case Branch::kNone: return "none";
        case Branch::kTerminated: return "terminated";
    }
    return "?";
}

Selection select_mtd(const std::vector<double>& p_hat, const mtpi2::IntervalPartition& part) {
    for (std::size_t i = 1; i < p_hat.size(); ++i)
        require(p_hat[i] >= p_hat[i - 1], "estimates must be non-decreasing");
    if (p_hat.empty()) return {std::nullopt, Branch::kNoData};

    std::vector<int> in_ei, under;
    for (int i = 0; i < static_cast<int>(p_hat.size()); ++i) {
        const auto region = part.classify(p_hat[i]);
        if (region == mtpi2::Region::kEquivalence) in_ei.push_back(i);
        else if (region == mtpi2::Region::kUnder) under.push_back(i);
    }
    if (in_ei.empty()) {
        if (under.empty()) return {std::nullopt, Branch::kNone};
        return {under.back(), Branch::kHighestUnder};
    }
    if (in_ei.size() == 1) return {in_ei.front(), Branch::kSingleInterval};

    double best = INFINITY;
    for (int i : in_ei) best = std::min(best, std::fabs(p_hat[i] - part.target));
    std::vector<int> closest;
    for (int i : in_ei)
        if (std::fabs(p_hat[i] - part.target) == best) closest.push_back(i);
    int below = -1;
    for (int i : closest)
        if (p_hat[i] <= part.target) below = i;
    if (below >= 0) return {below, Branch::kClosestBelow};
    return {closest.front(), Branch::kClosest};
}

MtdReport finalize(const TrialState& in) {
    MtdReport report;
    if (in.status.kind == TrialStatus::Kind::kTerminatedUnsafe) {
        report.branch = Branch::kTerminated;
        return report;
    }
    if (in.pending_total() > 0)
        fail(ErrorKind::kConflict, "pending outcomes remain; selection needs complete data");
    const TrialState state = engine::apply_safety_rules(in);
    if (state.status.kind == TrialStatus::Kind::kTerminatedUnsafe) {
        report.branch = Branch::kTerminated;
        return report;
    }
    const auto& params = state.params;
    for (int d = 1; d <= params.n_doses; ++d) {
        const DoseTally t = tally(state, d);
        if (t.observed() == 0 || state.is_excluded(d)) continue;
        const MeanVar mv = posterior_mean_var(t.n, t.m);
        report.doses.push_back(d);
        report.p_tilde.push_back(mv.mean);
        report.nu.push_back(mv.var);
    }
    if (report.doses.empty()) {
        report.branch = Branch::kNoData;
        return report;
    }
    std::vector<double> w;
    for (double v : report.nu) w.push_back(1.0 / v);
    report.p_hat = pava(report.p_tilde, w).p_hat;
    const auto part = mtpi2::build_partition(params.target, params.eps1, params.eps2);
    const Selection sel = select_mtd(report.p_hat, part);
    report.branch = sel.branch;
    if (sel.index) report.selected = report.doses[*sel.index];
    return report;
}

nlohmann::json report_to_json(const MtdReport& r) {
    return {
        {"selected", r.selected ? nlohmann::json(*r.selected) : nlohmann::json(nullptr)},
        {"doses", r.doses},
        {"p_tilde", r.p_tilde},
        {"nu", r.nu},
        {"p_hat", r.p_hat},
        {"branch", branch_name(r.branch)},
    };
}

}  // namespace podtpi::mtdselect
