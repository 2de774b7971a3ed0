#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "podtpi/core.hpp"
#include "podtpi/mtpi2.hpp"

namespace podtpi::mtdselect {

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;
};

/// Moments of Beta(a + n, b + m).
MeanVar posterior_mean_var(int n, int m, double a = 1.0, double b = 1.0);

struct IsotonicFit {
    std::vector<double> p_hat;
    std::vector<double> weights;
    std::vector<int> block;  // block index of each element, non-decreasing
};

/// Weighted least-squares projection onto non-decreasing sequences.
IsotonicFit pava(const std::vector<double>& values, const std::vector<double>& weights);

enum class Branch {
    kNoData,           // nothing left to fit
    kSingleInterval,   // exactly one estimate in the equivalence interval
    kClosestBelow,     // several in the interval, tie resolved at or below target
    kClosest,          // several in the interval, closest above target
    kHighestUnder,     // none in the interval, highest underdosing dose
    kNone,             // every estimate overdoses
    kTerminated,
};

const char* branch_name(Branch b);

struct Selection {
    std::optional<int> index;  // position in p_hat
    Branch branch = Branch::kNone;
};

/// MTD selection over a non-decreasing estimate sequence.
Selection select_mtd(const std::vector<double>& p_hat, const mtpi2::IntervalPartition& part);

struct MtdReport {
    std::optional<int> selected;  // dose, 1-based
    std::vector<int> doses;       // doses entering the fit
    std::vector<double> p_tilde;
    std::vector<double> nu;
    std::vector<double> p_hat;
    Branch branch = Branch::kNone;
};

/// End-of-trial selection on complete data. Only treated, non-excluded
/// doses enter the fit.
MtdReport finalize(const TrialState& state);

nlohmann::json report_to_json(const MtdReport& r);

}  // namespace podtpi::mtdselect
