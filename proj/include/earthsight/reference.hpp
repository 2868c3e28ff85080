#pragma once

#include <map>
#include <vector>

#include "earthsight/formula.hpp"

namespace earthsight::reference {

// Brute-force reference implementations. Everything in this namespace is
// deliberately written by direct enumeration, independent of the closed-form
// code paths it is used to check. These routines back the `verify` command
// and the test suites; none of them is suitable for production formula sizes.

/// Probability that the formula ends satisfied, by enumerating all
/// 2^|unevaluated| outcome assignments weighted by pass probabilities.
/// This is the exact joint probability; it agrees with confidence() whenever
/// terms are pairwise filter-disjoint.
double joint_satisfaction_probability(const DnfFormula& formula, const ExecutionState& state,
                                      const FilterCatalog& catalog);

/// Direct evaluation of the formula on a complete outcome vector.
bool evaluate_formula(const DnfFormula& formula, const std::map<FilterId, bool>& outcomes);

/// Minimum expected evaluation cost over all adaptive decision trees, by
/// unmemoized recursion over outcome histories. Costs follow the backbone
/// amortization rule: a backbone is paid once, when the first filter that
/// needs it runs. Evaluation stops when the confidence leaves [beta, alpha]
/// or the formula value is logically determined. Feasible for |F| <= ~8.
double min_expected_cost_bruteforce(const DnfFormula& formula, const FilterCatalog& catalog,
                                    double beta, double alpha);

/// Cheapest deciding certificate for a known ground truth, by enumerating
/// every subset of the formula's filters. Returns the minimum total cost
/// (heads plus each distinct backbone paid once). Feasible for |F| <= ~16.
double min_certificate_cost_bruteforce(const DnfFormula& formula,
                                       const std::map<FilterId, bool>& ground_truth,
                                       const FilterCatalog& catalog);

/// Nearest-rank percentile of a sample (q in (0,1]), by full sort.
double percentile_by_sort(std::vector<double> samples, double q);

} // namespace earthsight::reference
