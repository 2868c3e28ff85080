#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "earthsight/formula.hpp"
#include "earthsight/rng.hpp"
#include "earthsight/types.hpp"

namespace earthsight {

/// Strategy interface for the ordering problem: given the current execution
/// state, name the next filter to run, or stop. Implementations never return
/// an already-evaluated filter.
class EvaluationPolicy {
public:
    virtual ~EvaluationPolicy() = default;
    virtual std::optional<FilterId> next(const DnfFormula& formula, const ExecutionState& state,
                                         const FilterCatalog& catalog) = 0;
};

/// Evaluation is over: the confidence left [beta, alpha] or the formula's
/// value is logically determined. Shared by the runtime-equivalent greedy
/// policy and the exact solver so their costs are comparable.
bool evaluation_complete(const DnfFormula& formula, const ExecutionState& state,
                         const FilterCatalog& catalog, double beta, double alpha);

/// Utility-argmax policy, identical in choice to the onboard runtime.
std::unique_ptr<EvaluationPolicy> greedy_policy(double beta, double alpha);

/// Serval-style baseline: filters ascending by head time, fixed up front.
/// Terms whose filter failed are skipped; evaluation stops only when the
/// formula value is decided (the baseline has no confidence thresholds).
std::unique_ptr<EvaluationPolicy> static_baseline_policy();

struct ExactSolution {
    std::unique_ptr<EvaluationPolicy> policy;
    double expected_cost = 0;
};

inline constexpr int kExactFilterCap = 20;

/// Expected-cost-optimal policy for exiting the [beta, alpha] band, by
/// memoized recursion over (evaluated set, outcome assignment) states with
/// expectation over pass probabilities. Cost of a step is the effective time
/// with backbone amortization; the loaded-backbone set is derived from the
/// evaluated set. Throws ConfigError when the formula exceeds kExactFilterCap
/// filters (callers must truncate).
ExactSolution exact_policy(const DnfFormula& formula, const FilterCatalog& catalog,
                           double beta, double alpha);

/// Expected evaluation cost of a deterministic policy (memoized over states).
double greedy_expected_cost(const DnfFormula& formula, const FilterCatalog& catalog,
                            double beta, double alpha);
double static_baseline_expected_cost(const DnfFormula& formula, const FilterCatalog& catalog);

struct OracleResult {
    std::vector<FilterId> order; // a cheapest deciding certificate, in executed order
    Seconds cost = 0;
};

/// Minimum-actual-cost certificate for a fully known outcome vector: the
/// cheapest filter set whose outcomes logically decide the formula, ordered
/// so each shared backbone is loaded once.
OracleResult oracle_policy(const DnfFormula& formula,
                           const std::map<FilterId, bool>& ground_truth,
                           const FilterCatalog& catalog);

/// Expected oracle cost under independent pass probabilities: exact
/// enumeration up to enum_limit filters, seeded Monte Carlo beyond.
double oracle_expected_cost(const DnfFormula& formula, const FilterCatalog& catalog,
                            int enum_limit, int samples, Rng rng);

// --- Synthetic suite ---------------------------------------------------------

struct SuiteConfig {
    std::size_t count = 2473;
    int max_filters = 15;
    std::uint64_t seed = 2473;
    int max_terms = 4;
};

/// Deterministic suite of formulas built by combining co-located query
/// conjunctions and truncating until each formula touches at most
/// max_filters distinct filters.
std::vector<DnfFormula> generate_suite(std::span<const Term> query_pool, const SuiteConfig& config);

// --- Benchmark ---------------------------------------------------------------

struct PolicyStats {
    double mean = 0;
    double median = 0;
};

struct PolicyBenchConfig {
    double beta = 0.01;
    double alpha = 0.95;
    int oracle_enum_limit = 12;
    int oracle_samples = 256;
    std::uint64_t seed = 7;
};

struct PolicyBenchResult {
    // Expected per-image evaluation seconds over the suite.
    PolicyStats greedy_banded;
    PolicyStats exact_banded;
    PolicyStats greedy_full; // beta=0, alpha=1: run to logical decision
    PolicyStats exact_full;
    PolicyStats oracle_full;
    PolicyStats static_full;
    double rel_error_banded = 0; // greedy vs exact mean
    double rel_error_full = 0;
    std::size_t formulas = 0;
    std::size_t skipped = 0; // beyond the exact-solver cap
};

PolicyBenchResult bench_policies(std::span<const DnfFormula> suite, const FilterCatalog& catalog,
                                 const PolicyBenchConfig& config);

std::string format_bench_report(const PolicyBenchResult& result, const PolicyBenchConfig& config);

} // namespace earthsight
