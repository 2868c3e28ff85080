#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "earthsight/formula.hpp"
#include "earthsight/rng.hpp"
#include "earthsight/types.hpp"

namespace earthsight {

/// Adaptive upper / fixed lower confidence thresholds plus the running
/// tallies that feed the update rule:
///
///   alpha_t = min(1, alpha_{t-1} + lambda1*(r_power - 1)
///                              + lambda2*(r_dep - r_reject))
///
/// r_power is current over target power level, r_dep the fraction of computed
/// images routed to p_compute, r_reject the target rejection rate shipped by
/// the ground look-ahead. The update only caps above; we additionally floor
/// alpha at beta + 0.01 so the evaluation band stays valid.
struct ThresholdController {
    double alpha = 0.90;
    double beta = 0.01;
    double lambda1 = 0.05;
    double lambda2 = 0.10;
    double target_power_fraction = 0.70;
    double target_reject_rate = 0.0;

    std::uint64_t dep_count = 0;      // images that exited at p_compute
    std::uint64_t computed_count = 0; // images that went through prioritization

    double dep_ratio() const {
        return double(dep_count) / double(computed_count > 0 ? computed_count : 1);
    }

    void validate() const;
};

/// Applies the adaptive update and returns the new alpha.
double update_alpha(ThresholdController& controller, double power_ratio);

enum class ExecutionMode { kSequential, kPipelined };

/// CPU-xPU execution timing. Each filter step costs
///   select_time + backbone load (if any) + head execution + comm_overhead.
/// In pipelined mode the selection and loading of step k+1 overlap the xPU
/// execution of step k, capped by that execution time; the overlap is won
/// only when the speculative prefetch guessed the right filter (probability
/// prefetch_hit_prob, sampled from the run's seeded stream).
struct TimingModel {
    ExecutionMode mode = ExecutionMode::kPipelined;
    Seconds select_time = 0;
    Seconds comm_overhead = 0;
    double prefetch_hit_prob = 1.0;
};

/// Per Eq.-style effective time: head_time alone if the filter is standalone
/// or its backbone is already loaded, otherwise head_time + backbone load.
Seconds effective_time(const Filter& filter, const ExecutionState& state,
                       const FilterCatalog& catalog);

/// Greedy selection score: (1 - p_i) * tpr_i * n_i / t_eff, where n_i counts
/// live terms containing the filter. Zero when every containing term is dead.
double utility(const Filter& filter, const DnfFormula& formula, const ExecutionState& state,
               const FilterCatalog& catalog);

/// One executed filter in an image's trace.
struct FilterStep {
    FilterId filter;
    Seconds load_time = 0; // backbone load paid by this step (0 if loaded/none)
    Seconds exec_time = 0; // head execution on the accelerator
    bool outcome = false;
    bool prefetch_hit = true; // meaningful from the second step on
    double confidence_after = 0;
};

/// Total wall time of an executed trace under the timing model.
Seconds sequence_time(std::span<const FilterStep> steps, const TimingModel& timing);

struct PrioritizationResult {
    Priority priority = Priority::compute();
    std::vector<FilterStep> steps; // exact execution order
    Seconds compute_time = 0;
    Joules energy = 0;
    double final_confidence = 0;
    double alpha_at_decision = 0;

    std::vector<FilterId> filters_run() const;
};

struct RuntimeOptions {
    TimingModel timing;
    Watts compute_power = 2.0;
    /// false: ablation/baseline ordering, ascending head time instead of
    /// utility argmax (selection is then free and prefetch always hits).
    bool greedy_ordering = true;
};

/// Callback reporting the observed Boolean outcome of executing a filter.
using OutcomeFn = std::function<bool(FilterId)>;

/// Per-satellite prioritization runtime. Evaluates filters for one image at a
/// time until the confidence leaves [beta, alpha] or the formula is decided,
/// then assigns a downlink priority. Loaded backbones persist for one image
/// and reset between images.
class OnboardRuntime {
public:
    OnboardRuntime(const FilterCatalog& catalog, ThresholdController controller,
                   RuntimeOptions options, Rng rng);

    PrioritizationResult prioritize(const DnfFormula& formula, const OutcomeFn& outcomes);

    ThresholdController& controller() { return controller_; }
    const ThresholdController& controller() const { return controller_; }
    const RuntimeOptions& options() const { return options_; }

private:
    std::optional<FilterId> select_next(const DnfFormula& formula, const ExecutionState& state);

    const FilterCatalog* catalog_;
    ThresholdController controller_;
    RuntimeOptions options_;
    Rng rng_;
};

} // namespace earthsight
