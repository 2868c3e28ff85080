#include "earthsight/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace earthsight {

void ThresholdController::validate() const {
    if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("ThresholdController.beta out of [0,1)");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("ThresholdController.alpha out of [0,1]");
    if (!(beta < alpha)) throw ConfigError("ThresholdController: beta must be below alpha");
    if (lambda1 < 0 || lambda2 < 0) throw ConfigError("ThresholdController: negative gain");
    if (!(target_power_fraction > 0.0 && target_power_fraction <= 1.0))
        throw ConfigError("ThresholdController.target_power_fraction out of (0,1]");
    if (!(target_reject_rate >= 0.0 && target_reject_rate <= 1.0))
        throw ConfigError("ThresholdController.target_reject_rate out of [0,1]");
}

double update_alpha(ThresholdController& c, double power_ratio) {
    double next = c.alpha + c.lambda1 * (power_ratio - 1.0) +
                  c.lambda2 * (c.dep_ratio() - c.target_reject_rate);
    next = std::min(1.0, next);
    // Keep the evaluation band non-degenerate.
    next = std::max(c.beta + 0.01, next);
    c.alpha = next;
    return next;
}

Seconds effective_time(const Filter& filter, const ExecutionState& state,
                       const FilterCatalog& catalog) {
    if (!filter.backbone || state.backbone_loaded(*filter.backbone)) return filter.head_time;
    return filter.head_time + catalog.backbone_load_time(*filter.backbone);
}

double utility(const Filter& filter, const DnfFormula& formula, const ExecutionState& state,
               const FilterCatalog& catalog) {
    int n = live_term_count(formula, filter.id, state);
    if (n == 0) return 0.0;
    return (1.0 - filter.pass_prob) * filter.tpr * double(n) /
           effective_time(filter, state, catalog);
}

Seconds sequence_time(std::span<const FilterStep> steps, const TimingModel& timing) {
    Seconds total = 0;
    for (const FilterStep& s : steps)
        total += timing.select_time + s.load_time + s.exec_time + timing.comm_overhead;
    if (timing.mode == ExecutionMode::kSequential) return total;
    // Pipelined: selection + loading of step k overlap execution of step k-1
    // when the prefetch guessed right; a misprediction forfeits the overlap
    // and the actual filter's preparation is paid in full.
    for (std::size_t k = 1; k < steps.size(); ++k)
        if (steps[k].prefetch_hit)
            total -= std::min(timing.select_time + steps[k].load_time, steps[k - 1].exec_time);
    return total;
}

std::vector<FilterId> PrioritizationResult::filters_run() const {
    std::vector<FilterId> ids;
    ids.reserve(steps.size());
    for (const FilterStep& s : steps) ids.push_back(s.filter);
    return ids;
}

OnboardRuntime::OnboardRuntime(const FilterCatalog& catalog, ThresholdController controller,
                               RuntimeOptions options, Rng rng)
    : catalog_(&catalog), controller_(controller), options_(options), rng_(rng) {
    controller_.validate();
}

std::optional<FilterId> OnboardRuntime::select_next(const DnfFormula& formula,
                                                    const ExecutionState& state) {
    std::optional<FilterId> best;
    double best_score = 0.0;
    for (FilterId f : formula.filter_set()) {
        if (state.evaluated(f)) continue;
        if (live_term_count(formula, f, state) == 0) continue; // only dead terms left
        const Filter& filter = catalog_->filter(f);
        if (options_.greedy_ordering) {
            double u = utility(filter, formula, state, *catalog_);
            if (!best || u > best_score) {
                best = f;
                best_score = u;
            }
        } else {
            // Static order: ascending head time, id as tie break.
            double t = filter.head_time;
            if (!best || t < best_score) {
                best = f;
                best_score = t;
            }
        }
    }
    return best;
}

PrioritizationResult OnboardRuntime::prioritize(const DnfFormula& formula,
                                                const OutcomeFn& outcomes) {
    const double alpha = controller_.alpha;
    const double beta = controller_.beta;

    ExecutionState state; // backbones reset between images
    PrioritizationResult result;
    double conf = confidence(formula, state, *catalog_);

    while (beta <= conf && conf <= alpha && !formula_decided(formula, state)) {
        auto next = select_next(formula, state);
        if (!next) break; // unreachable while a term is live; guards corrupt input
        const Filter& filter = catalog_->filter(*next);

        FilterStep step;
        step.filter = *next;
        step.exec_time = filter.head_time;
        if (filter.backbone && !state.backbone_loaded(*filter.backbone)) {
            step.load_time = catalog_->backbone_load_time(*filter.backbone);
            state.load_backbone(*filter.backbone);
        }
        if (!result.steps.empty()) {
            step.prefetch_hit = options_.greedy_ordering
                                    ? rng_.bernoulli(options_.timing.prefetch_hit_prob)
                                    : true; // static order is always predicted right
        }
        step.outcome = outcomes(*next);
        state.record(*next, step.outcome);
        conf = confidence(formula, state, *catalog_);
        step.confidence_after = conf;
        result.steps.push_back(step);
    }

    result.final_confidence = conf;
    result.alpha_at_decision = alpha;
    if (auto satisfied = decided_priority(formula, state)) {
        result.priority = Priority::level(*satisfied);
    } else if (conf > alpha) {
        // Confident early accept: the highest priority still attainable.
        int best = 0;
        for (const Term& t : formula.terms())
            if (!term_dead(t, state)) best = std::max(best, t.priority());
        result.priority = Priority::level(best);
    } else {
        result.priority = Priority::compute();
    }

    result.compute_time = sequence_time(result.steps, options_.timing);
    result.energy = result.compute_time * options_.compute_power;

    controller_.computed_count += 1;
    if (result.priority.is_compute()) controller_.dep_count += 1;
    return result;
}

} // namespace earthsight
