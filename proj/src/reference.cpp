#include "earthsight/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace earthsight::reference {

namespace {

bool formula_value(const DnfFormula& formula,
                   const std::map<std::uint16_t, bool>& outcomes) {
    for (const Term& t : formula.terms()) {
        bool all = true;
        for (FilterId f : t.filters()) {
            auto it = outcomes.find(f.value);
            if (it == outcomes.end() || !it->second) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

// Value of the formula is already forced by the partial outcomes, regardless
// of the unevaluated filters.
bool value_determined(const DnfFormula& formula,
                      const std::map<std::uint16_t, bool>& outcomes) {
    bool some_term_open = false;
    for (const Term& t : formula.terms()) {
        bool satisfied = true;
        bool dead = false;
        for (FilterId f : t.filters()) {
            auto it = outcomes.find(f.value);
            if (it == outcomes.end()) satisfied = false;
            else if (!it->second) dead = true;
        }
        if (satisfied && !dead) return true; // fully true term
        if (!dead) some_term_open = true;
    }
    return !some_term_open;
}

double satisfaction_probability(const DnfFormula& formula, const FilterCatalog& catalog,
                                const std::map<std::uint16_t, bool>& outcomes,
                                const std::vector<FilterId>& unevaluated) {
    // Sum P(assignment) over assignments that satisfy the formula.
    const std::size_t n = unevaluated.size();
    double total = 0.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
        auto assignment = outcomes;
        double weight = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            bool pass = (mask >> i) & 1;
            double p = catalog.filter(unevaluated[i]).pass_prob;
            weight *= pass ? p : 1.0 - p;
            assignment[unevaluated[i].value] = pass;
        }
        if (weight > 0.0 && formula_value(formula, assignment)) total += weight;
    }
    return total;
}

} // namespace

double joint_satisfaction_probability(const DnfFormula& formula, const ExecutionState& state,
                                      const FilterCatalog& catalog) {
    std::vector<FilterId> unevaluated;
    for (FilterId f : formula.filter_set())
        if (!state.evaluated(f)) unevaluated.push_back(f);
    if (unevaluated.size() > 24)
        throw std::invalid_argument("joint_satisfaction_probability: too many filters");
    return satisfaction_probability(formula, catalog, state.outcomes(), unevaluated);
}

bool evaluate_formula(const DnfFormula& formula, const std::map<FilterId, bool>& outcomes) {
    std::map<std::uint16_t, bool> raw;
    for (const auto& [f, v] : outcomes) raw[f.value] = v;
    return formula_value(formula, raw);
}

namespace {

struct TreeSearch {
    const DnfFormula& formula;
    const FilterCatalog& catalog;
    double beta;
    double alpha;
    std::vector<FilterId> filters;

    double cost_of(FilterId f, const std::map<std::uint16_t, bool>& outcomes) const {
        const Filter& filter = catalog.filter(f);
        double c = filter.head_time;
        if (filter.backbone) {
            bool loaded = false;
            for (const auto& [id, v] : outcomes) {
                const Filter& other = catalog.filter(FilterId{id});
                if (other.backbone && other.backbone->value == filter.backbone->value) {
                    loaded = true;
                    break;
                }
            }
            if (!loaded) c += catalog.backbone_load_time(*filter.backbone);
        }
        return c;
    }

    bool stopped(const std::map<std::uint16_t, bool>& outcomes) const {
        if (value_determined(formula, outcomes)) return true;
        std::vector<FilterId> unevaluated;
        for (FilterId f : filters)
            if (!outcomes.count(f.value)) unevaluated.push_back(f);
        double conf = satisfaction_probability(formula, catalog, outcomes, unevaluated);
        return conf < beta || conf > alpha;
    }

    double best(const std::map<std::uint16_t, bool>& outcomes) {
        if (stopped(outcomes)) return 0.0;
        double best_cost = std::numeric_limits<double>::infinity();
        for (FilterId f : filters) {
            if (outcomes.count(f.value)) continue;
            double p = catalog.filter(f).pass_prob;
            auto with_true = outcomes;
            with_true[f.value] = true;
            auto with_false = outcomes;
            with_false[f.value] = false;
            double c = cost_of(f, outcomes) + p * best(with_true) + (1.0 - p) * best(with_false);
            best_cost = std::min(best_cost, c);
        }
        return best_cost;
    }
};

} // namespace

double min_expected_cost_bruteforce(const DnfFormula& formula, const FilterCatalog& catalog,
                                    double beta, double alpha) {
    TreeSearch search{formula, catalog, beta, alpha, formula.filter_set()};
    if (search.filters.size() > 10)
        throw std::invalid_argument("min_expected_cost_bruteforce: too many filters");
    return search.best({});
}

double min_certificate_cost_bruteforce(const DnfFormula& formula,
                                       const std::map<FilterId, bool>& ground_truth,
                                       const FilterCatalog& catalog) {
    std::vector<FilterId> filters = formula.filter_set();
    if (filters.size() > 20)
        throw std::invalid_argument("min_certificate_cost_bruteforce: too many filters");

    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << filters.size()); ++mask) {
        std::map<std::uint16_t, bool> revealed;
        for (std::size_t i = 0; i < filters.size(); ++i)
            if ((mask >> i) & 1) revealed[filters[i].value] = ground_truth.at(filters[i]);
        if (!value_determined(formula, revealed)) continue;
        double cost = 0.0;
        std::set<std::uint16_t> backbones;
        for (std::size_t i = 0; i < filters.size(); ++i) {
            if (!((mask >> i) & 1)) continue;
            const Filter& f = catalog.filter(filters[i]);
            cost += f.head_time;
            if (f.backbone && backbones.insert(f.backbone->value).second)
                cost += catalog.backbone_load_time(*f.backbone);
        }
        best = std::min(best, cost);
    }
    return best;
}

double percentile_by_sort(std::vector<double> samples, double q) {
    if (samples.empty()) return 0.0;
    std::sort(samples.begin(), samples.end());
    std::size_t rank = std::size_t(std::ceil(q * double(samples.size())));
    if (rank == 0) rank = 1;
    if (rank > samples.size()) rank = samples.size();
    return samples[rank - 1];
}

} // namespace earthsight::reference
