#include "earthsight/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "earthsight/runtime.hpp"

namespace earthsight {

bool evaluation_complete(const DnfFormula& formula, const ExecutionState& state,
                         const FilterCatalog& catalog, double beta, double alpha) {
    if (formula_decided(formula, state)) return true;
    double conf = confidence(formula, state, catalog);
    return conf < beta || conf > alpha;
}

namespace {

// Dense bitmask view of one formula against a catalog. Filters are indexed in
// ascending id order, so ties broken by dense index are ties broken by id.
class FormulaIndex {
public:
    FormulaIndex(const DnfFormula& formula, const FilterCatalog& catalog) {
        filters_ = formula.filter_set();
        if (filters_.size() > 32)
            throw ConfigError("formula has " + std::to_string(filters_.size()) +
                              " filters; mask-based policies support at most 32");
        std::map<std::uint16_t, int> dense;
        for (std::size_t i = 0; i < filters_.size(); ++i) dense[filters_[i].value] = int(i);

        pass_.resize(filters_.size());
        tpr_.resize(filters_.size());
        head_.resize(filters_.size());
        backbone_of_.assign(filters_.size(), -1);
        std::map<std::uint16_t, int> backbone_dense;
        for (std::size_t i = 0; i < filters_.size(); ++i) {
            const Filter& f = catalog.filter(filters_[i]);
            pass_[i] = f.pass_prob;
            tpr_[i] = f.tpr;
            head_[i] = f.head_time;
            if (f.backbone) {
                auto [it, inserted] = backbone_dense.emplace(f.backbone->value, int(backbone_load_.size()));
                if (inserted) {
                    backbone_load_.push_back(catalog.backbone_load_time(*f.backbone));
                    backbone_members_.push_back(0);
                }
                backbone_of_[i] = it->second;
                backbone_members_[it->second] |= std::uint32_t(1) << i;
            }
        }
        for (const Term& t : formula.terms()) {
            std::uint32_t mask = 0;
            for (FilterId f : t.filters()) mask |= std::uint32_t(1) << dense.at(f.value);
            term_mask_.push_back(mask);
            term_priority_.push_back(t.priority());
        }
    }

    int size() const { return int(filters_.size()); }
    int term_count() const { return int(term_mask_.size()); }
    FilterId filter_id(int i) const { return filters_[i]; }
    double pass_prob(int i) const { return pass_[i]; }
    std::uint32_t term_mask(int t) const { return term_mask_[t]; }

    bool term_dead(int t, std::uint32_t eval, std::uint32_t truth) const {
        return (term_mask_[t] & eval & ~truth) != 0;
    }
    bool term_satisfied(int t, std::uint32_t eval, std::uint32_t truth) const {
        return (term_mask_[t] & ~(eval & truth)) == 0;
    }
    bool decided(std::uint32_t eval, std::uint32_t truth) const {
        bool all_dead = true;
        for (int t = 0; t < term_count(); ++t) {
            if (term_satisfied(t, eval, truth)) return true;
            if (!term_dead(t, eval, truth)) all_dead = false;
        }
        return all_dead;
    }

    double confidence(std::uint32_t eval, std::uint32_t truth) const {
        double miss = 1.0;
        for (int t = 0; t < term_count(); ++t) {
            if (term_dead(t, eval, truth)) continue;
            double p = 1.0;
            std::uint32_t open = term_mask_[t] & ~eval;
            while (open) {
                int i = std::countr_zero(open);
                open &= open - 1;
                p *= pass_[i];
            }
            miss *= 1.0 - p;
        }
        return 1.0 - miss;
    }

    bool complete(std::uint32_t eval, std::uint32_t truth, double beta, double alpha) const {
        if (decided(eval, truth)) return true;
        double c = confidence(eval, truth);
        return c < beta || c > alpha;
    }

    Seconds t_eff(int i, std::uint32_t eval) const {
        Seconds t = head_[i];
        int b = backbone_of_[i];
        if (b >= 0 && (backbone_members_[b] & eval) == 0) t += backbone_load_[b];
        return t;
    }

    /// Cost of running a set of filters: heads plus each backbone once.
    Seconds set_cost(std::uint32_t mask) const {
        Seconds cost = 0;
        std::uint32_t m = mask;
        while (m) {
            int i = std::countr_zero(m);
            m &= m - 1;
            cost += head_[i];
        }
        for (std::size_t b = 0; b < backbone_load_.size(); ++b)
            if (backbone_members_[b] & mask) cost += backbone_load_[b];
        return cost;
    }

    int live_terms_containing(int i, std::uint32_t eval, std::uint32_t truth) const {
        int n = 0;
        std::uint32_t bit = std::uint32_t(1) << i;
        for (int t = 0; t < term_count(); ++t)
            if ((term_mask_[t] & bit) && !term_dead(t, eval, truth)) ++n;
        return n;
    }

    /// Runtime's greedy choice: argmax utility, lowest index on ties.
    int greedy_choice(std::uint32_t eval, std::uint32_t truth) const {
        int best = -1;
        double best_u = -1.0;
        for (int i = 0; i < size(); ++i) {
            if (eval & (std::uint32_t(1) << i)) continue;
            int n = live_terms_containing(i, eval, truth);
            if (n == 0) continue;
            double u = (1.0 - pass_[i]) * tpr_[i] * double(n) / t_eff(i, eval);
            if (u > best_u) {
                best_u = u;
                best = i;
            }
        }
        return best;
    }

    /// Baseline choice: ascending head time, lowest index on ties, skipping
    /// filters whose terms are all dead.
    int static_choice(std::uint32_t eval, std::uint32_t truth) const {
        int best = -1;
        double best_t = std::numeric_limits<double>::infinity();
        for (int i = 0; i < size(); ++i) {
            if (eval & (std::uint32_t(1) << i)) continue;
            if (live_terms_containing(i, eval, truth) == 0) continue;
            if (head_[i] < best_t) {
                best_t = head_[i];
                best = i;
            }
        }
        return best;
    }

    std::uint32_t to_masks(const ExecutionState& state, std::uint32_t& truth) const {
        std::uint32_t eval = 0;
        truth = 0;
        for (int i = 0; i < size(); ++i) {
            auto o = state.outcome(filters_[i]);
            if (o) {
                eval |= std::uint32_t(1) << i;
                if (*o) truth |= std::uint32_t(1) << i;
            }
        }
        return eval;
    }

private:
    std::vector<FilterId> filters_;
    std::vector<double> pass_;
    std::vector<double> tpr_;
    std::vector<Seconds> head_;
    std::vector<int> backbone_of_;
    std::vector<Seconds> backbone_load_;
    std::vector<std::uint32_t> backbone_members_;
    std::vector<std::uint32_t> term_mask_;
    std::vector<int> term_priority_;
};

std::uint64_t state_key(std::uint32_t eval, std::uint32_t truth) {
    return (std::uint64_t(eval) << 32) | truth;
}

// Expected cost of following a fixed choice rule until the band is exited.
template <typename ChoiceFn>
double expected_cost_for(const FormulaIndex& idx, double beta, double alpha,
                         std::uint32_t eval, std::uint32_t truth,
                         std::unordered_map<std::uint64_t, double>& memo,
                         const ChoiceFn& choice) {
    if (idx.complete(eval, truth, beta, alpha)) return 0.0;
    auto it = memo.find(state_key(eval, truth));
    if (it != memo.end()) return it->second;
    int i = choice(eval, truth);
    double cost = 0.0;
    if (i >= 0) {
        std::uint32_t bit = std::uint32_t(1) << i;
        double p = idx.pass_prob(i);
        cost = idx.t_eff(i, eval) +
               p * expected_cost_for(idx, beta, alpha, eval | bit, truth | bit, memo, choice) +
               (1.0 - p) * expected_cost_for(idx, beta, alpha, eval | bit, truth, memo, choice);
    }
    memo.emplace(state_key(eval, truth), cost);
    return cost;
}

// Memoized Bellman recursion for the optimal policy.
class ExactSolver {
public:
    ExactSolver(const FormulaIndex& idx, double beta, double alpha)
        : idx_(idx), beta_(beta), alpha_(alpha) {}

    double value(std::uint32_t eval, std::uint32_t truth) {
        if (idx_.complete(eval, truth, beta_, alpha_)) return 0.0;
        auto it = memo_.find(state_key(eval, truth));
        if (it != memo_.end()) return it->second.first;
        double best = std::numeric_limits<double>::infinity();
        int best_i = -1;
        for (int i = 0; i < idx_.size(); ++i) {
            std::uint32_t bit = std::uint32_t(1) << i;
            if (eval & bit) continue;
            if (idx_.live_terms_containing(i, eval, truth) == 0) continue;
            double p = idx_.pass_prob(i);
            double c = idx_.t_eff(i, eval) + p * value(eval | bit, truth | bit) +
                       (1.0 - p) * value(eval | bit, truth);
            if (c < best) {
                best = c;
                best_i = i;
            }
        }
        memo_.emplace(state_key(eval, truth), std::make_pair(best, best_i));
        return best;
    }

    int choice(std::uint32_t eval, std::uint32_t truth) {
        value(eval, truth);
        auto it = memo_.find(state_key(eval, truth));
        return it == memo_.end() ? -1 : it->second.second;
    }

private:
    const FormulaIndex& idx_;
    double beta_;
    double alpha_;
    std::unordered_map<std::uint64_t, std::pair<double, int>> memo_;
};

class GreedyBandPolicy final : public EvaluationPolicy {
public:
    GreedyBandPolicy(double beta, double alpha) : beta_(beta), alpha_(alpha) {}

    std::optional<FilterId> next(const DnfFormula& formula, const ExecutionState& state,
                                 const FilterCatalog& catalog) override {
        if (evaluation_complete(formula, state, catalog, beta_, alpha_)) return std::nullopt;
        std::optional<FilterId> best;
        double best_u = -1.0;
        for (FilterId f : formula.filter_set()) {
            if (state.evaluated(f)) continue;
            if (live_term_count(formula, f, state) == 0) continue;
            double u = utility(catalog.filter(f), formula, state, catalog);
            if (u > best_u) {
                best_u = u;
                best = f;
            }
        }
        return best;
    }

private:
    double beta_;
    double alpha_;
};

class StaticBaselinePolicy final : public EvaluationPolicy {
public:
    std::optional<FilterId> next(const DnfFormula& formula, const ExecutionState& state,
                                 const FilterCatalog& catalog) override {
        if (formula_decided(formula, state)) return std::nullopt;
        std::optional<FilterId> best;
        double best_t = std::numeric_limits<double>::infinity();
        for (FilterId f : formula.filter_set()) {
            if (state.evaluated(f)) continue;
            if (live_term_count(formula, f, state) == 0) continue; // skip dead terms
            double t = catalog.filter(f).head_time;
            if (t < best_t) {
                best_t = t;
                best = f;
            }
        }
        return best;
    }
};

class ExactBandPolicy final : public EvaluationPolicy {
public:
    ExactBandPolicy(const DnfFormula& formula, const FilterCatalog& catalog, double beta,
                    double alpha)
        : idx_(formula, catalog), solver_(idx_, beta, alpha), beta_(beta), alpha_(alpha) {}

    std::optional<FilterId> next(const DnfFormula& formula, const ExecutionState& state,
                                 const FilterCatalog& catalog) override {
        (void)formula;
        (void)catalog;
        std::uint32_t truth = 0;
        std::uint32_t eval = idx_.to_masks(state, truth);
        if (idx_.complete(eval, truth, beta_, alpha_)) return std::nullopt;
        int i = solver_.choice(eval, truth);
        if (i < 0) return std::nullopt;
        return idx_.filter_id(i);
    }

    double root_cost() { return solver_.value(0, 0); }

private:
    FormulaIndex idx_;
    ExactSolver solver_;
    double beta_;
    double alpha_;
};

} // namespace

std::unique_ptr<EvaluationPolicy> greedy_policy(double beta, double alpha) {
    return std::make_unique<GreedyBandPolicy>(beta, alpha);
}

std::unique_ptr<EvaluationPolicy> static_baseline_policy() {
    return std::make_unique<StaticBaselinePolicy>();
}

ExactSolution exact_policy(const DnfFormula& formula, const FilterCatalog& catalog, double beta,
                           double alpha) {
    if (formula.filter_set().size() > kExactFilterCap)
        throw ConfigError("exact_policy: formula has " +
                          std::to_string(formula.filter_set().size()) + " filters, cap is " +
                          std::to_string(kExactFilterCap) + "; truncate the formula first");
    auto policy = std::make_unique<ExactBandPolicy>(formula, catalog, beta, alpha);
    double cost = policy->root_cost();
    return ExactSolution{std::move(policy), cost};
}

double greedy_expected_cost(const DnfFormula& formula, const FilterCatalog& catalog, double beta,
                            double alpha) {
    FormulaIndex idx(formula, catalog);
    std::unordered_map<std::uint64_t, double> memo;
    return expected_cost_for(idx, beta, alpha, 0, 0, memo,
                             [&](std::uint32_t e, std::uint32_t t) { return idx.greedy_choice(e, t); });
}

double static_baseline_expected_cost(const DnfFormula& formula, const FilterCatalog& catalog) {
    FormulaIndex idx(formula, catalog);
    std::unordered_map<std::uint64_t, double> memo;
    return expected_cost_for(idx, 0.0, 1.0, 0, 0, memo,
                             [&](std::uint32_t e, std::uint32_t t) { return idx.static_choice(e, t); });
}

namespace {

// Minimum hitting cost: pick one failed filter per live term, sharing picks
// across terms, minimizing set cost. Branch and bound over terms.
void hitting_search(const FormulaIndex& idx, const std::vector<std::uint32_t>& false_by_term,
                    std::size_t term, std::uint32_t chosen, Seconds& best) {
    if (idx.set_cost(chosen) >= best) return;
    if (term == false_by_term.size()) {
        best = idx.set_cost(chosen);
        return;
    }
    if (false_by_term[term] & chosen) { // already hit
        hitting_search(idx, false_by_term, term + 1, chosen, best);
        return;
    }
    std::uint32_t options = false_by_term[term];
    while (options) {
        int i = std::countr_zero(options);
        options &= options - 1;
        hitting_search(idx, false_by_term, term + 1, chosen | (std::uint32_t(1) << i), best);
    }
}

std::uint32_t cheapest_certificate(const FormulaIndex& idx, std::uint32_t truth, Seconds& cost) {
    // Formula true: the cheapest fully-true term certifies satisfaction.
    // Formula false: one observed-False filter per term certifies failure.
    bool value = false;
    for (int t = 0; t < idx.term_count(); ++t)
        if ((idx.term_mask(t) & truth) == idx.term_mask(t)) value = true;

    if (value) {
        Seconds best = std::numeric_limits<double>::infinity();
        std::uint32_t best_mask = 0;
        for (int t = 0; t < idx.term_count(); ++t) {
            if ((idx.term_mask(t) & truth) != idx.term_mask(t)) continue;
            Seconds c = idx.set_cost(idx.term_mask(t));
            if (c < best) {
                best = c;
                best_mask = idx.term_mask(t);
            }
        }
        cost = best;
        return best_mask;
    }

    std::vector<std::uint32_t> false_by_term;
    for (int t = 0; t < idx.term_count(); ++t)
        false_by_term.push_back(idx.term_mask(t) & ~truth);
    Seconds best = std::numeric_limits<double>::infinity();
    hitting_search(idx, false_by_term, 0, 0, best);
    cost = best;

    // Second pass to recover one mask achieving the bound.
    struct Recover {
        const FormulaIndex& idx;
        const std::vector<std::uint32_t>& terms;
        Seconds target;
        std::uint32_t found = 0;
        bool rec(std::size_t term, std::uint32_t chosen) {
            if (idx.set_cost(chosen) > target + 1e-12) return false;
            if (term == terms.size()) {
                found = chosen;
                return true;
            }
            if (terms[term] & chosen) return rec(term + 1, chosen);
            std::uint32_t options = terms[term];
            while (options) {
                int i = std::countr_zero(options);
                options &= options - 1;
                if (rec(term + 1, chosen | (std::uint32_t(1) << i))) return true;
            }
            return false;
        }
    } recover{idx, false_by_term, best};
    recover.rec(0, 0);
    return recover.found;
}

} // namespace

OracleResult oracle_policy(const DnfFormula& formula, const std::map<FilterId, bool>& ground_truth,
                           const FilterCatalog& catalog) {
    auto filters = formula.filter_set();
    if (filters.size() > kExactFilterCap)
        throw ConfigError("oracle_policy: formula has " + std::to_string(filters.size()) +
                          " filters, cap is " + std::to_string(kExactFilterCap));
    FormulaIndex idx(formula, catalog);
    std::uint32_t truth = 0;
    for (std::size_t i = 0; i < filters.size(); ++i)
        if (ground_truth.at(filters[i])) truth |= std::uint32_t(1) << i;

    OracleResult result;
    std::uint32_t mask = cheapest_certificate(idx, truth, result.cost);

    // Executed order pays each backbone exactly once: standalone filters
    // first, then backbone groups, ids ascending inside each block.
    std::vector<std::pair<int, FilterId>> keyed;
    for (std::size_t i = 0; i < filters.size(); ++i) {
        if (!(mask & (std::uint32_t(1) << i))) continue;
        const Filter& f = catalog.filter(filters[i]);
        keyed.emplace_back(f.backbone ? int(f.backbone->value) + 1 : 0, filters[i]);
    }
    std::sort(keyed.begin(), keyed.end());
    for (auto& [key, f] : keyed) result.order.push_back(f);
    return result;
}

double oracle_expected_cost(const DnfFormula& formula, const FilterCatalog& catalog,
                            int enum_limit, int samples, Rng rng) {
    FormulaIndex idx(formula, catalog);
    const int n = idx.size();
    if (n <= enum_limit) {
        double total = 0;
        for (std::uint32_t truth = 0; truth < (std::uint32_t(1) << n); ++truth) {
            double weight = 1.0;
            for (int i = 0; i < n; ++i)
                weight *= (truth >> i) & 1 ? idx.pass_prob(i) : 1.0 - idx.pass_prob(i);
            if (weight == 0.0) continue;
            Seconds cost = 0;
            cheapest_certificate(idx, truth, cost);
            total += weight * cost;
        }
        return total;
    }
    double total = 0;
    for (int s = 0; s < samples; ++s) {
        std::uint32_t truth = 0;
        for (int i = 0; i < n; ++i)
            if (rng.bernoulli(idx.pass_prob(i))) truth |= std::uint32_t(1) << i;
        Seconds cost = 0;
        cheapest_certificate(idx, truth, cost);
        total += cost;
    }
    return total / double(samples);
}

// --- Suite generation ---------------------------------------------------------

std::vector<DnfFormula> generate_suite(std::span<const Term> query_pool,
                                       const SuiteConfig& config) {
    if (query_pool.empty()) throw ConfigError("generate_suite: empty query pool");
    Rng root(config.seed);
    std::vector<DnfFormula> suite;
    suite.reserve(config.count);

    for (std::size_t k = 0; k < config.count; ++k) {
        Rng rng = root.fork(k);
        // Co-locate a bundle of queries, as one capture point would.
        std::size_t want = 1 + rng.uniform_int(std::min<std::size_t>(config.max_terms,
                                                                     query_pool.size()));
        std::vector<std::pair<std::vector<FilterId>, int>> terms;
        for (std::size_t j = 0; j < want; ++j) {
            const Term& t = query_pool[rng.uniform_int(query_pool.size())];
            terms.emplace_back(t.filters(), t.priority());
        }

        auto dedupe = [&terms]() {
            for (auto& [filters, priority] : terms) std::sort(filters.begin(), filters.end());
            std::sort(terms.begin(), terms.end());
            for (std::size_t i = 0; i + 1 < terms.size();) {
                if (terms[i].first == terms[i + 1].first) {
                    terms[i].second = std::max(terms[i].second, terms[i + 1].second);
                    terms.erase(terms.begin() + long(i) + 1);
                } else {
                    ++i;
                }
            }
        };
        auto distinct_filters = [&terms]() {
            std::set<std::uint16_t> ids;
            for (auto& [filters, priority] : terms)
                for (FilterId f : filters) ids.insert(f.value);
            return ids.size();
        };

        dedupe();
        // Truncate: drop a random filter from the widest term until the
        // formula fits.
        while (distinct_filters() > std::size_t(config.max_filters)) {
            std::size_t widest = 0;
            for (std::size_t i = 1; i < terms.size(); ++i)
                if (terms[i].first.size() > terms[widest].first.size()) widest = i;
            auto& filters = terms[widest].first;
            filters.erase(filters.begin() + long(rng.uniform_int(filters.size())));
            if (filters.empty()) terms.erase(terms.begin() + long(widest));
            dedupe();
        }

        std::vector<Term> built;
        built.reserve(terms.size());
        for (auto& [filters, priority] : terms) built.emplace_back(filters, priority);
        suite.emplace_back(std::move(built));
    }
    return suite;
}

// --- Benchmark ---------------------------------------------------------------

namespace {

PolicyStats stats_of(std::vector<double> values) {
    PolicyStats s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    return s;
}

} // namespace

PolicyBenchResult bench_policies(std::span<const DnfFormula> suite, const FilterCatalog& catalog,
                                 const PolicyBenchConfig& config) {
    PolicyBenchResult result;
    std::vector<double> greedy_b, exact_b, greedy_f, exact_f, oracle_f, static_f;
    Rng rng(config.seed);

    for (std::size_t i = 0; i < suite.size(); ++i) {
        const DnfFormula& formula = suite[i];
        if (formula.filter_set().size() > kExactFilterCap) {
            ++result.skipped;
            continue;
        }
        greedy_b.push_back(greedy_expected_cost(formula, catalog, config.beta, config.alpha));
        exact_b.push_back(exact_policy(formula, catalog, config.beta, config.alpha).expected_cost);
        greedy_f.push_back(greedy_expected_cost(formula, catalog, 0.0, 1.0));
        exact_f.push_back(exact_policy(formula, catalog, 0.0, 1.0).expected_cost);
        static_f.push_back(static_baseline_expected_cost(formula, catalog));
        oracle_f.push_back(oracle_expected_cost(formula, catalog, config.oracle_enum_limit,
                                                config.oracle_samples, rng.fork(i)));
        ++result.formulas;
    }

    result.greedy_banded = stats_of(greedy_b);
    result.exact_banded = stats_of(exact_b);
    result.greedy_full = stats_of(greedy_f);
    result.exact_full = stats_of(exact_f);
    result.oracle_full = stats_of(oracle_f);
    result.static_full = stats_of(static_f);
    if (result.exact_banded.mean > 0)
        result.rel_error_banded =
            (result.greedy_banded.mean - result.exact_banded.mean) / result.exact_banded.mean;
    if (result.exact_full.mean > 0)
        result.rel_error_full =
            (result.greedy_full.mean - result.exact_full.mean) / result.exact_full.mean;
    return result;
}

std::string format_bench_report(const PolicyBenchResult& r, const PolicyBenchConfig& config) {
    std::ostringstream out;
    char line[160];
    out << "Per-image evaluation time over " << r.formulas << " formulas";
    if (r.skipped) out << " (" << r.skipped << " skipped: beyond exact-solver cap)";
    out << "\n\n";
    out << "Method                                Mean (s)   Median (s)\n";
    auto row = [&](const char* name, const PolicyStats& s) {
        std::snprintf(line, sizeof(line), "%-36s %8.3f   %8.3f\n", name, s.mean, s.median);
        out << line;
    };
    std::snprintf(line, sizeof(line), "greedy, band [%.2f, %.2f]", config.beta, config.alpha);
    row(line, r.greedy_banded);
    std::snprintf(line, sizeof(line), "exact, band [%.2f, %.2f]", config.beta, config.alpha);
    row(line, r.exact_banded);
    row("greedy, to decision", r.greedy_full);
    row("exact, to decision", r.exact_full);
    row("oracle (knows ground truth)", r.oracle_full);
    row("static baseline, to decision", r.static_full);
    std::snprintf(line, sizeof(line),
                  "\ngreedy vs exact relative error: %.4f (banded), %.4f (to decision)\n",
                  r.rel_error_banded, r.rel_error_full);
    out << line;
    return out.str();
}

} // namespace earthsight
