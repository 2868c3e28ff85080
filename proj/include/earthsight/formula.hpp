#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "earthsight/types.hpp"

namespace earthsight {

/// Shared feature extractor whose load cost is amortized across the filter
/// heads that depend on it.
struct Backbone {
    BackboneId id;
    Seconds load_time = 0; // > 0
};

/// A stochastic predicate over an image: one task head, optionally tied to a
/// shared backbone. pass_prob is the ground-estimated probability the filter
/// reports True; tpr/fpr describe its accuracy against hidden ground truth
/// (fpr is consumed only by the outcome simulator).
struct Filter {
    FilterId id;
    std::optional<BackboneId> backbone; // absent: standalone single-task model
    Seconds head_time = 0;              // > 0
    double pass_prob = 0;               // [0, 1]
    double tpr = 1;                     // (0, 1]
    double fpr = 0;                     // [0, 1)
};

/// Conjunction of filters with the downlink priority it grants when all of
/// them pass. Priority starts at 2: priority-1 content rides the FIFO tier
/// and never triggers prioritized downlink.
class Term {
public:
    Term(std::vector<FilterId> filters, int priority);

    const std::vector<FilterId>& filters() const { return filters_; } // sorted, unique
    int priority() const { return priority_; }
    bool contains(FilterId f) const;

    bool operator==(const Term&) const = default;

private:
    std::vector<FilterId> filters_;
    int priority_;
};

/// Positive DNF over filter outcomes: the image is prioritized if any term is
/// satisfied. Terms with identical filter sets are rejected at construction.
class DnfFormula {
public:
    explicit DnfFormula(std::vector<Term> terms);

    const std::vector<Term>& terms() const { return terms_; }
    std::vector<FilterId> filter_set() const; // union over terms, sorted
    int max_priority() const;

    bool operator==(const DnfFormula&) const = default;

private:
    std::vector<Term> terms_;
};

/// All filters and backbones known in one scenario. Ground and satellite
/// sides share the same catalog within a run.
class FilterCatalog {
public:
    void add(Filter f);
    void add(Backbone b);

    const Filter& filter(FilterId id) const; // throws CatalogError
    const Filter* find(FilterId id) const;
    Seconds backbone_load_time(BackboneId id) const; // throws CatalogError
    bool has_backbone(BackboneId id) const;

    std::vector<FilterId> filter_ids() const; // sorted
    std::size_t filter_count() const { return filters_.size(); }

    void set_pass_prob(FilterId id, double p);
    void set_accuracy(FilterId id, double tpr, double fpr);

    /// Field ranges plus referential integrity of backbone links.
    void validate() const;

private:
    std::map<std::uint16_t, Filter> filters_;
    std::map<std::uint16_t, Backbone> backbones_;
};

/// Executed filters with their Boolean outcomes, plus the backbones loaded so
/// far, for a single image. Outcomes are write-once.
class ExecutionState {
public:
    std::optional<bool> outcome(FilterId f) const;
    bool evaluated(FilterId f) const { return outcomes_.count(f.value) != 0; }
    void record(FilterId f, bool outcome);

    bool backbone_loaded(BackboneId b) const { return loaded_.count(b.value) != 0; }
    void load_backbone(BackboneId b) { loaded_.insert(b.value); }

    std::size_t executed_count() const { return outcomes_.size(); }
    const std::map<std::uint16_t, bool>& outcomes() const { return outcomes_; }
    const std::set<std::uint16_t>& loaded_backbones() const { return loaded_; }

private:
    std::map<std::uint16_t, bool> outcomes_;
    std::set<std::uint16_t> loaded_;
};

/// True when every filter of the term has outcome True.
bool term_satisfied(const Term& term, const ExecutionState& state);
/// True when some filter of the term has outcome False.
bool term_dead(const Term& term, const ExecutionState& state);
/// Formula value is logically determined: a term is satisfied or all are dead.
bool formula_decided(const DnfFormula& formula, const ExecutionState& state);
/// Number of live terms (no False outcome) containing the filter.
int live_term_count(const DnfFormula& formula, FilterId f, const ExecutionState& state);

/// Probability the term ends satisfied given the execution state: 0 if any of
/// its filters already failed, otherwise the product of pass_prob over its
/// unevaluated filters (empty product = 1, i.e. fully satisfied).
double term_probability(const Term& term, const ExecutionState& state,
                        const FilterCatalog& catalog);

/// Probability the image satisfies its formula given the execution state:
///   1 - prod_T (1 - P(T, E))
/// Exactly 1.0 when a term is fully satisfied; exactly 0.0 when every term
/// contains a failed filter. Terms are treated as independent even when they
/// share filters.
double confidence(const DnfFormula& formula, const ExecutionState& state,
                  const FilterCatalog& catalog);

/// Highest priority among fully satisfied terms, absent if none is satisfied.
std::optional<int> decided_priority(const DnfFormula& formula, const ExecutionState& state);

// --- Wire encoding, shared with the schedule codec ---------------------------
//
//   term    = priority (1 byte), filter count (1 byte), ids as u16 LE
//   formula = term count (1 byte), then terms
//
// A zero term count is valid on the wire and stands for "no formula"; it is
// how the schedule codec marks capture locations that need no inference.

void encode_formula(const DnfFormula& formula, std::vector<std::uint8_t>& out);
void encode_empty_formula(std::vector<std::uint8_t>& out);
std::size_t encoded_formula_size(const DnfFormula& formula);

/// Decodes one formula starting at `pos`, advancing it. Returns nullopt for
/// the zero-term marker. Throws CodecError on truncated or invalid bytes.
std::optional<DnfFormula> decode_formula(std::span<const std::uint8_t> bytes, std::size_t& pos);

} // namespace earthsight
