#include "earthsight/formula.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace earthsight {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

} // namespace

Term::Term(std::vector<FilterId> filters, int priority)
    : filters_(std::move(filters)), priority_(priority) {
    require(!filters_.empty(), "Term: filter set must be non-empty");
    require(priority_ >= 2 && priority_ <= 5, "Term: priority must be in {2..5}");
    std::sort(filters_.begin(), filters_.end());
    require(std::adjacent_find(filters_.begin(), filters_.end()) == filters_.end(),
            "Term: duplicate filter id");
}

bool Term::contains(FilterId f) const {
    return std::binary_search(filters_.begin(), filters_.end(), f);
}

DnfFormula::DnfFormula(std::vector<Term> terms) : terms_(std::move(terms)) {
    require(!terms_.empty(), "DnfFormula: term list must be non-empty");
    // Duplicate terms are rejected, not deduplicated: a duplicate here means a
    // ground-scheduler bug upstream.
    for (std::size_t i = 0; i < terms_.size(); ++i)
        for (std::size_t j = i + 1; j < terms_.size(); ++j)
            require(terms_[i].filters() != terms_[j].filters(),
                    "DnfFormula: two terms with identical filter sets");
}

std::vector<FilterId> DnfFormula::filter_set() const {
    std::vector<FilterId> all;
    for (const Term& t : terms_)
        all.insert(all.end(), t.filters().begin(), t.filters().end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

int DnfFormula::max_priority() const {
    int p = 2;
    for (const Term& t : terms_) p = std::max(p, t.priority());
    return p;
}

void FilterCatalog::add(Filter f) {
    filters_[f.id.value] = f;
}

void FilterCatalog::add(Backbone b) {
    backbones_[b.id.value] = b;
}

const Filter& FilterCatalog::filter(FilterId id) const {
    auto it = filters_.find(id.value);
    if (it == filters_.end())
        throw CatalogError("unknown filter id " + std::to_string(id.value));
    return it->second;
}

const Filter* FilterCatalog::find(FilterId id) const {
    auto it = filters_.find(id.value);
    return it == filters_.end() ? nullptr : &it->second;
}

Seconds FilterCatalog::backbone_load_time(BackboneId id) const {
    auto it = backbones_.find(id.value);
    if (it == backbones_.end())
        throw CatalogError("unknown backbone id " + std::to_string(id.value));
    return it->second.load_time;
}

bool FilterCatalog::has_backbone(BackboneId id) const {
    return backbones_.count(id.value) != 0;
}

std::vector<FilterId> FilterCatalog::filter_ids() const {
    std::vector<FilterId> ids;
    ids.reserve(filters_.size());
    for (const auto& [v, f] : filters_) ids.push_back(FilterId{v});
    return ids;
}

void FilterCatalog::set_pass_prob(FilterId id, double p) {
    auto it = filters_.find(id.value);
    if (it == filters_.end())
        throw CatalogError("unknown filter id " + std::to_string(id.value));
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("pass_prob out of [0,1]");
    it->second.pass_prob = p;
}

void FilterCatalog::set_accuracy(FilterId id, double tpr, double fpr) {
    auto it = filters_.find(id.value);
    if (it == filters_.end())
        throw CatalogError("unknown filter id " + std::to_string(id.value));
    it->second.tpr = tpr;
    it->second.fpr = fpr;
}

void FilterCatalog::validate() const {
    for (const auto& [v, f] : filters_) {
        require(f.id.value == v, "FilterCatalog: id key mismatch");
        require(f.head_time > 0, "FilterCatalog: head_time must be > 0");
        require(f.pass_prob >= 0.0 && f.pass_prob <= 1.0, "FilterCatalog: pass_prob out of [0,1]");
        require(f.tpr > 0.0 && f.tpr <= 1.0, "FilterCatalog: tpr out of (0,1]");
        require(f.fpr >= 0.0 && f.fpr < 1.0, "FilterCatalog: fpr out of [0,1)");
        require(f.tpr > f.fpr, "FilterCatalog: tpr must exceed fpr");
        if (f.backbone && backbones_.count(f.backbone->value) == 0)
            throw CatalogError("filter " + std::to_string(v) + " references unknown backbone " +
                               std::to_string(f.backbone->value));
    }
    for (const auto& [v, b] : backbones_)
        require(b.load_time > 0, "FilterCatalog: backbone load_time must be > 0");
}

std::optional<bool> ExecutionState::outcome(FilterId f) const {
    auto it = outcomes_.find(f.value);
    if (it == outcomes_.end()) return std::nullopt;
    return it->second;
}

void ExecutionState::record(FilterId f, bool outcome) {
    auto [it, inserted] = outcomes_.emplace(f.value, outcome);
    if (!inserted)
        throw std::logic_error("ExecutionState: outcome for filter " +
                               std::to_string(f.value) + " recorded twice");
}

bool term_satisfied(const Term& term, const ExecutionState& state) {
    for (FilterId f : term.filters()) {
        auto o = state.outcome(f);
        if (!o || !*o) return false;
    }
    return true;
}

bool term_dead(const Term& term, const ExecutionState& state) {
    for (FilterId f : term.filters()) {
        auto o = state.outcome(f);
        if (o && !*o) return true;
    }
    return false;
}

bool formula_decided(const DnfFormula& formula, const ExecutionState& state) {
    bool all_dead = true;
    for (const Term& t : formula.terms()) {
        if (term_satisfied(t, state)) return true;
        if (!term_dead(t, state)) all_dead = false;
    }
    return all_dead;
}

int live_term_count(const DnfFormula& formula, FilterId f, const ExecutionState& state) {
    int n = 0;
    for (const Term& t : formula.terms())
        if (t.contains(f) && !term_dead(t, state)) ++n;
    return n;
}

double term_probability(const Term& term, const ExecutionState& state,
                        const FilterCatalog& catalog) {
    double p = 1.0;
    for (FilterId f : term.filters()) {
        auto o = state.outcome(f);
        if (o) {
            if (!*o) return 0.0;
        } else {
            p *= catalog.filter(f).pass_prob;
        }
    }
    return p;
}

double confidence(const DnfFormula& formula, const ExecutionState& state,
                  const FilterCatalog& catalog) {
    double miss = 1.0;
    for (const Term& t : formula.terms())
        miss *= 1.0 - term_probability(t, state, catalog);
    return 1.0 - miss;
}

std::optional<int> decided_priority(const DnfFormula& formula, const ExecutionState& state) {
    std::optional<int> best;
    for (const Term& t : formula.terms())
        if (term_satisfied(t, state) && (!best || t.priority() > *best))
            best = t.priority();
    return best;
}

// --- Wire encoding -----------------------------------------------------------

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(std::uint8_t(v & 0xFF));
    out.push_back(std::uint8_t(v >> 8));
}

std::uint8_t take_u8(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    if (pos >= bytes.size()) throw CodecError("truncated input", pos);
    return bytes[pos++];
}

std::uint16_t take_u16(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    if (pos + 2 > bytes.size()) throw CodecError("truncated input", pos);
    std::uint16_t v = std::uint16_t(bytes[pos]) | (std::uint16_t(bytes[pos + 1]) << 8);
    pos += 2;
    return v;
}

} // namespace

void encode_formula(const DnfFormula& formula, std::vector<std::uint8_t>& out) {
    const auto& terms = formula.terms();
    if (terms.size() > 255)
        throw std::invalid_argument("encode_formula: more than 255 terms");
    out.push_back(std::uint8_t(terms.size()));
    for (const Term& t : terms) {
        if (t.filters().size() > 255)
            throw std::invalid_argument("encode_formula: more than 255 filters in a term");
        out.push_back(std::uint8_t(t.priority()));
        out.push_back(std::uint8_t(t.filters().size()));
        for (FilterId f : t.filters()) put_u16(out, f.value);
    }
}

void encode_empty_formula(std::vector<std::uint8_t>& out) {
    out.push_back(0);
}

std::size_t encoded_formula_size(const DnfFormula& formula) {
    std::size_t n = 1;
    for (const Term& t : formula.terms()) n += 2 + 2 * t.filters().size();
    return n;
}

std::optional<DnfFormula> decode_formula(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    const std::size_t start = pos;
    std::uint8_t term_count = take_u8(bytes, pos);
    if (term_count == 0) return std::nullopt;
    std::vector<Term> terms;
    terms.reserve(term_count);
    for (int i = 0; i < term_count; ++i) {
        std::uint8_t priority = take_u8(bytes, pos);
        if (priority < 2 || priority > 5)
            throw CodecError("term priority out of {2..5}", pos - 1);
        std::uint8_t count = take_u8(bytes, pos);
        if (count == 0) throw CodecError("empty term", pos - 1);
        std::vector<FilterId> filters;
        filters.reserve(count);
        for (int j = 0; j < count; ++j) filters.push_back(FilterId{take_u16(bytes, pos)});
        try {
            terms.emplace_back(std::move(filters), priority);
        } catch (const std::invalid_argument& e) {
            throw CodecError(e.what(), start);
        }
    }
    try {
        return DnfFormula(std::move(terms));
    } catch (const std::invalid_argument& e) {
        throw CodecError(e.what(), start);
    }
}

} // namespace earthsight
