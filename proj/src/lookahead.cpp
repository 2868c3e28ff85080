#include "earthsight/lookahead.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace earthsight {

double PriorityLedger::total() const {
    double t = 0;
    for (double b : bins_) t += b;
    return t;
}

double PriorityLedger::at_or_above(Priority tier) const {
    double t = 0;
    for (int r = tier.rank(); r < kTierCount; ++r) t += bins_[r];
    return t;
}

namespace {

Priority assigned_priority(const DnfFormula& formula, const std::vector<FilterId>& filters,
                           std::uint32_t truth_mask) {
    int best = 0;
    for (const Term& t : formula.terms()) {
        bool all = true;
        for (FilterId f : t.filters()) {
            std::size_t i = std::size_t(
                std::lower_bound(filters.begin(), filters.end(), f) - filters.begin());
            if (!((truth_mask >> i) & 1)) {
                all = false;
                break;
            }
        }
        if (all) best = std::max(best, t.priority());
    }
    return best == 0 ? Priority::compute() : Priority::level(best);
}

} // namespace

std::map<Priority, double> priority_distribution(const DnfFormula& formula,
                                                 const FilterCatalog& catalog,
                                                 const LookaheadConfig& config) {
    std::vector<FilterId> filters = formula.filter_set();
    const std::size_t n = filters.size();
    std::vector<double> pass(n);
    for (std::size_t i = 0; i < n; ++i) pass[i] = catalog.filter(filters[i]).pass_prob;

    std::map<Priority, double> dist;
    if (n <= std::size_t(config.enum_filter_limit)) {
        for (std::uint32_t mask = 0; mask < (std::uint32_t(1) << n); ++mask) {
            double w = 1.0;
            for (std::size_t i = 0; i < n; ++i) w *= (mask >> i) & 1 ? pass[i] : 1.0 - pass[i];
            if (w == 0.0) continue;
            dist[assigned_priority(formula, filters, mask)] += w;
        }
    } else {
        Rng rng(config.mc_seed);
        for (int s = 0; s < config.mc_samples; ++s) {
            std::uint32_t mask = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (rng.bernoulli(pass[i])) mask |= std::uint32_t(1) << i;
            dist[assigned_priority(formula, filters, mask)] += 1.0 / config.mc_samples;
        }
    }
    return dist;
}

Forecast forecast_contact(const LookaheadInputs& inputs, const FilterCatalog& catalog,
                          const LookaheadConfig& config) {
    Forecast f;
    f.ledger = inputs.backlog;

    // Cache distributions: schedules repeat a small set of unique formulas.
    std::map<std::vector<std::uint8_t>, std::map<Priority, double>> cache;

    for (const CaptureForecast& c : inputs.captures) {
        if (c.bypass_priority) {
            f.ledger.add(Priority::level(*c.bypass_priority), c.size_bytes);
            continue;
        }
        if (!c.formula) {
            f.ledger.add(Priority::fifo(), c.size_bytes);
            continue;
        }
        std::vector<std::uint8_t> key;
        encode_formula(*c.formula, key);
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, priority_distribution(*c.formula, catalog, config)).first;
        f.inference_images += 1.0;
        for (const auto& [tier, prob] : it->second) f.ledger.add(tier, prob * c.size_bytes);
    }

    for (const DownlinkWindow& w : inputs.windows) f.capacity += w.capacity();

    // p*: lowest tier whose cumulative volume, at and above, fits the
    // capacity. Nothing fits (or no window at all) -> the maximum priority.
    f.p_star = Priority::max();
    if (f.capacity > 0) {
        for (int rank = 0; rank < kTierCount; ++rank) {
            Priority tier = Priority::from_rank(rank);
            if (f.ledger.at_or_above(tier) <= f.capacity) {
                f.p_star = tier;
                break;
            }
        }
    }

    // Expected images computable vs transmittable above the threshold.
    if (f.capacity > 0) {
        for (const CaptureForecast& c : inputs.captures) {
            if (c.bypass_priority || !c.formula) continue;
            std::vector<std::uint8_t> key;
            encode_formula(*c.formula, key);
            for (const auto& [tier, prob] : cache.at(key))
                if (tier >= f.p_star) f.downlink_images += prob;
        }
    }
    f.r_reject = f.inference_images > 0
                     ? (f.inference_images - f.downlink_images) / f.inference_images
                     : 0.0;
    f.r_reject = std::clamp(f.r_reject, 0.0, 1.0);

    // Informational transmit plan: pour tiers, highest first, into windows.
    std::size_t window = 0;
    double room = inputs.windows.empty() ? 0.0 : inputs.windows[0].capacity();
    for (int rank = kTierCount - 1; rank >= 0 && window < inputs.windows.size(); --rank) {
        double remaining = f.ledger.bin(Priority::from_rank(rank));
        while (remaining > 0 && window < inputs.windows.size()) {
            double take = std::min(remaining, room);
            if (take > 0)
                f.plan.push_back(TransmitPlanSlot{window, Priority::from_rank(rank), take});
            remaining -= take;
            room -= take;
            if (room <= 0 && ++window < inputs.windows.size())
                room = inputs.windows[window].capacity();
        }
    }
    return f;
}

Forecast reconcile(const LookaheadInputs& inputs, const FilterCatalog& catalog,
                   const LookaheadConfig& config) {
    return forecast_contact(inputs, catalog, config);
}

std::string format_forecast(const Forecast& f) {
    std::ostringstream out;
    out << "p_star=" << f.p_star.label() << " r_reject=" << f.r_reject
        << " capacity_bytes=" << f.capacity << " inference_images=" << f.inference_images
        << " downlink_images=" << f.downlink_images << " bins=[";
    for (int rank = kTierCount - 1; rank >= 0; --rank) {
        out << Priority::from_rank(rank).label() << ":" << f.ledger.bin(Priority::from_rank(rank));
        if (rank > 0) out << " ";
    }
    out << "]";
    return out.str();
}

} // namespace earthsight
