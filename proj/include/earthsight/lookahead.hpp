#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "earthsight/formula.hpp"
#include "earthsight/rng.hpp"
#include "earthsight/types.hpp"

namespace earthsight {

struct DownlinkWindow {
    int satellite = 0;
    int station = 0;
    Seconds start = 0;
    Seconds end = 0;          // > start
    double bandwidth = 0;     // bytes per second

    double capacity() const { return (end - start) * bandwidth; }
};

/// Expected bytes per transmit tier, indexed by Priority::rank().
class PriorityLedger {
public:
    void add(Priority tier, double bytes) { bins_[tier.rank()] += bytes; }
    double bin(Priority tier) const { return bins_[tier.rank()]; }
    double total() const;
    /// Expected bytes at tier `tier` and above in transmit order.
    double at_or_above(Priority tier) const;
    const std::array<double, kTierCount>& bins() const { return bins_; }

private:
    std::array<double, kTierCount> bins_{};
};

struct TransmitPlanSlot {
    std::size_t window = 0;
    Priority tier;
    double bytes = 0;
};

struct Forecast {
    Priority p_star = Priority::fifo(); // lowest tier whose volume (and above) fits
    double r_reject = 0;                // (|inference| - |downlink|) / |inference|
    double capacity = 0;                // bytes across forecast windows
    double inference_images = 0;        // expected images requiring computation
    double downlink_images = 0;         // expected count transmittable at or above p_star
    PriorityLedger ledger;
    std::vector<TransmitPlanSlot> plan;
};

/// One forecast capture: its size and the formula (if any) the schedule would
/// assign, or a fixed priority for inference-bypassing queries.
struct CaptureForecast {
    double size_bytes = 0;
    std::optional<DnfFormula> formula;
    std::optional<int> bypass_priority;
};

struct LookaheadConfig {
    int enum_filter_limit = 16; // exact distribution up to here
    int mc_samples = 4096;      // Monte Carlo beyond
    std::uint64_t mc_seed = 17;
};

/// Exact (or seeded Monte Carlo) distribution of the priority the runtime
/// would assign, over {term priorities} plus p_compute, under the catalog's
/// current pass probabilities.
std::map<Priority, double> priority_distribution(const DnfFormula& formula,
                                                 const FilterCatalog& catalog,
                                                 const LookaheadConfig& config = {});

struct LookaheadInputs {
    std::vector<CaptureForecast> captures; // forecast captures until horizon end
    std::vector<DownlinkWindow> windows;   // remaining windows, sorted by start
    PriorityLedger backlog;                // bytes already queued on the satellite
};

/// Fills the ledger from per-capture priority distributions, sums window
/// capacity, picks p* as the lowest tier whose cumulative expected bytes fit,
/// and derives the target rejection rate.
Forecast forecast_contact(const LookaheadInputs& inputs, const FilterCatalog& catalog,
                          const LookaheadConfig& config = {});

/// Re-runs the forecast once ground truth for the elapsed part is known:
/// callers fold actual backlog and remaining captures/windows into `inputs`.
/// Deterministic given inputs; identical inputs reproduce the prior forecast.
Forecast reconcile(const LookaheadInputs& inputs, const FilterCatalog& catalog,
                   const LookaheadConfig& config = {});

std::string format_forecast(const Forecast& f);

} // namespace earthsight
