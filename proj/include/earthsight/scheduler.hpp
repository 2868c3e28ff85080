#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "earthsight/formula.hpp"
#include "earthsight/geometry.hpp"
#include "earthsight/types.hpp"

namespace earthsight {

/// A user query: a conjunction of filters, the priority granted when all of
/// them pass, and the region it watches. Queries with latency_sensitive set
/// to false bypass onboard inference entirely: matching captures are queued
/// at the query's priority without running filters.
struct Query {
    int id = 0;
    std::vector<FilterId> filters; // conjunction
    int priority = 1;              // {1..5}
    Aoi aoi;
    bool latency_sensitive = true;

    void validate(const FilterCatalog& catalog) const;
};

struct Capture {
    Seconds time = 0;
    GeoPoint loc;
    std::uint64_t size_bytes = 0;
    int satellite = 0;
};

/// Planned captures, strictly increasing in time per satellite.
struct CapturePlan {
    std::vector<Capture> captures;
    void validate() const;
};

/// One schedule row: a run of consecutive captures that share one formula.
struct ScheduleEntry {
    std::size_t first_capture = 0; // index into the plan slice it was built from
    std::size_t capture_count = 1; // merged consecutive captures
    DnfFormula formula;

    bool operator==(const ScheduleEntry&) const = default;
};

/// Queries whose AOI contains the point, in registration order. Exactly a
/// linear scan; QueryIndex below accelerates the same answer.
std::vector<const Query*> aoi_match(const GeoPoint& loc, std::span<const Query> queries);

/// Uniform lon/lat grid over query bounding boxes. Matching results are
/// identical to aoi_match; the grid only prunes candidates.
class QueryIndex {
public:
    QueryIndex(std::span<const Query> queries, int cells_per_axis = 64);
    std::vector<const Query*> match(const GeoPoint& loc) const;

private:
    std::span<const Query> queries_;
    int cells_;
    std::vector<std::vector<std::uint32_t>> cell_queries_;
    std::size_t cell_of(double lat, double lon) const;
};

/// Algorithm: for each planned capture, gather inference queries whose AOI
/// contains it, keep conjunctions that would grant priority >= p_star, build
/// the DNF (terms canonically ordered, duplicate conjunctions keep the
/// highest priority), and merge consecutive captures with identical formulas.
/// Captures matching nothing above threshold produce no entry.
std::vector<ScheduleEntry> generate_schedule(const CapturePlan& plan,
                                             std::span<const Query> queries, int p_star);

/// Same, for one location (used by the look-ahead forecaster).
std::optional<DnfFormula> formula_for_location(const GeoPoint& loc,
                                               std::span<const Query> queries, int p_star);

// --- Compressed schedule codec ------------------------------------------------
//
// Wire format, byte-exact:
//   magic "ESCH" | version 0x01 | unique-formula count minus 1 (1 byte)
//   | formula table (each per the formula wire encoding; slot 0 is always the
//     zero-term "no inference" formula)
//   | capture count (u32 LE)
//   | index stream: one byte per capture, runs of a repeated index emitted as
//     (index, 0xFF, run length u16 LE). Indices 0..254 are used directly;
//     0xFF is reserved as the run escape.

inline constexpr std::size_t kCodecMaxFormulas = 254; // slot 0 + escape reserved

struct EncodedSchedule {
    std::vector<std::uint8_t> bytes;
    std::size_t naive_size = 0; // every capture's formula serialized inline

    double compression_ratio() const {
        return bytes.empty() ? 0.0 : double(naive_size) / double(bytes.size());
    }
};

/// capture_count 0 means "up to the last covered capture".
EncodedSchedule encode_schedule(std::span<const ScheduleEntry> entries,
                                std::size_t capture_count = 0);
std::vector<ScheduleEntry> decode_schedule(std::span<const std::uint8_t> bytes);

// --- Filter statistics ---------------------------------------------------------

struct FilterStatsEntry {
    double pass_prob = 0.5;
    double tpr = 0.95;
    Seconds updated_at = 0;
};

using FilterStats = std::map<FilterId, FilterStatsEntry>;

/// Per-filter execution counts reported by a satellite at downlink.
struct UsageReport {
    FilterId filter;
    std::uint64_t executed = 0;
    std::uint64_t passed = 0;
};

/// Beta-posterior update with add-one smoothing, the shipped value acting as
/// a prior worth `blend_weight` pseudo-observations:
///   pass' = (passed + 1 + w * prior) / (executed + 2 + w)
/// Zero-count reports leave the entry untouched.
FilterStats update_filter_stats(const FilterStats& stats, std::span<const UsageReport> reports,
                                double blend_weight, Seconds now);

/// Push current stats into a working catalog (ground and satellite views).
void apply_stats(FilterCatalog& catalog, const FilterStats& stats);

} // namespace earthsight
