#include "earthsight/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace earthsight {

void Query::validate(const FilterCatalog& catalog) const {
    if (aoi.empty()) throw std::invalid_argument("Query " + std::to_string(id) + ": empty AOI");
    if (priority < 1 || priority > 5)
        throw std::invalid_argument("Query " + std::to_string(id) + ": priority out of {1..5}");
    if (latency_sensitive && filters.empty())
        throw std::invalid_argument("Query " + std::to_string(id) + ": no filters");
    for (FilterId f : filters) catalog.filter(f); // throws CatalogError when unknown
}

void CapturePlan::validate() const {
    std::map<int, Seconds> last;
    for (const Capture& c : captures) {
        auto it = last.find(c.satellite);
        if (it != last.end() && c.time <= it->second)
            throw std::invalid_argument("CapturePlan: capture times not strictly increasing");
        last[c.satellite] = c.time;
    }
}

std::vector<const Query*> aoi_match(const GeoPoint& loc, std::span<const Query> queries) {
    std::vector<const Query*> out;
    for (const Query& q : queries)
        if (q.aoi.contains(loc)) out.push_back(&q);
    return out;
}

QueryIndex::QueryIndex(std::span<const Query> queries, int cells_per_axis)
    : queries_(queries), cells_(cells_per_axis), cell_queries_(std::size_t(cells_) * cells_) {
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        for (const GeoBox& b : queries[qi].aoi.bounding_boxes()) {
            int lat_lo = int((b.lat_min + 90.0) / 180.0 * cells_);
            int lat_hi = int((b.lat_max + 90.0) / 180.0 * cells_);
            int lon_lo = int((b.lon_min + 180.0) / 360.0 * cells_);
            int lon_hi = int((b.lon_max + 180.0) / 360.0 * cells_);
            lat_lo = std::clamp(lat_lo, 0, cells_ - 1);
            lat_hi = std::clamp(lat_hi, 0, cells_ - 1);
            lon_lo = std::clamp(lon_lo, 0, cells_ - 1);
            lon_hi = std::clamp(lon_hi, 0, cells_ - 1);
            for (int a = lat_lo; a <= lat_hi; ++a)
                for (int o = lon_lo; o <= lon_hi; ++o)
                    cell_queries_[std::size_t(a) * cells_ + o].push_back(std::uint32_t(qi));
        }
    }
    for (auto& cell : cell_queries_) {
        std::sort(cell.begin(), cell.end());
        cell.erase(std::unique(cell.begin(), cell.end()), cell.end());
    }
}

std::size_t QueryIndex::cell_of(double lat, double lon) const {
    int a = std::clamp(int((lat + 90.0) / 180.0 * cells_), 0, cells_ - 1);
    int o = std::clamp(int((lon + 180.0) / 360.0 * cells_), 0, cells_ - 1);
    return std::size_t(a) * cells_ + o;
}

std::vector<const Query*> QueryIndex::match(const GeoPoint& loc) const {
    std::vector<const Query*> out;
    for (std::uint32_t qi : cell_queries_[cell_of(loc.lat, loc.lon)])
        if (queries_[qi].aoi.contains(loc)) out.push_back(&queries_[qi]);
    return out;
}

namespace {

std::optional<DnfFormula> build_formula(const std::vector<const Query*>& matched, int p_star) {
    // Conjunctions that can grant priority >= p_star become terms; duplicate
    // filter sets keep the highest priority.
    std::map<std::vector<FilterId>, int> by_filters;
    for (const Query* q : matched) {
        if (!q->latency_sensitive) continue; // bypasses inference
        if (q->priority < p_star || q->priority < 2) continue;
        std::vector<FilterId> filters = q->filters;
        std::sort(filters.begin(), filters.end());
        filters.erase(std::unique(filters.begin(), filters.end()), filters.end());
        auto [it, inserted] = by_filters.emplace(std::move(filters), q->priority);
        if (!inserted) it->second = std::max(it->second, q->priority);
    }
    if (by_filters.empty()) return std::nullopt;

    // Canonical term order: priority descending, then filter sets.
    std::vector<std::pair<std::vector<FilterId>, int>> sorted(by_filters.begin(), by_filters.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<Term> terms;
    terms.reserve(sorted.size());
    for (auto& [filters, priority] : sorted) terms.emplace_back(filters, priority);
    return DnfFormula(std::move(terms));
}

} // namespace

std::optional<DnfFormula> formula_for_location(const GeoPoint& loc,
                                               std::span<const Query> queries, int p_star) {
    return build_formula(aoi_match(loc, queries), p_star);
}

std::vector<ScheduleEntry> generate_schedule(const CapturePlan& plan,
                                             std::span<const Query> queries, int p_star) {
    if (p_star < 2 || p_star > 5)
        throw std::invalid_argument("generate_schedule: p_star out of {2..5}");
    QueryIndex index(queries);
    std::vector<ScheduleEntry> schedule;
    for (std::size_t i = 0; i < plan.captures.size(); ++i) {
        auto formula = build_formula(index.match(plan.captures[i].loc), p_star);
        if (!formula) continue;
        if (!schedule.empty()) {
            ScheduleEntry& last = schedule.back();
            if (last.first_capture + last.capture_count == i && last.formula == *formula) {
                ++last.capture_count;
                continue;
            }
        }
        schedule.push_back(ScheduleEntry{i, 1, std::move(*formula)});
    }
    return schedule;
}

// --- Codec ---------------------------------------------------------------------

namespace {

constexpr std::uint8_t kMagic[4] = {'E', 'S', 'C', 'H'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kRunEscape = 0xFF;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(std::uint8_t(v & 0xFF));
    out.push_back(std::uint8_t(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t((v >> (8 * i)) & 0xFF));
}

void emit_run(std::vector<std::uint8_t>& out, std::uint8_t index, std::size_t length) {
    while (length > 0) {
        std::size_t chunk = std::min<std::size_t>(length, 0xFFFF);
        if (chunk == 1) {
            out.push_back(index);
        } else {
            out.push_back(index);
            out.push_back(kRunEscape);
            put_u16(out, std::uint16_t(chunk));
        }
        length -= chunk;
    }
}

} // namespace

EncodedSchedule encode_schedule(std::span<const ScheduleEntry> entries,
                                std::size_t capture_count) {
    // Entries must be ordered and non-overlapping.
    std::size_t covered_end = 0;
    for (const ScheduleEntry& e : entries) {
        if (e.capture_count == 0)
            throw std::invalid_argument("encode_schedule: entry covering zero captures");
        if (e.first_capture < covered_end)
            throw std::invalid_argument("encode_schedule: entries overlap or are unordered");
        covered_end = e.first_capture + e.capture_count;
    }
    if (capture_count == 0) capture_count = covered_end;
    if (capture_count < covered_end)
        throw std::invalid_argument("encode_schedule: capture_count below last entry");
    if (capture_count > 0xFFFFFFFFull)
        throw std::length_error("encode_schedule: capture count exceeds u32");

    // Unique-formula table; slot 0 is the "no inference" marker.
    std::map<std::vector<std::uint8_t>, std::uint8_t> table;
    std::vector<std::vector<std::uint8_t>> formulas;
    {
        std::vector<std::uint8_t> empty;
        encode_empty_formula(empty);
        table.emplace(empty, 0);
        formulas.push_back(std::move(empty));
    }
    std::vector<std::uint8_t> entry_index(entries.size());
    std::size_t naive = 0;
    std::size_t covered = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        std::vector<std::uint8_t> enc;
        encode_formula(entries[i].formula, enc);
        naive += enc.size() * entries[i].capture_count;
        covered += entries[i].capture_count;
        auto it = table.find(enc);
        if (it == table.end()) {
            if (formulas.size() > kCodecMaxFormulas)
                throw std::length_error("encode_schedule: more than " +
                                        std::to_string(kCodecMaxFormulas) +
                                        " unique formulas; split the horizon");
            it = table.emplace(enc, std::uint8_t(formulas.size())).first;
            formulas.push_back(std::move(enc));
        }
        entry_index[i] = it->second;
    }
    naive += capture_count - covered; // uncovered captures inline as the 1-byte marker

    EncodedSchedule out;
    out.bytes.assign(std::begin(kMagic), std::end(kMagic));
    out.bytes.push_back(kVersion);
    out.bytes.push_back(std::uint8_t(formulas.size() - 1));
    for (const auto& enc : formulas) out.bytes.insert(out.bytes.end(), enc.begin(), enc.end());
    put_u32(out.bytes, std::uint32_t(capture_count));

    // Index stream: walk captures, emitting runs. Gaps map to index 0.
    std::size_t pos = 0;
    std::size_t ei = 0;
    while (pos < capture_count) {
        if (ei < entries.size() && entries[ei].first_capture == pos) {
            emit_run(out.bytes, entry_index[ei], entries[ei].capture_count);
            pos += entries[ei].capture_count;
            ++ei;
        } else {
            std::size_t gap_end = ei < entries.size() ? entries[ei].first_capture : capture_count;
            emit_run(out.bytes, 0, gap_end - pos);
            pos = gap_end;
        }
    }
    out.naive_size = naive;
    return out;
}

std::vector<ScheduleEntry> decode_schedule(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        if (pos + n > bytes.size()) throw CodecError("truncated schedule", pos);
    };
    need(4);
    for (int i = 0; i < 4; ++i)
        if (bytes[pos + i] != kMagic[i]) throw CodecError("bad magic", pos + i);
    pos += 4;
    need(1);
    if (bytes[pos] != kVersion) throw CodecError("unsupported version", pos);
    ++pos;
    need(1);
    std::size_t formula_count = std::size_t(bytes[pos]) + 1;
    ++pos;

    std::vector<std::optional<DnfFormula>> formulas;
    formulas.reserve(formula_count);
    for (std::size_t i = 0; i < formula_count; ++i)
        formulas.push_back(decode_formula(bytes, pos));

    need(4);
    std::uint32_t capture_count = 0;
    for (int i = 0; i < 4; ++i) capture_count |= std::uint32_t(bytes[pos + i]) << (8 * i);
    pos += 4;

    std::vector<ScheduleEntry> entries;
    std::size_t capture = 0;
    while (capture < capture_count) {
        need(1);
        std::uint8_t index = bytes[pos++];
        if (index == kRunEscape) throw CodecError("escape byte where index expected", pos - 1);
        if (index >= formulas.size()) throw CodecError("formula index out of table", pos - 1);
        std::size_t run = 1;
        if (pos < bytes.size() && bytes[pos] == kRunEscape) {
            ++pos;
            need(2);
            run = std::size_t(bytes[pos]) | (std::size_t(bytes[pos + 1]) << 8);
            pos += 2;
            if (run < 2) throw CodecError("run length below 2", pos - 2);
        }
        if (capture + run > capture_count) throw CodecError("run past capture count", pos - 1);
        if (formulas[index]) {
            if (!entries.empty() && entries.back().formula == *formulas[index] &&
                entries.back().first_capture + entries.back().capture_count == capture) {
                entries.back().capture_count += run;
            } else {
                entries.push_back(ScheduleEntry{capture, run, *formulas[index]});
            }
        }
        capture += run;
    }
    if (pos != bytes.size()) throw CodecError("trailing bytes after schedule", pos);
    return entries;
}

// --- Filter statistics ----------------------------------------------------------

FilterStats update_filter_stats(const FilterStats& stats, std::span<const UsageReport> reports,
                                double blend_weight, Seconds now) {
    FilterStats next = stats;
    for (const UsageReport& r : reports) {
        if (r.executed == 0) continue; // nothing observed
        if (r.passed > r.executed)
            throw std::invalid_argument("UsageReport: passed exceeds executed");
        auto it = next.find(r.filter);
        double prior = it != next.end() ? it->second.pass_prob : 0.5;
        double updated = (double(r.passed) + 1.0 + blend_weight * prior) /
                         (double(r.executed) + 2.0 + blend_weight);
        if (it != next.end()) {
            it->second.pass_prob = updated;
            it->second.updated_at = now;
        } else {
            next[r.filter] = FilterStatsEntry{updated, 0.95, now};
        }
    }
    return next;
}

void apply_stats(FilterCatalog& catalog, const FilterStats& stats) {
    for (const auto& [id, entry] : stats) {
        if (catalog.find(id)) catalog.set_pass_prob(id, entry.pass_prob);
    }
}

} // namespace earthsight
