#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace earthsight {

using Seconds = double;
using Watts = double;
using Joules = double;

/// Identifier of an onboard filter (an ML predicate head). Small, dense,
/// unique within a scenario, and stable across ground and satellite sides.
struct FilterId {
    std::uint16_t value = 0;
    auto operator<=>(const FilterId&) const = default;
};

/// Identifier of a shared feature backbone.
struct BackboneId {
    std::uint16_t value = 0;
    auto operator<=>(const BackboneId&) const = default;
};

/// Downlink priority tier. Transmit order, highest first:
///   5, 4, 3, 2, p_compute, 1
/// p_compute sits between 2 and 1: images that were computed onboard but
/// rejected still precede untouched low-priority content.
class Priority {
public:
    constexpr Priority() : code_(1) {}

    static constexpr Priority level(int p) { return Priority(static_cast<std::int8_t>(p)); }
    static constexpr Priority fifo() { return Priority(1); }
    static constexpr Priority compute() { return Priority(kComputeCode); }
    static constexpr Priority max() { return Priority(5); }

    bool is_compute() const { return code_ == kComputeCode; }
    /// Explicit level 1..5; only valid when !is_compute().
    int level() const { return code_; }

    /// Position in the transmit order: 1 -> 0, p_compute -> 1, 2..5 -> 2..5.
    int rank() const { return code_ == kComputeCode ? 1 : (code_ == 1 ? 0 : code_); }

    std::string label() const { return is_compute() ? "pc" : std::to_string(int(code_)); }

    bool operator==(const Priority& o) const { return code_ == o.code_; }
    bool operator<(const Priority& o) const { return rank() < o.rank(); }
    bool operator<=(const Priority& o) const { return rank() <= o.rank(); }
    bool operator>(const Priority& o) const { return rank() > o.rank(); }
    bool operator>=(const Priority& o) const { return rank() >= o.rank(); }

    static Priority from_rank(int r);

private:
    static constexpr std::int8_t kComputeCode = 0;
    explicit constexpr Priority(std::int8_t code) : code_(code) {}
    std::int8_t code_;
};

inline Priority Priority::from_rank(int r) {
    switch (r) {
    case 0: return Priority::fifo();
    case 1: return Priority::compute();
    default: return Priority::level(r);
    }
}

/// Number of distinct transmit tiers.
inline constexpr int kTierCount = 6;

/// A formula or term refers to a filter the catalog does not know.
class CatalogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or truncated schedule bytes. Carries the byte offset at which
/// decoding failed.
class CodecError : public std::runtime_error {
public:
    CodecError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Invalid user-facing configuration; message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace earthsight

template <>
struct std::hash<earthsight::FilterId> {
    std::size_t operator()(const earthsight::FilterId& id) const noexcept {
        return std::hash<std::uint16_t>()(id.value);
    }
};

template <>
struct std::hash<earthsight::BackboneId> {
    std::size_t operator()(const earthsight::BackboneId& id) const noexcept {
        return std::hash<std::uint16_t>()(id.value);
    }
};
