#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace seqcause {

/// Index of an event type inside an EventCatalog.
using EventType = std::uint32_t;

/// Ordered, duplicate-free list of event-type labels.
///
/// Feature columns are laid out in catalog order, so the order of a catalog
/// must never change once a dataset has been built on top of it.
class EventCatalog {
public:
    EventCatalog() = default;
    explicit EventCatalog(std::vector<std::string> labels);

    /// Returns the index of `label`, registering it at the end if unseen.
    EventType intern(std::string_view label);
    std::optional<EventType> find(std::string_view label) const;
    /// Throws CatalogError for unknown labels.
    EventType at(std::string_view label) const;

    const std::string& label(EventType type) const;
    std::size_t size() const noexcept { return labels_.size(); }
    bool empty() const noexcept { return labels_.empty(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    /// Display color index; defaults to the type index.
    int color(EventType type) const;
    void set_color(EventType type, int color);
    const std::vector<int>& colors() const noexcept { return colors_; }

    bool operator==(const EventCatalog& other) const {
        return labels_ == other.labels_ && colors_ == other.colors_;
    }

private:
    std::vector<std::string> labels_;
    std::vector<int> colors_;
    std::unordered_map<std::string, EventType> index_;
};

struct Event {
    EventType type = 0;
    std::int64_t timestamp = 0;  // milliseconds since epoch
    std::map<std::string, std::string> attrs;

    bool operator==(const Event&) const = default;
};

struct EventSequence {
    std::string id;
    std::vector<Event> events;  // ascending by timestamp, stable on ties

    bool operator==(const EventSequence&) const = default;
};

struct Session {
    std::string parent_id;
    std::size_t index = 0;  // ordinal within the parent sequence
    std::vector<Event> events;

    bool operator==(const Session&) const = default;
};

struct Provenance {
    std::string source;
    std::string config_hash;

    bool operator==(const Provenance&) const = default;
};

struct Dataset {
    EventCatalog catalog;
    std::vector<EventSequence> sequences;
    std::vector<Session> sessions;
    Provenance provenance;

    std::size_t event_count() const;
    bool operator==(const Dataset&) const = default;
};

/// One raw input row before grouping. Timestamps stay textual until parsed.
struct EventRecord {
    std::string sequence_id;
    std::string timestamp;
    std::string event_type;
    std::map<std::string, std::string> attrs;
};

/// Parses an epoch-millisecond integer or an ISO-8601 UTC date-time.
std::optional<std::int64_t> parse_timestamp(std::string_view text);

/// Groups records by sequence id (first-seen order) and sorts each sequence
/// by timestamp. The catalog is built from event types in first-seen order.
/// Throws EmptyDatasetError for no rows and ParseError for bad rows.
Dataset parse_events(std::span<const EventRecord> records);

/// Collapses maximal runs of the same event type to their first event.
EventSequence merge_consecutive(const EventSequence& seq);

/// Removes event types with fewer than `min_type_count` occurrences from the
/// catalog and every sequence/session. Emptied sequences are dropped.
Dataset filter_noise(const Dataset& ds, std::size_t min_type_count);

/// Splits a sequence wherever the gap between neighbours exceeds
/// `interval_ms` (strictly). Throws ConfigError if interval_ms <= 0.
std::vector<Session> sessionize(const EventSequence& seq, std::int64_t interval_ms);

/// Emits a "to <label>" event each time the band index strictly increases
/// between consecutive samples. Labels are registered in `catalog`.
std::vector<Event> derive_level_events(std::span<const std::pair<std::int64_t, double>> series,
                                       std::span<const double> thresholds,
                                       std::span<const std::string> labels,
                                       EventCatalog& catalog);

struct PreprocessConfig {
    std::size_t min_type_count = 5;
    std::int64_t session_interval_ms = 0;
    bool merge_consecutive = true;

    std::string hash() const;
};

/// filter_noise -> merge_consecutive -> sessionize, with provenance stamped.
Dataset preprocess(const Dataset& raw, const PreprocessConfig& cfg);

/// The event types of a list of events, in order.
std::vector<EventType> types_of(std::span<const Event> events);

}  // namespace seqcause
