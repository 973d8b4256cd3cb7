#include "seqcause/event_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <unordered_map>

#include "seqcause/error.hpp"
#include "seqcause/event_io.hpp"

namespace seqcause {

EventCatalog::EventCatalog(std::vector<std::string> labels) {
    for (auto& label : labels) {
        if (index_.contains(label)) {
            throw CatalogError("duplicate event type '" + label + "'");
        }
        intern(label);
    }
}

EventType EventCatalog::intern(std::string_view label) {
    std::string key(label);
    if (auto it = index_.find(key); it != index_.end()) {
        return it->second;
    }
    const auto type = static_cast<EventType>(labels_.size());
    labels_.push_back(key);
    colors_.push_back(static_cast<int>(type));
    index_.emplace(std::move(key), type);
    return type;
}

std::optional<EventType> EventCatalog::find(std::string_view label) const {
    if (auto it = index_.find(std::string(label)); it != index_.end()) {
        return it->second;
    }
    return std::nullopt;
}

EventType EventCatalog::at(std::string_view label) const {
    if (auto found = find(label)) {
        return *found;
    }
    throw CatalogError("unknown event type '" + std::string(label) + "'");
}

const std::string& EventCatalog::label(EventType type) const {
    if (type >= labels_.size()) {
        throw CatalogError("event type index " + std::to_string(type) + " out of range");
    }
    return labels_[type];
}

int EventCatalog::color(EventType type) const {
    if (type >= colors_.size()) {
        throw CatalogError("event type index " + std::to_string(type) + " out of range");
    }
    return colors_[type];
}

void EventCatalog::set_color(EventType type, int color) {
    if (type >= colors_.size()) {
        throw CatalogError("event type index " + std::to_string(type) + " out of range");
    }
    colors_[type] = color;
}

std::size_t Dataset::event_count() const {
    std::size_t n = 0;
    for (const auto& seq : sequences) {
        n += seq.events.size();
    }
    return n;
}

namespace {

bool parse_int(std::string_view text, std::int64_t& out) {
    if (text.empty()) {
        return false;
    }
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (*begin == '+') {
        ++begin;
    }
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

bool parse_fixed(std::string_view text, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size()) {
        return false;
    }
    std::int64_t v = 0;
    if (!parse_int(text.substr(pos, len), v) || text[pos] == '+' || text[pos] == '-') {
        return false;
    }
    out = static_cast<int>(v);
    return true;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
        text.remove_prefix(1);
    }
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
        text.remove_suffix(1);
    }
    if (std::int64_t ms = 0; parse_int(text, ms)) {
        return ms;
    }

    // YYYY-MM-DD[THH:MM[:SS[.fff]]][Z]
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    if (text.size() < 10 || text[4] != '-' || text[7] != '-' || !parse_fixed(text, 0, 4, year) ||
        !parse_fixed(text, 5, 2, month) || !parse_fixed(text, 8, 2, day)) {
        return std::nullopt;
    }
    std::size_t pos = 10;
    std::int64_t millis = 0;
    if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
        if (!parse_fixed(text, pos + 1, 2, hour) || pos + 3 >= text.size() || text[pos + 3] != ':' ||
            !parse_fixed(text, pos + 4, 2, minute)) {
            return std::nullopt;
        }
        pos += 6;
        if (pos < text.size() && text[pos] == ':') {
            if (!parse_fixed(text, pos + 1, 2, second)) {
                return std::nullopt;
            }
            pos += 3;
            if (pos < text.size() && text[pos] == '.') {
                ++pos;
                std::size_t digits = 0;
                std::int64_t scale = 100;
                while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
                    if (digits < 3) {
                        millis += (text[pos] - '0') * scale;
                        scale /= 10;
                    }
                    ++digits;
                    ++pos;
                }
                if (digits == 0) {
                    return std::nullopt;
                }
            }
        }
    }
    if (pos < text.size() && text[pos] == 'Z') {
        ++pos;
    }
    if (pos != text.size()) {
        return std::nullopt;
    }
    if (month < 1 || month > 12 || hour > 23 || minute > 59 || second > 60) {
        return std::nullopt;
    }
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                             std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    const auto date_ms = duration_cast<milliseconds>(sys_days{ymd}.time_since_epoch()).count();
    return date_ms + ((hour * 60 + minute) * 60 + second) * std::int64_t{1000} + millis;
}

Dataset parse_events(std::span<const EventRecord> records) {
    if (records.empty()) {
        throw EmptyDatasetError();
    }
    Dataset ds;
    std::unordered_map<std::string, std::size_t> seq_index;
    for (std::size_t row = 0; row < records.size(); ++row) {
        const auto& rec = records[row];
        if (rec.sequence_id.empty()) {
            throw ParseError(row + 1, "empty sequence_id");
        }
        if (rec.event_type.empty()) {
            throw ParseError(row + 1, "empty event_type");
        }
        auto ts = parse_timestamp(rec.timestamp);
        if (!ts) {
            throw ParseError(row + 1, "malformed timestamp '" + rec.timestamp + "'");
        }
        auto [it, inserted] = seq_index.try_emplace(rec.sequence_id, ds.sequences.size());
        if (inserted) {
            ds.sequences.push_back(EventSequence{rec.sequence_id, {}});
        }
        ds.sequences[it->second].events.push_back(Event{ds.catalog.intern(rec.event_type), *ts, rec.attrs});
    }
    for (auto& seq : ds.sequences) {
        std::stable_sort(seq.events.begin(), seq.events.end(),
                         [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
    }
    ds.provenance.source = "records";
    return ds;
}

EventSequence merge_consecutive(const EventSequence& seq) {
    EventSequence out{seq.id, {}};
    out.events.reserve(seq.events.size());
    for (const auto& ev : seq.events) {
        if (out.events.empty() || out.events.back().type != ev.type) {
            out.events.push_back(ev);
        }
    }
    return out;
}

Dataset filter_noise(const Dataset& ds, std::size_t min_type_count) {
    if (min_type_count == 0) {
        return ds;
    }
    std::vector<std::size_t> counts(ds.catalog.size(), 0);
    for (const auto& seq : ds.sequences) {
        for (const auto& ev : seq.events) {
            ++counts[ev.type];
        }
    }
    Dataset out;
    out.provenance = ds.provenance;
    std::vector<std::optional<EventType>> remap(ds.catalog.size());
    for (EventType t = 0; t < ds.catalog.size(); ++t) {
        if (counts[t] >= min_type_count) {
            const EventType nt = out.catalog.intern(ds.catalog.label(t));
            out.catalog.set_color(nt, ds.catalog.color(t));
            remap[t] = nt;
        }
    }
    auto keep = [&](const std::vector<Event>& events) {
        std::vector<Event> kept;
        for (const auto& ev : events) {
            if (remap[ev.type]) {
                Event copy = ev;
                copy.type = *remap[ev.type];
                kept.push_back(std::move(copy));
            }
        }
        return kept;
    };
    for (const auto& seq : ds.sequences) {
        auto events = keep(seq.events);
        if (!events.empty()) {
            out.sequences.push_back(EventSequence{seq.id, std::move(events)});
        }
    }
    for (const auto& session : ds.sessions) {
        auto events = keep(session.events);
        if (!events.empty()) {
            out.sessions.push_back(Session{session.parent_id, session.index, std::move(events)});
        }
    }
    return out;
}

std::vector<Session> sessionize(const EventSequence& seq, std::int64_t interval_ms) {
    if (interval_ms <= 0) {
        throw ConfigError("session interval must be positive");
    }
    std::vector<Session> sessions;
    for (std::size_t i = 0; i < seq.events.size(); ++i) {
        if (i == 0 || seq.events[i].timestamp - seq.events[i - 1].timestamp > interval_ms) {
            sessions.push_back(Session{seq.id, sessions.size(), {}});
        }
        sessions.back().events.push_back(seq.events[i]);
    }
    return sessions;
}

std::vector<Event> derive_level_events(std::span<const std::pair<std::int64_t, double>> series,
                                       std::span<const double> thresholds,
                                       std::span<const std::string> labels,
                                       EventCatalog& catalog) {
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > thresholds[i - 1])) {
            throw ConfigError("level thresholds must be strictly ascending");
        }
    }
    if (labels.size() != thresholds.size() + 1) {
        throw ConfigError("need exactly one label per band (thresholds + 1)");
    }
    // Band k covers (thresholds[k-1], thresholds[k]]; the case-study bands are
    // "clean (0-75)" and "haze (75-200)".
    auto band = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(thresholds.begin(), thresholds.end(), v) -
                                        thresholds.begin());
    };
    std::vector<Event> events;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const auto prev = band(series[i - 1].second);
        const auto cur = band(series[i].second);
        if (cur > prev) {
            events.push_back(Event{catalog.intern("to " + labels[cur]), series[i].first, {}});
        }
    }
    return events;
}

std::string PreprocessConfig::hash() const {
    return fnv1a_hex("min_type_count=" + std::to_string(min_type_count) +
                     ";interval=" + std::to_string(session_interval_ms) +
                     ";merge=" + (merge_consecutive ? "1" : "0"));
}

Dataset preprocess(const Dataset& raw, const PreprocessConfig& cfg) {
    if (cfg.session_interval_ms <= 0) {
        throw ConfigError("session_interval_ms must be positive");
    }
    Dataset ds = filter_noise(raw, cfg.min_type_count);
    ds.sessions.clear();
    if (cfg.merge_consecutive) {
        for (auto& seq : ds.sequences) {
            seq = merge_consecutive(seq);
        }
    }
    for (const auto& seq : ds.sequences) {
        auto sessions = sessionize(seq, cfg.session_interval_ms);
        std::move(sessions.begin(), sessions.end(), std::back_inserter(ds.sessions));
    }
    ds.provenance.config_hash = cfg.hash();
    return ds;
}

std::vector<EventType> types_of(std::span<const Event> events) {
    std::vector<EventType> out;
    out.reserve(events.size());
    for (const auto& ev : events) {
        out.push_back(ev.type);
    }
    return out;
}

}  // namespace seqcause
