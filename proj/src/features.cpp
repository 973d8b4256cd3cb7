#include "seqcause/features.hpp"

#include <ostream>

#include "seqcause/error.hpp"

namespace seqcause {

std::vector<std::vector<EventType>> prefix_expand(const Session& session) {
    std::vector<std::vector<EventType>> prefixes;
    prefixes.reserve(session.events.size());
    std::vector<EventType> current;
    for (const auto& ev : session.events) {
        current.push_back(ev.type);
        prefixes.push_back(current);
    }
    return prefixes;
}

FeatureVector bag_of_words(std::span<const EventType> prefix, const EventCatalog& catalog, FeatureMode mode) {
    FeatureVector counts(catalog.size(), 0);
    for (EventType t : prefix) {
        if (t >= catalog.size()) {
            throw CatalogError("event type index " + std::to_string(t) + " not in catalog");
        }
        if (mode == FeatureMode::binary) {
            counts[t] = 1;
        } else {
            ++counts[t];
        }
    }
    return counts;
}

FeatureTable build_table(std::span<const Session> sessions, const EventCatalog& catalog, FeatureMode mode) {
    FeatureTable table;
    table.columns = catalog.size();
    // Incremental form of bag_of_words(prefix_expand(s)[i]): each row adds
    // one event to the previous row of the same session.
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        FeatureVector row(catalog.size(), 0);
        std::size_t len = 0;
        for (const auto& ev : sessions[s].events) {
            if (ev.type >= catalog.size()) {
                throw CatalogError("event type index " + std::to_string(ev.type) + " not in catalog");
            }
            row[ev.type] = mode == FeatureMode::binary ? 1 : row[ev.type] + 1;
            table.rows.push_back(row);
            table.row_origin.push_back(RowOrigin{s, ++len});
        }
    }
    table.constant_columns.assign(table.columns, true);
    if (!table.rows.empty()) {
        for (std::size_t c = 0; c < table.columns; ++c) {
            const auto first = table.rows.front()[c];
            for (const auto& row : table.rows) {
                if (row[c] != first) {
                    table.constant_columns[c] = false;
                    break;
                }
            }
        }
    }
    return table;
}

void write_table_csv(std::ostream& out, const FeatureTable& table, const EventCatalog& catalog) {
    out << "session,prefix_len";
    for (const auto& label : catalog.labels()) {
        out << ',' << label;
    }
    out << '\n';
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out << table.row_origin[r].session << ',' << table.row_origin[r].prefix_len;
        for (auto v : table.rows[r]) {
            out << ',' << v;
        }
        out << '\n';
    }
}

}  // namespace seqcause
