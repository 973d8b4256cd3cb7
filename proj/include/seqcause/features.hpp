#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "seqcause/event_model.hpp"

namespace seqcause {

/// Per-type occurrence counts (or 0/1 presence) of one prefix.
using FeatureVector = std::vector<std::int64_t>;

enum class FeatureMode { counts, binary };

struct RowOrigin {
    std::size_t session = 0;     // index into the sessions passed to build_table
    std::size_t prefix_len = 0;  // 1-based
};

/// Prefix-expanded bag-of-words table: one row per prefix of every session.
struct FeatureTable {
    std::size_t columns = 0;
    std::vector<FeatureVector> rows;
    std::vector<RowOrigin> row_origin;
    /// True for columns whose value never varies across the table.
    std::vector<bool> constant_columns;

    std::size_t row_count() const noexcept { return rows.size(); }
};

/// [e1..en] -> [[e1], [e1,e2], ..., [e1..en]].
std::vector<std::vector<EventType>> prefix_expand(const Session& session);

/// Throws CatalogError when the prefix names a type outside the catalog.
FeatureVector bag_of_words(std::span<const EventType> prefix, const EventCatalog& catalog,
                           FeatureMode mode = FeatureMode::counts);

FeatureTable build_table(std::span<const Session> sessions, const EventCatalog& catalog,
                         FeatureMode mode = FeatureMode::counts);

/// Debug export; the header row is the catalog labels plus origin columns.
void write_table_csv(std::ostream& out, const FeatureTable& table, const EventCatalog& catalog);

}  // namespace seqcause
