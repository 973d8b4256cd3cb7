#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "seqcause/event_model.hpp"

namespace seqcause {

enum class InputFormat { csv, jsonl };

/// Reads `sequence_id,timestamp,event_type[,attr.*]` rows. The header row is
/// required; extra columns must be prefixed with "attr.".
std::vector<EventRecord> read_csv(std::istream& in);

/// One JSON object per line with keys sequence_id, timestamp, event_type and
/// an optional "attrs" object. Blank lines are skipped.
std::vector<EventRecord> read_jsonl(std::istream& in);

/// Guesses the format from the first non-blank character.
InputFormat detect_format(std::string_view bytes);

std::vector<EventRecord> read_records(std::string_view bytes, InputFormat format);

/// Writes events in the standard CSV format (header included).
void write_csv(std::ostream& out, const Dataset& ds);

nlohmann::json catalog_to_json(const EventCatalog& catalog);
EventCatalog catalog_from_json(const nlohmann::json& j);

nlohmann::json dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace seqcause
