#include "seqcause/event_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "seqcause/error.hpp"

namespace seqcause {

namespace {

// RFC 4180 style: quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    if (quoted) {
        throw ParseError(row, "unterminated quoted field");
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string trim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.pop_back();
    }
    std::size_t start = 0;
    while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) {
        ++start;
    }
    return s.substr(start);
}

bool blank(const std::string& s) {
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            return false;
        }
    }
    return true;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

}  // namespace

std::vector<EventRecord> read_csv(std::istream& in) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!blank(line)) {
            header = split_csv_line(line, 0);
            break;
        }
    }
    if (header.empty()) {
        return {};
    }
    for (auto& h : header) {
        h = trim(h);
    }
    int seq_col = -1, ts_col = -1, type_col = -1;
    std::vector<std::pair<std::size_t, std::string>> attr_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "sequence_id") {
            seq_col = static_cast<int>(c);
        } else if (header[c] == "timestamp") {
            ts_col = static_cast<int>(c);
        } else if (header[c] == "event_type") {
            type_col = static_cast<int>(c);
        } else if (header[c].rfind("attr.", 0) == 0) {
            attr_cols.emplace_back(c, header[c].substr(5));
        } else {
            throw ParseError(0, "unexpected column '" + header[c] + "'");
        }
    }
    if (seq_col < 0 || ts_col < 0 || type_col < 0) {
        throw ParseError(0, "header must contain sequence_id, timestamp and event_type");
    }

    std::vector<EventRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (blank(line)) {
            continue;
        }
        ++row;
        auto fields = split_csv_line(line, row);
        if (fields.size() != header.size()) {
            throw ParseError(row, "expected " + std::to_string(header.size()) + " fields, got " +
                                      std::to_string(fields.size()));
        }
        EventRecord rec{trim(fields[seq_col]), trim(fields[ts_col]), trim(fields[type_col]), {}};
        for (const auto& [col, name] : attr_cols) {
            if (!fields[col].empty()) {
                rec.attrs.emplace(name, fields[col]);
            }
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<EventRecord> read_jsonl(std::istream& in) {
    std::vector<EventRecord> records;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (blank(line)) {
            continue;
        }
        ++row;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(row, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) {
            throw ParseError(row, "expected a JSON object");
        }
        auto text_field = [&](const char* key) -> std::string {
            auto it = obj.find(key);
            if (it == obj.end()) {
                throw ParseError(row, std::string("missing '") + key + "'");
            }
            if (it->is_string()) {
                return it->get<std::string>();
            }
            if (it->is_number_integer()) {
                return std::to_string(it->get<std::int64_t>());
            }
            throw ParseError(row, std::string("'") + key + "' must be a string or integer");
        };
        EventRecord rec{text_field("sequence_id"), text_field("timestamp"), text_field("event_type"), {}};
        if (auto it = obj.find("attrs"); it != obj.end()) {
            if (!it->is_object()) {
                throw ParseError(row, "'attrs' must be an object");
            }
            for (const auto& [k, v] : it->items()) {
                rec.attrs.emplace(k, v.is_string() ? v.get<std::string>() : v.dump());
            }
        }
        records.push_back(std::move(rec));
    }
    return records;
}

InputFormat detect_format(std::string_view bytes) {
    for (char c : bytes) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            return c == '{' ? InputFormat::jsonl : InputFormat::csv;
        }
    }
    return InputFormat::csv;
}

std::vector<EventRecord> read_records(std::string_view bytes, InputFormat format) {
    std::istringstream in{std::string(bytes)};
    return format == InputFormat::jsonl ? read_jsonl(in) : read_csv(in);
}

void write_csv(std::ostream& out, const Dataset& ds) {
    std::vector<std::string> attr_keys;
    for (const auto& seq : ds.sequences) {
        for (const auto& ev : seq.events) {
            for (const auto& [k, v] : ev.attrs) {
                if (std::find(attr_keys.begin(), attr_keys.end(), k) == attr_keys.end()) {
                    attr_keys.push_back(k);
                }
            }
        }
    }
    std::sort(attr_keys.begin(), attr_keys.end());
    out << "sequence_id,timestamp,event_type";
    for (const auto& k : attr_keys) {
        out << ",attr." << csv_escape(k);
    }
    out << '\n';
    for (const auto& seq : ds.sequences) {
        for (const auto& ev : seq.events) {
            out << csv_escape(seq.id) << ',' << ev.timestamp << ',' << csv_escape(ds.catalog.label(ev.type));
            for (const auto& k : attr_keys) {
                out << ',';
                if (auto it = ev.attrs.find(k); it != ev.attrs.end()) {
                    out << csv_escape(it->second);
                }
            }
            out << '\n';
        }
    }
}

nlohmann::json catalog_to_json(const EventCatalog& catalog) {
    auto types = nlohmann::json::array();
    for (EventType t = 0; t < catalog.size(); ++t) {
        types.push_back({{"label", catalog.label(t)}, {"color", catalog.color(t)}});
    }
    return types;
}

EventCatalog catalog_from_json(const nlohmann::json& j) {
    EventCatalog catalog;
    for (const auto& entry : j) {
        const auto label = entry.at("label").get<std::string>();
        if (catalog.find(label)) {
            throw CatalogError("duplicate event type '" + label + "'");
        }
        const auto t = catalog.intern(label);
        catalog.set_color(t, entry.value("color", static_cast<int>(t)));
    }
    return catalog;
}

namespace {

nlohmann::json events_to_json(const std::vector<Event>& events) {
    auto arr = nlohmann::json::array();
    for (const auto& ev : events) {
        nlohmann::json e = {{"type", ev.type}, {"timestamp", ev.timestamp}};
        if (!ev.attrs.empty()) {
            e["attrs"] = ev.attrs;
        }
        arr.push_back(std::move(e));
    }
    return arr;
}

std::vector<Event> events_from_json(const nlohmann::json& j, const EventCatalog& catalog) {
    std::vector<Event> events;
    for (const auto& e : j) {
        Event ev{e.at("type").get<EventType>(), e.at("timestamp").get<std::int64_t>(), {}};
        if (ev.type >= catalog.size()) {
            throw CatalogError("event type index " + std::to_string(ev.type) + " out of range");
        }
        if (auto it = e.find("attrs"); it != e.end()) {
            ev.attrs = it->get<std::map<std::string, std::string>>();
        }
        events.push_back(std::move(ev));
    }
    return events;
}

}  // namespace

nlohmann::json dataset_to_json(const Dataset& ds) {
    nlohmann::json j;
    j["catalog"] = catalog_to_json(ds.catalog);
    auto seqs = nlohmann::json::array();
    for (const auto& seq : ds.sequences) {
        seqs.push_back({{"id", seq.id}, {"events", events_to_json(seq.events)}});
    }
    j["sequences"] = std::move(seqs);
    auto sessions = nlohmann::json::array();
    for (const auto& s : ds.sessions) {
        sessions.push_back({{"parent_id", s.parent_id}, {"index", s.index}, {"events", events_to_json(s.events)}});
    }
    j["sessions"] = std::move(sessions);
    j["provenance"] = {{"source", ds.provenance.source}, {"config_hash", ds.provenance.config_hash}};
    return j;
}

Dataset dataset_from_json(const nlohmann::json& j) {
    Dataset ds;
    ds.catalog = catalog_from_json(j.at("catalog"));
    for (const auto& s : j.at("sequences")) {
        ds.sequences.push_back(EventSequence{s.at("id").get<std::string>(), events_from_json(s.at("events"), ds.catalog)});
    }
    if (auto it = j.find("sessions"); it != j.end()) {
        for (const auto& s : *it) {
            ds.sessions.push_back(Session{s.at("parent_id").get<std::string>(), s.at("index").get<std::size_t>(),
                                          events_from_json(s.at("events"), ds.catalog)});
        }
    }
    if (auto it = j.find("provenance"); it != j.end()) {
        ds.provenance.source = it->value("source", "");
        ds.provenance.config_hash = it->value("config_hash", "");
    }
    return ds;
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf.data(), 16);
}

}  // namespace seqcause
