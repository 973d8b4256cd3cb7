#include <doctest.h>

#include <sstream>

#include "seqcause/error.hpp"
#include "seqcause/event_io.hpp"
#include "seqcause/event_model.hpp"

using namespace seqcause;

namespace {

EventRecord row(std::string seq, std::string ts, std::string type) {
    return EventRecord{std::move(seq), std::move(ts), std::move(type), {}};
}

EventSequence seq_of(const std::vector<EventType>& types, std::vector<std::int64_t> times = {}) {
    EventSequence s{"s", {}};
    for (std::size_t i = 0; i < types.size(); ++i) {
        s.events.push_back(Event{types[i], times.empty() ? static_cast<std::int64_t>(i) : times[i], {}});
    }
    return s;
}

}  // namespace

TEST_CASE("parse_events sorts each sequence by timestamp") {
    std::vector<EventRecord> rows = {row("s1", "10", "a"), row("s1", "5", "b")};
    const auto ds = parse_events(rows);
    REQUIRE(ds.sequences.size() == 1);
    const auto& s = ds.sequences[0];
    CHECK(s.id == "s1");
    REQUIRE(s.events.size() == 2);
    CHECK(ds.catalog.label(s.events[0].type) == "b");
    CHECK(s.events[0].timestamp == 5);
    CHECK(ds.catalog.label(s.events[1].type) == "a");
    CHECK(s.events[1].timestamp == 10);
}

TEST_CASE("parse_events groups by sequence id and shares the catalog") {
    std::vector<EventRecord> rows = {row("s1", "5", "a"), row("s2", "5", "a")};
    const auto ds = parse_events(rows);
    CHECK(ds.sequences.size() == 2);
    CHECK(ds.catalog.labels() == std::vector<std::string>{"a"});
}

TEST_CASE("parse_events reports the bad row") {
    std::vector<EventRecord> rows = {row("s1", "x", "a")};
    try {
        parse_events(rows);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.row() == 1);
    }
    CHECK_THROWS_AS(parse_events(std::vector<EventRecord>{}), EmptyDatasetError);
}

TEST_CASE("parse_events keeps input order on equal timestamps") {
    std::vector<EventRecord> rows = {row("s", "7", "x"), row("s", "7", "y"), row("s", "3", "z")};
    const auto ds = parse_events(rows);
    const auto& ev = ds.sequences[0].events;
    CHECK(ds.catalog.label(ev[0].type) == "z");
    CHECK(ds.catalog.label(ev[1].type) == "x");
    CHECK(ds.catalog.label(ev[2].type) == "y");
}

TEST_CASE("parse_timestamp") {
    CHECK(parse_timestamp("1500") == 1500);
    CHECK(parse_timestamp("-20") == -20);
    CHECK(parse_timestamp("1970-01-01T00:00:01Z") == 1000);
    CHECK(parse_timestamp("2000-03-01T12:30:00.250Z") == 951913800250);
    CHECK_FALSE(parse_timestamp("2000-03-01T12:30:00+02:00"));
    CHECK_FALSE(parse_timestamp("yesterday"));
    CHECK_FALSE(parse_timestamp(""));
}

TEST_CASE("merge_consecutive") {
    CHECK(types_of(merge_consecutive(seq_of({0, 0, 1, 0})).events) == std::vector<EventType>{0, 1, 0});
    CHECK(types_of(merge_consecutive(seq_of({0, 1, 2})).events) == std::vector<EventType>{0, 1, 2});
    CHECK(types_of(merge_consecutive(seq_of({0, 0, 0})).events) == std::vector<EventType>{0});
    // The first event of a run survives.
    const auto merged = merge_consecutive(seq_of({3, 3}, {10, 20}));
    CHECK(merged.events.at(0).timestamp == 10);
}

TEST_CASE("filter_noise") {
    Dataset ds;
    ds.catalog = EventCatalog({"a", "b"});
    std::vector<EventType> types(10, 0);
    types.push_back(1);
    ds.sequences.push_back(seq_of(types));

    const auto filtered = filter_noise(ds, 2);
    CHECK(filtered.catalog.labels() == std::vector<std::string>{"a"});
    CHECK(filtered.event_count() == 10);

    CHECK(filter_noise(ds, 0) == ds);

    Dataset even;
    even.catalog = EventCatalog({"a", "b"});
    even.sequences.push_back(seq_of({0, 1, 0, 1, 0, 1}));
    const auto emptied = filter_noise(even, 4);
    CHECK(emptied.catalog.empty());
    CHECK(emptied.sequences.empty());
}

TEST_CASE("filter_noise re-indexes surviving types") {
    Dataset ds;
    ds.catalog = EventCatalog({"rare", "common"});
    ds.sequences.push_back(seq_of({1, 0, 1, 1}));
    const auto out = filter_noise(ds, 2);
    CHECK(out.catalog.labels() == std::vector<std::string>{"common"});
    CHECK(types_of(out.sequences[0].events) == std::vector<EventType>{0, 0, 0});
}

TEST_CASE("sessionize splits on gaps strictly above the interval") {
    const auto s1 = sessionize(seq_of({0, 0, 0}, {0, 5, 100}), 50);
    REQUIRE(s1.size() == 2);
    CHECK(s1[0].events.size() == 2);
    CHECK(s1[1].events.size() == 1);
    CHECK(s1[1].index == 1);
    CHECK(s1[1].parent_id == "s");

    CHECK(sessionize(seq_of({0}), 50).size() == 1);
    CHECK(sessionize(seq_of({0, 0, 0}, {0, 50, 100}), 50).size() == 1);
    CHECK_THROWS_AS(sessionize(seq_of({0}), 0), ConfigError);
}

TEST_CASE("derive_level_events") {
    const std::vector<double> thresholds = {75, 200};
    const std::vector<std::string> labels = {"clean", "haze", "heavy haze"};
    using Series = std::vector<std::pair<std::int64_t, double>>;

    EventCatalog cat;
    auto ev = derive_level_events(Series{{0, 50}, {1, 120}}, thresholds, labels, cat);
    REQUIRE(ev.size() == 1);
    CHECK(cat.label(ev[0].type) == "to haze");
    CHECK(ev[0].timestamp == 1);

    ev = derive_level_events(Series{{0, 120}, {1, 250}}, thresholds, labels, cat);
    REQUIRE(ev.size() == 1);
    CHECK(cat.label(ev[0].type) == "to heavy haze");

    CHECK(derive_level_events(Series{{0, 120}, {1, 50}}, thresholds, labels, cat).empty());
    // 75 itself is still the lowest band.
    CHECK(derive_level_events(Series{{0, 10}, {1, 75}}, thresholds, labels, cat).empty());
}

TEST_CASE("preprocess chains filter, merge and sessionize") {
    Dataset raw;
    raw.catalog = EventCatalog({"a", "b", "noise"});
    raw.sequences.push_back(seq_of({0, 0, 1, 2, 1, 0}, {0, 10, 20, 30, 1000, 1010}));
    raw.sequences.push_back(seq_of({0, 1, 0, 1}, {0, 10, 20, 30}));
    PreprocessConfig cfg;
    cfg.min_type_count = 2;
    cfg.session_interval_ms = 100;
    const auto ds = preprocess(raw, cfg);
    CHECK(ds.catalog.labels() == std::vector<std::string>{"a", "b"});
    REQUIRE(ds.sessions.size() == 3);
    CHECK(types_of(ds.sessions[0].events) == std::vector<EventType>{0, 1});
    // Dropping the noise event makes the two b's neighbours; they merge.
    CHECK(types_of(ds.sessions[1].events) == std::vector<EventType>{0});
    CHECK(ds.sessions[1].events[0].timestamp == 1010);
    CHECK(ds.provenance.config_hash == cfg.hash());
}

TEST_CASE("csv and jsonl readers") {
    std::istringstream csv("sequence_id,timestamp,event_type,attr.user\ns1,1,a,x\ns1,2,b,y\n");
    const auto rows = read_csv(csv);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].event_type == "b");
    CHECK(rows[0].attrs.at("user") == "x");

    std::istringstream bad("sequence_id,timestamp\ns1,1\n");
    CHECK_THROWS_AS(read_csv(bad), ParseError);

    std::istringstream jsonl(R"({"sequence_id":"s1","timestamp":"1970-01-01T00:00:00Z","event_type":"a"})"
                             "\n\n"
                             R"({"sequence_id":"s1","timestamp":5,"event_type":"b","attrs":{"k":"v"}})");
    const auto jrows = read_jsonl(jsonl);
    REQUIRE(jrows.size() == 2);
    CHECK(jrows[1].timestamp == "5");
    CHECK(jrows[1].attrs.at("k") == "v");

    CHECK(detect_format("  {\"a\":1}") == InputFormat::jsonl);
    CHECK(detect_format("sequence_id,timestamp,event_type") == InputFormat::csv);
}

TEST_CASE("dataset json round trip") {
    std::vector<EventRecord> rows = {row("s1", "1", "a"), row("s1", "2", "b"), row("s2", "3", "a")};
    rows[0].attrs["k"] = "v";
    auto ds = parse_events(rows);
    PreprocessConfig cfg;
    cfg.min_type_count = 1;
    cfg.session_interval_ms = 10;
    ds = preprocess(ds, cfg);
    CHECK(dataset_from_json(dataset_to_json(ds)) == ds);

    std::ostringstream out;
    write_csv(out, ds);
    std::istringstream in(out.str());
    const auto again = parse_events(read_csv(in));
    CHECK(again.sequences == ds.sequences);
}

TEST_CASE("fnv1a_hex") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}
