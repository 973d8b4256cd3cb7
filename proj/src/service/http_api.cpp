#include "seqcause/service/http_api.hpp"

#include <charconv>
#include <optional>
#include <sstream>

#include <httplib.h>

#include "seqcause/event_io.hpp"

namespace seqcause::service {

namespace {

struct HttpError {
    int status;
    std::string message;
};

void send(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, nlohmann::json extra = {}) {
    nlohmann::json body = {{"error", message}};
    if (extra.is_object()) {
        body.update(extra);
    }
    send(res, status, body);
}

// Wraps a handler so that HttpError and library errors map to status codes.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const HttpError& e) {
            send_error(res, e.status, e.message);
        } catch (const ParseError& e) {
            send_error(res, 422, e.what(), {{"row", e.row()}});
        } catch (const NotFoundError& e) {
            send_error(res, 404, e.what());
        } catch (const Error& e) {
            send_error(res, 422, e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    };
}

std::size_t parse_index(const std::string& text, const char* what) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw HttpError{422, std::string(what) + " must be a non-negative integer"};
    }
    return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, sep)) {
        parts.push_back(part);
    }
    return parts;
}

// Accepts a catalog label or a numeric index.
EventType resolve_event(const EventCatalog& catalog, const std::string& token) {
    if (auto t = catalog.find(token)) {
        return *t;
    }
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec == std::errc{} && ptr == token.data() + token.size() && !token.empty() && v < catalog.size()) {
        return static_cast<EventType>(v);
    }
    throw HttpError{422, "unknown event '" + token + "'"};
}

nlohmann::json dataset_json(const DatasetEntry& entry) {
    const auto& ds = entry.data;
    auto sequences = nlohmann::json::array();
    for (const auto& seq : ds.sequences) {
        auto events = nlohmann::json::array();
        for (const auto& ev : seq.events) {
            nlohmann::json e = {{"type", ev.type}, {"label", ds.catalog.label(ev.type)}, {"timestamp", ev.timestamp}};
            if (!ev.attrs.empty()) {
                e["attrs"] = ev.attrs;
            }
            events.push_back(std::move(e));
        }
        sequences.push_back({{"id", seq.id}, {"events", std::move(events)}});
    }
    return {{"id", entry.id},
            {"source", entry.source},
            {"sequence_count", ds.sequences.size()},
            {"event_count", ds.event_count()},
            {"catalog", catalog_to_json(ds.catalog)},
            {"sequences", std::move(sequences)}};
}

std::shared_ptr<const AnalysisView> done_view(const Store& store, const std::string& id) {
    auto snap = store.analysis(id);
    if (!snap) {
        throw HttpError{404, "unknown analysis '" + id + "'"};
    }
    if (snap->status != Status::done) {
        throw HttpError{409, "analysis is " + to_string(snap->status)};
    }
    return snap->view;
}

std::size_t graph_index(const AnalysisView& view, const std::string& text) {
    const auto g = parse_index(text, "graph");
    if (g >= view.graphs.size()) {
        throw HttpError{404, "unknown graph " + text};
    }
    return g;
}

std::size_t pattern_index(const AnalysisView& view, std::size_t g, const std::string& text) {
    const auto p = parse_index(text, "pattern");
    if (p >= view.patterns[g].size()) {
        throw HttpError{404, "unknown pattern " + text};
    }
    return p;
}

}  // namespace

void install_routes(httplib::Server& server, Store& store, JobRunner& runner) {
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) { send(res, 200, {{"ok", true}}); });

    server.Post("/datasets", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        const auto records = read_records(req.body, detect_format(req.body));
        auto ds = parse_events(records);
        const auto id = store.add_dataset(std::move(ds), "upload");
        auto body = dataset_json(*store.dataset(id));
        body.erase("sequences");
        send(res, 201, body);
    }));

    server.Get(R"(/datasets/([^/]+))", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        auto entry = store.dataset(req.matches[1]);
        if (!entry) {
            throw HttpError{404, "unknown dataset '" + std::string(req.matches[1]) + "'"};
        }
        send(res, 200, dataset_json(*entry));
    }));

    server.Delete(R"(/datasets/([^/]+))", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        if (!store.remove_dataset(req.matches[1])) {
            throw HttpError{404, "unknown dataset '" + std::string(req.matches[1]) + "'"};
        }
        res.status = 204;
    }));

    server.Post("/analyses", guarded([&store, &runner](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::parse_error& e) {
            throw HttpError{400, std::string("malformed JSON: ") + e.what()};
        }
        if (!body.is_object() || !body.contains("dataset_id") || !body["dataset_id"].is_string()) {
            throw HttpError{422, "body must be an object with a string dataset_id"};
        }
        const auto dataset_id = body["dataset_id"].get<std::string>();
        if (!store.dataset(dataset_id)) {
            throw HttpError{404, "unknown dataset '" + dataset_id + "'"};
        }
        const auto cfg = AnalysisConfig::from_json(body.value("config", nlohmann::json::object()));
        const auto id = runner.submit(dataset_id, cfg);
        send(res, 202, {{"id", id}, {"status", "queued"}});
    }));

    server.Get(R"(/analyses/([^/]+))", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        auto snap = store.analysis(req.matches[1]);
        if (!snap) {
            throw HttpError{404, "unknown analysis '" + std::string(req.matches[1]) + "'"};
        }
        send(res, 200, snap->record_json());
    }));

    server.Get(R"(/analyses/([^/]+)/graphs)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        const auto view = done_view(store, req.matches[1]);
        if (req.has_param("edge")) {
            const auto parts = split(req.get_param_value("edge"), ',');
            if (parts.size() != 2) {
                throw HttpError{422, "edge must be src,dst"};
            }
            const auto src = resolve_event(view->catalog, parts[0]);
            const auto dst = resolve_event(view->catalog, parts[1]);
            send(res, 200, {{"edge", {src, dst}}, {"graphs", view->graphs_with_edge(src, dst)}});
            return;
        }
        bool by_count = false;
        if (req.has_param("sort")) {
            const auto sort = req.get_param_value("sort");
            if (sort != "count" && sort != "index") {
                throw HttpError{422, "sort must be count or index"};
            }
            by_count = sort == "count";
        }
        send(res, 200, {{"graphs", view->graph_list(by_count)}});
    }));

    server.Get(R"(/analyses/([^/]+)/graphs/([^/]+)/patterns)",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   const auto view = done_view(store, req.matches[1]);
                   const auto g = graph_index(*view, req.matches[2]);
                   std::optional<std::vector<EventType>> nodes;
                   std::optional<EventType> target;
                   if (req.has_param("subgraph")) {
                       nodes.emplace();
                       for (const auto& token : split(req.get_param_value("subgraph"), ',')) {
                           nodes->push_back(resolve_event(view->catalog, token));
                       }
                   }
                   if (req.has_param("target")) {
                       target = resolve_event(view->catalog, req.get_param_value("target"));
                   }
                   const auto& all = view->payload.at("graphs")[g].at("patterns");
                   auto patterns = nlohmann::json::array();
                   for (auto p : view->filter_patterns(g, nodes, target)) {
                       patterns.push_back(all[p]);
                   }
                   send(res, 200, {{"graph", g}, {"patterns", std::move(patterns)}});
               }));

    server.Get(R"(/analyses/([^/]+)/graphs/([^/]+)/patterns/([^/]+)/flow)",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   const auto view = done_view(store, req.matches[1]);
                   const auto g = graph_index(*view, req.matches[2]);
                   const auto p = pattern_index(*view, g, req.matches[3]);
                   auto body = flow_layout_to_json(view->flow(g, p), view->catalog);
                   body["graph"] = g;
                   body["pattern"] = p;
                   send(res, 200, body);
               }));

    server.Get(R"(/analyses/([^/]+)/sequences)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        const auto view = done_view(store, req.matches[1]);
        const auto g = graph_index(*view, req.has_param("graph") ? req.get_param_value("graph") : "0");
        if (!req.has_param("pattern")) {
            std::vector<std::string> ids;
            for (const auto& s : view->sessions[g]) {
                ids.push_back(s.id);
            }
            send(res, 200, {{"graph", g}, {"pattern", nullptr}, {"count", ids.size()}, {"sequences", ids}});
            return;
        }
        const auto p = pattern_index(*view, g, req.get_param_value("pattern"));
        const auto ids = view->matching_sessions(g, p);
        send(res, 200, {{"graph", g}, {"pattern", p}, {"count", ids.size()}, {"sequences", ids}});
    }));

    server.Get(R"(/analyses/([^/]+)/export)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        const auto view = done_view(store, req.matches[1]);
        send(res, 200, view->payload);
    }));
}

std::unique_ptr<httplib::Server> make_server(Store& store, JobRunner& runner, std::size_t threads) {
    auto server = std::make_unique<httplib::Server>();
    server->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    install_routes(*server, store, runner);
    return server;
}

}  // namespace seqcause::service
