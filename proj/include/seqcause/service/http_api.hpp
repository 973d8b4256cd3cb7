#pragma once

#include <memory>

#include "seqcause/service/job_runner.hpp"
#include "seqcause/service/store.hpp"

namespace httplib {
class Server;
}

namespace seqcause::service {

/// Registers every endpoint on `server`. Store and runner must outlive it.
void install_routes(httplib::Server& server, Store& store, JobRunner& runner);

/// A server with routes installed and a request pool of `threads`.
std::unique_ptr<httplib::Server> make_server(Store& store, JobRunner& runner, std::size_t threads = 32);

}  // namespace seqcause::service
