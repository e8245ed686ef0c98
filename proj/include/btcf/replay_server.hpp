#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "btcf/ingest.hpp"

namespace httplib {
class Server;
}

namespace btcf::ingest {

/// Serves recorded API payloads from a fixtures directory on the same paths
/// as the live APIs:
///
///   <dir>/bitstamp_ticker/*.json     GET /api/v2/ticker/btcusd/
///   <dir>/marketcap_snapshot/*.json  GET /v1/ticker/bitcoin/
///   <dir>/blockchain_quotes/*.json   GET /ticker
///   <dir>/tweets.csv                 GET /tweets
///
/// Payload files are served in name order, one per request, repeating the
/// last once exhausted. A fault can be requested per call with the query
/// parameter `fault` (malformed, http500, missing:<field>, non_numeric:<field>)
/// or scheduled for the n-th request to a path with schedule_fault().
class ReplayServer {
public:
    explicit ReplayServer(std::filesystem::path fixtures_dir);
    ~ReplayServer();

    ReplayServer(const ReplayServer&) = delete;
    ReplayServer& operator=(const ReplayServer&) = delete;

    /// Binds (port 0 picks a free port) and serves on a background thread.
    /// Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);

    /// Serves on the calling thread until stop() is called from elsewhere.
    void run(const std::string& host, int port);

    void stop();

    std::string base_url() const;

    /// The `request_number`-th (1-based) request to `path` gets `fault`.
    void schedule_fault(const std::string& path, std::size_t request_number, std::string fault);

    std::size_t request_count(const std::string& path) const;

private:
    void install_routes();

    std::filesystem::path dir_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::string host_;
    int port_ = 0;

    mutable std::mutex mutex_;
    std::map<std::string, std::vector<std::string>> payloads_;
    std::map<std::string, std::size_t> served_;
    std::map<std::string, std::map<std::size_t, std::string>> faults_;
    std::string tweets_;
};

/// Applies a fault name to a payload body. Returns the HTTP status to send.
int apply_fault(const std::string& fault, std::string& body);

}  // namespace btcf::ingest
