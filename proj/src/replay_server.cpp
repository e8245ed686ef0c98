#include "btcf/replay_server.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "btcf/error.hpp"

namespace btcf::ingest {

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open fixture: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Field edits act on the object itself or, for array payloads, on its first
// element.
nlohmann::json* fault_target(nlohmann::json& j) {
    if (j.is_array() && !j.empty()) return &j.front();
    if (j.is_object() && j.contains("USD") && j["USD"].is_object()) return &j["USD"];
    return j.is_object() ? &j : nullptr;
}

}  // namespace

int apply_fault(const std::string& fault, std::string& body) {
    if (fault.empty()) return 200;
    if (fault == "malformed") {
        body = body.substr(0, body.size() / 2) + "<<garbled";
        return 200;
    }
    if (fault == "http500") {
        body = "internal error";
        return 500;
    }
    const auto colon = fault.find(':');
    if (colon != std::string::npos) {
        const std::string kind = fault.substr(0, colon);
        const std::string field = fault.substr(colon + 1);
        auto j = nlohmann::json::parse(body, nullptr, false);
        nlohmann::json* target = j.is_discarded() ? nullptr : fault_target(j);
        if (target && (kind == "missing" || kind == "non_numeric")) {
            if (kind == "missing") {
                target->erase(field);
            } else {
                (*target)[field] = "abc";
            }
            body = j.dump();
            return 200;
        }
    }
    body = "unknown fault: " + fault;
    return 400;
}

ReplayServer::ReplayServer(std::filesystem::path fixtures_dir) : dir_(std::move(fixtures_dir)) {
    if (!std::filesystem::is_directory(dir_)) {
        throw DataError("replay fixtures directory not found: " + dir_.string());
    }
    for (auto schema : {Schema::bitstamp_ticker, Schema::marketcap_snapshot, Schema::blockchain_quotes}) {
        const auto sub = dir_ / std::string(to_string(schema));
        if (!std::filesystem::is_directory(sub)) continue;
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(sub)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        auto& bodies = payloads_[std::string(endpoint_path(schema))];
        for (const auto& f : files) bodies.push_back(slurp(f));
    }
    if (std::filesystem::exists(dir_ / "tweets.csv")) tweets_ = slurp(dir_ / "tweets.csv");
    server_ = std::make_unique<httplib::Server>();
    install_routes();
}

ReplayServer::~ReplayServer() { stop(); }

void ReplayServer::install_routes() {
    for (const auto& [path, bodies] : payloads_) {
        const std::string route = path;
        server_->Get(route, [this, route](const httplib::Request& req, httplib::Response& res) {
            std::string body;
            std::string fault = req.get_param_value("fault");
            {
                std::lock_guard lock(mutex_);
                const auto& list = payloads_.at(route);
                const std::size_t n = ++served_[route];
                if (list.empty()) {
                    res.status = 404;
                    return;
                }
                body = list[std::min(n, list.size()) - 1];
                const auto scheduled = faults_.find(route);
                if (fault.empty() && scheduled != faults_.end()) {
                    const auto it = scheduled->second.find(n);
                    if (it != scheduled->second.end()) fault = it->second;
                }
            }
            res.status = apply_fault(fault, body);
            res.set_content(body, "application/json");
        });
    }
    server_->Get("/tweets", [this](const httplib::Request& req, httplib::Response& res) {
        std::string body = tweets_;
        {
            std::lock_guard lock(mutex_);
            ++served_["/tweets"];
        }
        const auto fault = req.get_param_value("fault");
        res.status = fault == "http500" ? 500 : 200;
        res.set_content(res.status == 200 ? body : "internal error", "text/csv");
    });
}

int ReplayServer::start(const std::string& host, int port) {
    if (thread_.joinable()) throw Error("replay server already running");
    host_ = host;
    port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (port_ <= 0) throw IoError("replay server cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void ReplayServer::run(const std::string& host, int port) {
    host_ = host;
    port_ = port;
    if (!server_->listen(host, port)) {
        throw IoError("replay server cannot listen on " + host + ":" + std::to_string(port));
    }
}

void ReplayServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string ReplayServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

void ReplayServer::schedule_fault(const std::string& path, std::size_t request_number, std::string fault) {
    std::lock_guard lock(mutex_);
    faults_[path][request_number] = std::move(fault);
}

std::size_t ReplayServer::request_count(const std::string& path) const {
    std::lock_guard lock(mutex_);
    const auto it = served_.find(path);
    return it == served_.end() ? 0 : it->second;
}

}  // namespace btcf::ingest
