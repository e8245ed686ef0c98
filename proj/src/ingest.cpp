#include "btcf/ingest.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <condition_variable>
#include <sstream>

#include "btcf/csv.hpp"
#include "btcf/error.hpp"
#include "btcf/timing.hpp"

namespace btcf::ingest {

using nlohmann::json;

namespace {

struct UrlParts {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix without trailing slash
};

UrlParts split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw DomainError("base_url is not absolute: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    UrlParts parts;
    parts.origin = url.substr(0, path_start);
    if (path_start != std::string::npos) parts.prefix = url.substr(path_start);
    while (!parts.prefix.empty() && parts.prefix.back() == '/') parts.prefix.pop_back();
    return parts;
}

std::string http_get(const std::string& base_url, std::string_view endpoint) {
    const auto parts = split_url(base_url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(std::chrono::seconds(5));
    client.set_read_timeout(std::chrono::seconds(10));
    const auto path = parts.prefix + std::string(endpoint);
    auto res = client.Get(path);
    if (!res) {
        throw RetryableError("GET " + parts.origin + path + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw RetryableError("GET " + parts.origin + path + " returned HTTP " + std::to_string(res->status));
    }
    return res->body;
}

// Reads a required number that may be encoded as a JSON number or a string.
double number_field(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) throw SchemaError(key);
    double value = 0.0;
    if (it->is_number()) {
        value = it->get<double>();
    } else if (it->is_string()) {
        const auto parsed = csv::parse_number(it->get_ref<const std::string&>());
        if (!parsed) throw SchemaError(key);
        value = *parsed;
    } else {
        throw SchemaError(key);
    }
    if (!std::isfinite(value)) throw SchemaError(key);
    return value;
}

double positive_field(const json& obj, const char* key) {
    const double v = number_field(obj, key);
    if (!(v > 0.0)) throw SchemaError(key);
    return v;
}

double non_negative_field(const json& obj, const char* key) {
    const double v = number_field(obj, key);
    if (v < 0.0) throw SchemaError(key);
    return v;
}

std::int64_t time_field(const json& obj, const char* key) {
    const double v = number_field(obj, key);
    if (v != std::floor(v) || std::abs(v) > 9.0e15) throw SchemaError(key);
    return static_cast<std::int64_t>(v);
}

std::string string_field(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) throw SchemaError(key);
    return it->get<std::string>();
}

PriceTick parse_ticker(const json& j) {
    if (!j.is_object()) throw DataError("ticker payload is not a JSON object");
    PriceTick t;
    t.high = positive_field(j, "high");
    t.last = positive_field(j, "last");
    t.timestamp = time_field(j, "timestamp");
    t.bid = positive_field(j, "bid");
    t.vwap = positive_field(j, "vwap");
    t.volume = non_negative_field(j, "volume");
    t.low = positive_field(j, "low");
    t.ask = positive_field(j, "ask");
    t.open = positive_field(j, "open");
    t.datetime = string_field(j, "datetime");
    return t;
}

MarketSnapshot parse_snapshot(const json& payload) {
    const json& j = payload.is_array() ? (payload.empty() ? json() : payload.front()) : payload;
    if (!j.is_object()) throw DataError("snapshot payload is not a JSON object");
    MarketSnapshot s;
    s.price_usd = positive_field(j, "price_usd");
    s.volume_24h_usd = non_negative_field(j, "24h_volume_usd");
    s.market_cap_usd = positive_field(j, "market_cap_usd");
    s.available_supply = non_negative_field(j, "available_supply");
    s.total_supply = non_negative_field(j, "total_supply");
    s.pct_change_1h = number_field(j, "percent_change_1h");
    s.pct_change_24h = number_field(j, "percent_change_24h");
    s.pct_change_7d = number_field(j, "percent_change_7d");
    s.created = time_field(j, "last_updated");
    if (s.available_supply > s.total_supply) throw SchemaError("available_supply");
    return s;
}

BlockchainQuote parse_quotes(const json& payload, std::int64_t now) {
    if (!payload.is_object()) throw DataError("quotes payload is not a JSON object");
    const auto usd = payload.find("USD");
    if (usd == payload.end() || !usd->is_object()) throw SchemaError("USD");
    BlockchainQuote q;
    q.usd_sell = positive_field(*usd, "sell");
    q.usd_buy = positive_field(*usd, "buy");
    q.usd_15m = positive_field(*usd, "15m");
    q.created = payload.contains("timestamp") ? time_field(payload, "timestamp") : now;
    return q;
}

std::vector<std::string> to_fields(const Record& record) {
    using csv::format_number;
    return std::visit(
        [](const auto& r) -> std::vector<std::string> {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, PriceTick>) {
                return {format_number(r.high), format_number(r.last), std::to_string(r.timestamp),
                        format_number(r.bid),  format_number(r.vwap), format_number(r.volume),
                        format_number(r.low),  format_number(r.ask),  format_number(r.open),
                        r.datetime};
            } else if constexpr (std::is_same_v<T, MarketSnapshot>) {
                return {format_number(r.price_usd),        format_number(r.volume_24h_usd),
                        format_number(r.market_cap_usd),   format_number(r.available_supply),
                        format_number(r.total_supply),     format_number(r.pct_change_1h),
                        format_number(r.pct_change_24h),   format_number(r.pct_change_7d),
                        std::to_string(r.created)};
            } else {
                return {format_number(r.usd_sell), format_number(r.usd_buy), format_number(r.usd_15m),
                        std::to_string(r.created)};
            }
        },
        record);
}

Record from_fields(Schema schema, const csv::Row& f) {
    auto num = [&](std::size_t i) {
        const auto v = csv::parse_number(f[i]);
        if (!v) throw DataError("record log: bad number '" + f[i] + "'");
        return *v;
    };
    auto integer = [&](std::size_t i) {
        const auto v = csv::parse_integer(f[i]);
        if (!v) throw DataError("record log: bad timestamp '" + f[i] + "'");
        return *v;
    };
    switch (schema) {
        case Schema::bitstamp_ticker:
            return PriceTick{num(0), num(1), integer(2), num(3), num(4),
                             num(5), num(6), num(7),     num(8), f[9]};
        case Schema::marketcap_snapshot:
            return MarketSnapshot{num(0), num(1), num(2), num(3), num(4),
                                  num(5), num(6), num(7), integer(8)};
        case Schema::blockchain_quotes: break;
    }
    return BlockchainQuote{num(0), num(1), num(2), integer(3)};
}

Schema schema_for_header(const csv::Row& header, const std::filesystem::path& path) {
    for (auto s : {Schema::bitstamp_ticker, Schema::marketcap_snapshot, Schema::blockchain_quotes}) {
        if (header == log_header(s)) return s;
    }
    throw DataError(path.string() + ": unrecognised record log header");
}

}  // namespace

std::string_view to_string(Schema schema) noexcept {
    switch (schema) {
        case Schema::bitstamp_ticker: return "bitstamp_ticker";
        case Schema::marketcap_snapshot: return "marketcap_snapshot";
        case Schema::blockchain_quotes: break;
    }
    return "blockchain_quotes";
}

Schema parse_schema(std::string_view text) {
    if (text == "bitstamp_ticker") return Schema::bitstamp_ticker;
    if (text == "marketcap_snapshot") return Schema::marketcap_snapshot;
    if (text == "blockchain_quotes") return Schema::blockchain_quotes;
    throw DomainError("unknown source schema: " + std::string(text));
}

std::string_view endpoint_path(Schema schema) noexcept {
    switch (schema) {
        case Schema::bitstamp_ticker: return "/api/v2/ticker/btcusd/";
        case Schema::marketcap_snapshot: return "/v1/ticker/bitcoin/";
        case Schema::blockchain_quotes: break;
    }
    return "/ticker";
}

void SourceConfig::validate() const {
    if (name.empty()) throw DomainError("source name must not be empty");
    if (poll_interval.count() <= 0) throw DomainError("poll_interval must be positive for " + name);
    const bool http = base_url.rfind("http://", 0) == 0;
    const bool https = base_url.rfind("https://", 0) == 0;
    const std::size_t host_at = http ? 7 : 8;
    if ((!http && !https) || base_url.size() <= host_at || base_url[host_at] == '/') {
        throw DomainError("base_url must be an absolute http(s) URL: '" + base_url + "'");
    }
}

std::vector<SourceConfig> load_source_configs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file: " + path.string());
    std::vector<SourceConfig> out;
    try {
        json j;
        in >> j;
        const json& list = j.is_array() ? j : j.at("sources");
        for (const auto& entry : list) {
            SourceConfig c;
            c.name = entry.at("name").get<std::string>();
            c.base_url = entry.at("base_url").get<std::string>();
            const double seconds = entry.value("poll_interval_s", 60.0);
            c.poll_interval = std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(seconds * 1000.0)));
            c.schema = parse_schema(entry.at("schema").get<std::string>());
            c.validate();
            out.push_back(std::move(c));
        }
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": malformed source config: " + e.what());
    }
    return out;
}

std::int64_t timestamp_of(const Record& record) noexcept {
    return std::visit(
        [](const auto& r) -> std::int64_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(r)>, PriceTick>) {
                return r.timestamp;
            } else {
                return r.created;
            }
        },
        record);
}

Schema schema_of(const Record& record) noexcept {
    switch (record.index()) {
        case 0: return Schema::bitstamp_ticker;
        case 1: return Schema::marketcap_snapshot;
        default: break;
    }
    return Schema::blockchain_quotes;
}

const std::vector<std::string>& log_header(Schema schema) {
    static const std::vector<std::string> ticker = {"high", "last", "timestamp", "bid", "vwap",
                                                    "volume", "low", "ask", "open", "datetime"};
    static const std::vector<std::string> snapshot = {
        "price_usd",           "24h_volume_usd",        "market_cap_usd",
        "available_supply",    "total_supply",          "percentage_change_1h",
        "percentage_change_24h", "percentage_change_7d", "created"};
    static const std::vector<std::string> quotes = {"usd_sell", "usd_buy", "usd_15m", "created"};
    switch (schema) {
        case Schema::bitstamp_ticker: return ticker;
        case Schema::marketcap_snapshot: return snapshot;
        case Schema::blockchain_quotes: break;
    }
    return quotes;
}

Record parse_payload(Schema schema, std::string_view body, std::int64_t now) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) throw DataError("payload is not valid JSON");
    switch (schema) {
        case Schema::bitstamp_ticker: return parse_ticker(j);
        case Schema::marketcap_snapshot: return parse_snapshot(j);
        case Schema::blockchain_quotes: break;
    }
    return parse_quotes(j, now);
}

Record fetch_once(const SourceConfig& config) {
    config.validate();
    const std::string body = http_get(config.base_url, endpoint_path(config.schema));
    const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    return parse_payload(config.schema, body, now);
}

std::vector<sentiment::RawPost> fetch_posts(const std::string& base_url) {
    return sentiment::parse_posts(http_get(base_url, "/tweets"));
}

RecordLog::RecordLog(std::filesystem::path path, Schema schema) : path_(std::move(path)), schema_(schema) {
    std::error_code ec;
    const bool exists = std::filesystem::is_regular_file(path_, ec) && std::filesystem::file_size(path_, ec) > 0 && !ec;
    if (exists) {
        const auto lines = csv::read_lines(path_);
        if (lines.empty() || csv::split_line(lines.front()) != log_header(schema_)) {
            throw DataError(path_.string() + ": existing log has a different header");
        }
        const auto records = read_log(path_);
        count_ = records.size();
        if (!records.empty()) last_ = timestamp_of(records.back());
    }
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open record log for append: " + path_.string());
    if (!exists) {
        out_ << csv::join_line(log_header(schema_)) << '\n';
        out_.flush();
        if (!out_) throw IoError("cannot write record log header: " + path_.string());
    }
}

void RecordLog::append(const Record& record) {
    std::lock_guard lock(mutex_);
    if (schema_of(record) != schema_) {
        throw DataError("record of schema " + std::string(to_string(schema_of(record))) +
                        " cannot go into a " + std::string(to_string(schema_)) + " log");
    }
    const auto ts = timestamp_of(record);
    if (last_ && ts <= *last_) {
        throw OrderError("timestamp " + std::to_string(ts) + " does not advance past " +
                         std::to_string(*last_) + " in " + path_.string());
    }
    const std::string line = csv::join_line(to_fields(record)) + '\n';
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_.string());
    last_ = ts;
    ++count_;
}

std::vector<Record> read_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string content = buffer.str();

    std::vector<Record> out;
    std::optional<Schema> schema;
    std::size_t start = 0;
    while (true) {
        const auto end = content.find('\n', start);
        if (end == std::string::npos) break;  // partial trailing line
        std::string line = content.substr(start, end - start);
        start = end + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = csv::split_line(line);
        if (!schema) {
            schema = schema_for_header(fields, path);
            continue;
        }
        if (fields.size() != log_header(*schema).size()) {
            throw DataError(path.string() + ": record with " + std::to_string(fields.size()) + " fields");
        }
        out.push_back(from_fields(*schema, fields));
    }
    return out;
}

std::size_t poll(const SourceConfig& config, RecordLog& sink, std::stop_token stop,
                 const PollOptions& options) {
    config.validate();
    auto report = [&](const std::string& message) {
        if (options.on_error) options.on_error(config.name + ": " + message);
    };
    std::mutex mutex;
    std::condition_variable_any wake;
    std::size_t written = 0;
    std::size_t attempts = 0;
    auto next = Clock::now();
    while (!stop.stop_requested()) {
        if (options.max_attempts != 0 && attempts >= options.max_attempts) break;
        ++attempts;
        try {
            sink.append(fetch_once(config));
            ++written;
        } catch (const IoError&) {
            throw;
        } catch (const Error& e) {
            report(e.what());
        } catch (const std::exception& e) {
            report(std::string("unexpected failure: ") + e.what());
        }
        if (options.max_attempts != 0 && attempts >= options.max_attempts) break;
        next += config.poll_interval;
        std::unique_lock lock(mutex);
        wake.wait_until(lock, stop, next, [] { return false; });
    }
    return written;
}

}  // namespace btcf::ingest
