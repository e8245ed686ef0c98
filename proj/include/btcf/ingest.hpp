#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "btcf/sentiment.hpp"

namespace btcf::ingest {

enum class Schema { bitstamp_ticker, marketcap_snapshot, blockchain_quotes };

std::string_view to_string(Schema schema) noexcept;
Schema parse_schema(std::string_view text);

/// HTTP path the schema's API serves its payload on.
std::string_view endpoint_path(Schema schema) noexcept;

struct SourceConfig {
    std::string name;
    /// Absolute http(s) URL; the schema's endpoint path is appended to it.
    std::string base_url;
    std::chrono::milliseconds poll_interval{std::chrono::seconds(60)};
    Schema schema = Schema::bitstamp_ticker;

    void validate() const;
};

/// Reads a JSON config: {"sources": [{name, base_url, poll_interval_s, schema}]}
/// (a bare array is accepted too).
std::vector<SourceConfig> load_source_configs(const std::filesystem::path& path);

/// Exchange ticker for one polling interval (Bitstamp field set).
struct PriceTick {
    double high = 0, last = 0;
    std::int64_t timestamp = 0;
    double bid = 0, vwap = 0, volume = 0, low = 0, ask = 0, open = 0;
    /// Verbatim from the payload.
    std::string datetime;

    friend bool operator==(const PriceTick&, const PriceTick&) = default;
};

/// Market-wide figures (Coinmarketcap field set).
struct MarketSnapshot {
    double price_usd = 0, volume_24h_usd = 0, market_cap_usd = 0;
    double available_supply = 0, total_supply = 0;
    double pct_change_1h = 0, pct_change_24h = 0, pct_change_7d = 0;
    std::int64_t created = 0;

    friend bool operator==(const MarketSnapshot&, const MarketSnapshot&) = default;
};

/// Exchange-rate quotes (Blockchain Info field set).
struct BlockchainQuote {
    double usd_sell = 0, usd_buy = 0, usd_15m = 0;
    std::int64_t created = 0;

    friend bool operator==(const BlockchainQuote&, const BlockchainQuote&) = default;
};

using Record = std::variant<PriceTick, MarketSnapshot, BlockchainQuote>;

std::int64_t timestamp_of(const Record& record) noexcept;
Schema schema_of(const Record& record) noexcept;

/// Log header for a schema, e.g. "high,last,timestamp,...".
const std::vector<std::string>& log_header(Schema schema);

/// Parses an API response body. Throws SchemaError naming the first missing,
/// non-numeric or out-of-range field, DataError when the body is not JSON.
/// `now` stamps payloads that carry no time of their own.
Record parse_payload(Schema schema, std::string_view body, std::int64_t now);

/// One HTTP GET of the source. Network failures and non-200 statuses raise
/// RetryableError; payload problems raise SchemaError/DataError.
Record fetch_once(const SourceConfig& config);

/// GETs the replay server's tweet endpoint and parses the posts.
std::vector<sentiment::RawPost> fetch_posts(const std::string& base_url);

/// Append-only CSV log of one schema's records, strictly ordered by time.
/// A single writer per log; each append is flushed as one complete line.
class RecordLog {
public:
    /// Opens (creating with a header if absent) the log at `path`.
    RecordLog(std::filesystem::path path, Schema schema);

    /// Throws OrderError when the timestamp does not advance, DataError on a
    /// record of the wrong schema, IoError when the write fails.
    void append(const Record& record);

    std::size_t size() const noexcept { return count_; }
    std::optional<std::int64_t> last_timestamp() const noexcept { return last_; }
    Schema schema() const noexcept { return schema_; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    Schema schema_;
    std::ofstream out_;
    std::size_t count_ = 0;
    std::optional<std::int64_t> last_;
    std::mutex mutex_;
};

/// Every complete record in a log; a trailing partial line is ignored.
std::vector<Record> read_log(const std::filesystem::path& path);

struct PollOptions {
    /// Stop after this many fetch attempts; 0 means until stopped.
    std::size_t max_attempts = 0;
    /// Receives one line per skipped attempt.
    std::function<void(std::string_view)> on_error;
};

/// Fetches once per poll interval until `stop` is requested, appending each
/// record. Fetch and ordering failures are reported and skipped; a sink
/// write failure (IoError) propagates. Returns the number of records written.
std::size_t poll(const SourceConfig& config, RecordLog& sink, std::stop_token stop,
                 const PollOptions& options = {});

}  // namespace btcf::ingest
