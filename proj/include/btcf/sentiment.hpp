#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace btcf::sentiment {

enum class Source { twitter, reddit };

enum class Label { Negative, Neutral, Positive };

std::string_view to_string(Source source) noexcept;
std::string_view to_string(Label label) noexcept;
Source parse_source(std::string_view text);
Label parse_label(std::string_view text);

struct RawPost {
    std::int64_t timestamp = 0;
    std::string text;
    Source source = Source::twitter;
};

struct SentimentRecord {
    std::int64_t timestamp = 0;
    std::vector<std::string> tokens;
    double polarity = 0.0;
    Label label = Label::Neutral;
};

/// Word -> polarity weight in [-1, 1]. Keys are lowercase with no whitespace.
class Lexicon {
public:
    Lexicon() = default;

    /// Throws DomainError on a weight outside [-1, 1] or a malformed key.
    void add(std::string word, double weight);

    /// Pointer to the weight, or nullptr when the word is not in the lexicon.
    const double* find(std::string_view word) const;

    std::size_t size() const noexcept { return entries_.size(); }
    double min_weight() const noexcept { return min_; }
    double max_weight() const noexcept { return max_; }

    /// "word,weight" per line; a leading "word,weight" header and lines
    /// starting with '#' are skipped.
    static Lexicon load(const std::filesystem::path& path);

private:
    std::unordered_map<std::string, double> entries_;
    double min_ = 0.0;
    double max_ = 0.0;
};

/// URLs -> "URL", "#word" -> "word", "@handle" -> "User", then runs of three
/// or more identical letters collapse to two. Idempotent.
std::string normalize_text(std::string_view text);

/// Whitespace split, lowercase, edge punctuation trimmed; tokens made only of
/// emoticons or symbols are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Removes words found in the bundled English stopword list, preserving order.
std::vector<std::string> remove_stopwords(std::vector<std::string> tokens);

bool is_stopword(std::string_view token);

/// Mean lexicon weight over the tokens found in the lexicon; 0 if none match.
double score_polarity(const std::vector<std::string>& tokens, const Lexicon& lexicon);

/// Sign rule: > 0 Positive, < 0 Negative, == 0 Neutral. Throws DomainError
/// outside [-1, 1].
Label classify(double polarity);

SentimentRecord process_post(const RawPost& post, const Lexicon& lexicon);

// Posts file: header "timestamp,source,text", text quoted.
std::vector<RawPost> parse_posts(std::string_view content);
std::vector<RawPost> read_posts(const std::filesystem::path& path);
std::string format_posts(const std::vector<RawPost>& posts);

// Sentiment log: header "timestamp,polarity,label".
void write_sentiment_log(const std::filesystem::path& path,
                         const std::vector<SentimentRecord>& records);
std::vector<SentimentRecord> read_sentiment_log(const std::filesystem::path& path);

}  // namespace btcf::sentiment
