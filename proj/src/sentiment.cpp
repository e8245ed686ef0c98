#include "btcf/sentiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_set>

#include "btcf/csv.hpp"
#include "btcf/error.hpp"

namespace btcf::sentiment {

namespace {

// Standard English stopword list (the common NLTK set).
constexpr std::array<std::string_view, 179> kStopwords = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're",
    "you've", "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his",
    "himself", "she", "she's", "her", "hers", "herself", "it", "it's", "its", "itself",
    "they", "them", "their", "theirs", "themselves", "what", "which", "who", "whom", "this",
    "that", "that'll", "these", "those", "am", "is", "are", "was", "were", "be",
    "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing",
    "a", "an", "the", "and", "but", "if", "or", "because", "as", "until",
    "while", "of", "at", "by", "for", "with", "about", "against", "between", "into",
    "through", "during", "before", "after", "above", "below", "to", "from", "up", "down",
    "in", "out", "on", "off", "over", "under", "again", "further", "then", "once",
    "here", "there", "when", "where", "why", "how", "all", "any", "both", "each",
    "few", "more", "most", "other", "some", "such", "no", "nor", "not", "only",
    "own", "same", "so", "than", "too", "very", "s", "t", "can", "will",
    "just", "don", "don't", "should", "should've", "now", "d", "ll", "m", "o",
    "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't", "didn", "didn't",
    "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn", "isn't",
    "ma", "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't", "shouldn",
    "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn", "wouldn't",
};

const std::unordered_set<std::string_view>& stopword_set() {
    static const std::unordered_set<std::string_view> set(kStopwords.begin(), kStopwords.end());
    return set;
}

bool is_space(char ch) {
    return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
}

// Decodes one UTF-8 code point starting at `pos`; malformed bytes decode as
// themselves with length 1.
char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t& length) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    auto cont = [&](std::size_t k) -> int {
        if (pos + k >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[pos + k]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if (b0 < 0x80) {
        length = 1;
        return b0;
    }
    int need = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        need = 1;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        need = 2;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        need = 3;
        cp = b0 & 0x07;
    } else {
        length = 1;
        return b0;
    }
    for (int k = 1; k <= need; ++k) {
        const int c = cont(static_cast<std::size_t>(k));
        if (c < 0) {
            length = 1;
            return b0;
        }
        cp = (cp << 6) | static_cast<char32_t>(c);
    }
    length = static_cast<std::size_t>(need) + 1;
    return cp;
}

// Emoticon, pictograph, punctuation and other symbol code points.
bool is_symbol(char32_t cp) {
    if (cp < 0x80) {
        const bool alnum = (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
                           (cp >= 'A' && cp <= 'Z');
        return !alnum;
    }
    return (cp >= 0x80 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 ||
           (cp >= 0x2000 && cp <= 0x2BFF) ||   // punctuation, arrows, math, dingbats
           (cp >= 0x3000 && cp <= 0x303F) ||   // CJK punctuation
           (cp >= 0xFE00 && cp <= 0xFE0F) ||   // variation selectors
           (cp >= 0x1F000 && cp <= 0x1FAFF) || // emoji and pictographs
           (cp >= 0xE0000 && cp <= 0xE007F) || // tag characters
           cp == 0xFFFD;
}

struct CodePoint {
    std::size_t offset;
    std::size_t length;
    bool symbol;
};

std::vector<CodePoint> code_points(std::string_view s) {
    std::vector<CodePoint> out;
    for (std::size_t pos = 0; pos < s.size();) {
        std::size_t len = 1;
        const char32_t cp = decode_utf8(s, pos, len);
        out.push_back({pos, len, is_symbol(cp)});
        pos += len;
    }
    return out;
}

// Strips symbol code points from both ends; empty when nothing else remains.
std::string trim_symbols(std::string_view word) {
    const auto cps = code_points(word);
    auto first = std::find_if(cps.begin(), cps.end(), [](const CodePoint& c) { return !c.symbol; });
    if (first == cps.end()) return {};
    auto last = std::find_if(cps.rbegin(), cps.rend(), [](const CodePoint& c) { return !c.symbol; });
    const std::size_t begin = first->offset;
    const std::size_t end = last->offset + last->length;
    std::string out(word.substr(begin, end - begin));
    for (char& ch : out) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
    return out;
}

}  // namespace

std::string_view to_string(Source source) noexcept {
    return source == Source::reddit ? "reddit" : "twitter";
}

std::string_view to_string(Label label) noexcept {
    switch (label) {
        case Label::Positive: return "Positive";
        case Label::Negative: return "Negative";
        case Label::Neutral: break;
    }
    return "Neutral";
}

Source parse_source(std::string_view text) {
    if (text == "twitter") return Source::twitter;
    if (text == "reddit") return Source::reddit;
    throw DataError("unknown post source: " + std::string(text));
}

Label parse_label(std::string_view text) {
    if (text == "Positive") return Label::Positive;
    if (text == "Negative") return Label::Negative;
    if (text == "Neutral") return Label::Neutral;
    throw DataError("unknown sentiment label: " + std::string(text));
}

void Lexicon::add(std::string word, double weight) {
    if (!(weight >= -1.0 && weight <= 1.0)) {
        throw DomainError("lexicon weight outside [-1, 1] for '" + word + "'");
    }
    if (word.empty() || std::any_of(word.begin(), word.end(), is_space)) {
        throw DomainError("lexicon key must be a non-empty word: '" + word + "'");
    }
    if (std::any_of(word.begin(), word.end(), [](char c) { return c >= 'A' && c <= 'Z'; })) {
        throw DomainError("lexicon key must be lowercase: '" + word + "'");
    }
    if (entries_.empty()) {
        min_ = max_ = weight;
    } else {
        min_ = std::min(min_, weight);
        max_ = std::max(max_, weight);
    }
    entries_.insert_or_assign(std::move(word), weight);
}

const double* Lexicon::find(std::string_view word) const {
    const auto it = entries_.find(std::string(word));
    return it == entries_.end() ? nullptr : &it->second;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    Lexicon lexicon;
    const auto lines = csv::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.front() == '#') continue;
        const auto fields = csv::split_line(line);
        if (i == 0 && fields.size() == 2 && fields[0] == "word" && fields[1] == "weight") continue;
        if (fields.size() != 2) {
            throw DataError(path.string() + ":" + std::to_string(i + 1) + ": expected word,weight");
        }
        const auto weight = csv::parse_number(fields[1]);
        if (!weight) {
            throw DataError(path.string() + ":" + std::to_string(i + 1) + ": bad weight '" +
                            fields[1] + "'");
        }
        lexicon.add(fields[0], *weight);
    }
    return lexicon;
}

std::string normalize_text(std::string_view text) {
    // Any scheme (so elongated schemes such as "htttp://" still count) or a
    // bare www. host.
    static const std::regex url(R"(\b[A-Za-z][A-Za-z0-9+.\-]*://\S+|\bwww\.\S+)");
    static const std::regex hashtag(R"(#+(?=[@A-Za-z0-9_]))");
    static const std::regex mention(R"(@+[A-Za-z0-9_]+)");
    static const std::regex elongation(R"(([A-Za-z])\1{2,})");

    // Dropping '#' or '@' can splice a new URL or letter run together, so the
    // passes repeat until nothing changes. Each change removes an '@' or
    // shortens the text, which bounds the loop.
    std::string out(text);
    for (;;) {
        std::string next = std::regex_replace(out, url, "URL");
        next = std::regex_replace(next, hashtag, "");
        next = std::regex_replace(next, mention, "User");
        next = std::regex_replace(next, elongation, "$1$1");
        if (next == out) return out;
        out = std::move(next);
    }
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && is_space(text[pos])) ++pos;
        const std::size_t start = pos;
        while (pos < text.size() && !is_space(text[pos])) ++pos;
        if (pos > start) {
            auto token = trim_symbols(text.substr(start, pos - start));
            if (!token.empty()) tokens.push_back(std::move(token));
        }
    }
    return tokens;
}

bool is_stopword(std::string_view token) { return stopword_set().contains(token); }

std::vector<std::string> remove_stopwords(std::vector<std::string> tokens) {
    std::erase_if(tokens, [](const std::string& t) { return is_stopword(t); });
    return tokens;
}

double score_polarity(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
    double sum = 0.0;
    std::size_t matched = 0;
    for (const auto& token : tokens) {
        if (const double* weight = lexicon.find(token)) {
            sum += *weight;
            ++matched;
        }
    }
    if (matched == 0) return 0.0;
    return std::clamp(sum / static_cast<double>(matched), lexicon.min_weight(),
                      lexicon.max_weight());
}

Label classify(double polarity) {
    if (!(polarity >= -1.0 && polarity <= 1.0)) {
        throw DomainError("polarity outside [-1, 1]: " + csv::format_number(polarity));
    }
    if (polarity > 0.0) return Label::Positive;
    if (polarity < 0.0) return Label::Negative;
    return Label::Neutral;
}

SentimentRecord process_post(const RawPost& post, const Lexicon& lexicon) {
    SentimentRecord record;
    record.timestamp = post.timestamp;
    record.tokens = remove_stopwords(tokenize(normalize_text(post.text)));
    record.polarity = score_polarity(record.tokens, lexicon);
    record.label = classify(record.polarity);
    return record;
}

std::vector<RawPost> parse_posts(std::string_view content) {
    std::vector<RawPost> posts;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = csv::split_line(line);
        if (line_no == 1 && !fields.empty() && fields[0] == "timestamp") continue;
        if (fields.size() != 3) {
            throw DataError("posts line " + std::to_string(line_no) +
                            ": expected timestamp,source,text");
        }
        const auto ts = csv::parse_integer(fields[0]);
        if (!ts) throw DataError("posts line " + std::to_string(line_no) + ": bad timestamp");
        posts.push_back({*ts, fields[2], parse_source(fields[1])});
    }
    return posts;
}

std::vector<RawPost> read_posts(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_posts(buffer.str());
}

std::string format_posts(const std::vector<RawPost>& posts) {
    std::string out = "timestamp,source,text\n";
    for (const auto& post : posts) {
        std::string text = post.text;
        std::replace_if(text.begin(), text.end(), [](char c) { return c == '\n' || c == '\r'; }, ' ');
        // Text is always quoted so the column is unambiguous to other readers.
        std::string quoted = "\"";
        for (char ch : text) {
            if (ch == '"') quoted.push_back('"');
            quoted.push_back(ch);
        }
        quoted.push_back('"');
        out += std::to_string(post.timestamp) + "," + std::string(to_string(post.source)) + "," +
               quoted + "\n";
    }
    return out;
}

void write_sentiment_log(const std::filesystem::path& path,
                         const std::vector<SentimentRecord>& records) {
    csv::Table table;
    table.header = {"timestamp", "polarity", "label"};
    for (const auto& r : records) {
        table.rows.push_back({std::to_string(r.timestamp), csv::format_number(r.polarity),
                              std::string(to_string(r.label))});
    }
    csv::write_table(path, table);
}

std::vector<SentimentRecord> read_sentiment_log(const std::filesystem::path& path) {
    const auto table = csv::read_table(path);
    const auto ts = table.column("timestamp");
    const auto pol = table.column("polarity");
    const auto lab = table.column("label");
    if (!ts || !pol) throw DataError(path.string() + ": expected columns timestamp,polarity");
    std::vector<SentimentRecord> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        SentimentRecord r;
        const auto t = csv::parse_integer(row[*ts]);
        const auto p = csv::parse_number(row[*pol]);
        if (!t || !p) throw DataError(path.string() + ": malformed row");
        r.timestamp = *t;
        r.polarity = *p;
        r.label = lab ? parse_label(row[*lab]) : classify(r.polarity);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace btcf::sentiment
