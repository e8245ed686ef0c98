#include <gtest/gtest.h>

#include <random>

#include "btcf/error.hpp"
#include "btcf/sentiment.hpp"
#include "test_support.hpp"

using namespace btcf;
using namespace btcf::sentiment;
using Tokens = std::vector<std::string>;

namespace {

Lexicon example_lexicon() {
    Lexicon lex;
    lex.add("good", 0.7);
    lex.add("bad", -0.7);
    return lex;
}

}  // namespace

TEST(NormalizeText, Hashtag) { EXPECT_EQ(normalize_text("#Microsoft"), "Microsoft"); }

TEST(NormalizeText, Mention) { EXPECT_EQ(normalize_text("@Billgates"), "User"); }

TEST(NormalizeText, Elongation) {
    EXPECT_EQ(normalize_text("cooooool!"), "cool!");
    EXPECT_EQ(normalize_text("coool"), "cool");
    EXPECT_EQ(normalize_text("cool"), "cool");
    EXPECT_EQ(normalize_text("soooo goooood"), "soo good");
}

TEST(NormalizeText, Url) {
    EXPECT_EQ(normalize_text("see https://t.co/x now"), "see URL now");
    EXPECT_EQ(normalize_text("www.example.com/a?b=c"), "URL");
    EXPECT_EQ(normalize_text("http://a.b"), "URL");
}

TEST(NormalizeText, UrlBeforeHashtag) {
    // a fragment inside a URL is not a hashtag
    EXPECT_EQ(normalize_text("https://x.co/#frag #btc"), "URL btc");
}

TEST(NormalizeText, EmptyAndPlain) {
    EXPECT_EQ(normalize_text(""), "");
    EXPECT_EQ(normalize_text("Bitcoin is rising"), "Bitcoin is rising");
}

TEST(NormalizeText, IdempotentOnCorpus) {
    const std::vector<std::string> corpus = {
        "#Microsoft", "@Billgates", "cooooool!", "see https://t.co/x now", "##double", "#@x", "@@a",
        "aaa@bbb", "http://www.x.com", "www.aaaa.com", "#aaaa", "@UUUser", "https://x.co/#frag",
        "UURRRLLL", "###", "@", "#", "ftp://host/path", "hi😀😀😀 #go", "URLLL"};
    for (const auto& s : corpus) {
        const auto once = normalize_text(s);
        EXPECT_EQ(normalize_text(once), once) << s;
    }
}

TEST(NormalizeText, IdempotentFuzz) {
    const std::string alphabet = "aAlLoOuURsx#@:/.w _!1";
    std::mt19937 rng(42);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<int> len(0, 24);
    for (int trial = 0; trial < 20000; ++trial) {
        std::string s;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) s.push_back(alphabet[pick(rng)]);
        if (trial % 7 == 0) s = "http://" + s;
        const auto once = normalize_text(s);
        ASSERT_EQ(normalize_text(once), once) << "input: " << s;
    }
}

TEST(Tokenize, Examples) {
    EXPECT_EQ(tokenize("Bitcoin is rising"), (Tokens{"bitcoin", "is", "rising"}));
    EXPECT_EQ(tokenize(""), Tokens{});
    EXPECT_EQ(tokenize("btc 🚀 up"), (Tokens{"btc", "up"}));
}

TEST(Tokenize, WhitespaceOnly) {
    EXPECT_TRUE(tokenize("   \t \n ").empty());
}

TEST(Tokenize, TrimsEdgeSymbols) {
    EXPECT_EQ(tokenize("cool! (great) :-) ..."), (Tokens{"cool", "great"}));
    EXPECT_EQ(tokenize("don't"), (Tokens{"don't"}));
    EXPECT_EQ(tokenize("🚀moon🚀"), (Tokens{"moon"}));
}

TEST(Stopwords, Examples) {
    EXPECT_EQ(remove_stopwords({"a", "great", "coin"}), (Tokens{"great", "coin"}));
    EXPECT_EQ(remove_stopwords({}), Tokens{});
    EXPECT_EQ(remove_stopwords({"the", "is", "a", "with"}), Tokens{});
    for (auto w : {"a", "is", "the", "with"}) EXPECT_TRUE(is_stopword(w)) << w;
    EXPECT_FALSE(is_stopword("bitcoin"));
}

TEST(Stopwords, NeverGrowAndKeepOrder) {
    const Tokens in = {"btc", "is", "the", "best", "and", "eth", "a", "coin"};
    const auto out = remove_stopwords(in);
    EXPECT_LE(out.size(), in.size());
    EXPECT_EQ(out, (Tokens{"btc", "best", "eth", "coin"}));
}

TEST(ScorePolarity, Examples) {
    const auto lex = example_lexicon();
    EXPECT_DOUBLE_EQ(score_polarity({"good"}, lex), 0.7);
    EXPECT_EQ(score_polarity({}, lex), 0.0);
    EXPECT_EQ(score_polarity({"good", "bad"}, lex), 0.0);
    EXPECT_DOUBLE_EQ(score_polarity({"good", "coin", "good", "bad"}, lex), 0.7 / 3.0);
}

TEST(ScorePolarity, WithinLexiconRange) {
    const auto lex = Lexicon::load(test::fixture("lexicon.csv"));
    ASSERT_GT(lex.size(), 200u);
    std::vector<std::string> words = {"good", "bad", "moon", "crash", "scam", "great", "btc", "meh", "ok"};
    std::mt19937 rng(3);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    for (int trial = 0; trial < 500; ++trial) {
        Tokens t;
        for (int i = 0; i < trial % 9; ++i) t.push_back(words[pick(rng)]);
        const double p = score_polarity(t, lex);
        EXPECT_GE(p, std::min(0.0, lex.min_weight()));
        EXPECT_LE(p, std::max(0.0, lex.max_weight()));
        const auto label = classify(p);
        EXPECT_EQ(label == Label::Positive, p > 0);
        EXPECT_EQ(label == Label::Negative, p < 0);
        EXPECT_EQ(label == Label::Neutral, p == 0);
    }
}

TEST(Classify, Thresholds) {
    EXPECT_EQ(classify(0.5), Label::Positive);
    EXPECT_EQ(classify(-0.1), Label::Negative);
    EXPECT_EQ(classify(0.0), Label::Neutral);
    EXPECT_EQ(classify(-0.0), Label::Neutral);
    EXPECT_EQ(classify(1.0), Label::Positive);
    EXPECT_EQ(classify(-1.0), Label::Negative);
    EXPECT_EQ(classify(1e-300), Label::Positive);
}

TEST(Classify, OutOfRange) {
    EXPECT_THROW(classify(1.0000001), DomainError);
    EXPECT_THROW(classify(-2.0), DomainError);
    EXPECT_THROW(classify(std::nan("")), DomainError);
}

TEST(ProcessPost, Examples) {
    const auto lex = example_lexicon();
    auto r = process_post({100, "bitcoin is good", Source::twitter}, lex);
    EXPECT_EQ(r.timestamp, 100);
    EXPECT_DOUBLE_EQ(r.polarity, 0.7);
    EXPECT_EQ(r.label, Label::Positive);
    EXPECT_EQ(r.tokens, (Tokens{"bitcoin", "good"}));

    r = process_post({5, "", Source::reddit}, lex);
    EXPECT_EQ(r.timestamp, 5);
    EXPECT_EQ(r.polarity, 0.0);
    EXPECT_EQ(r.label, Label::Neutral);

    r = process_post({9, "#bitcoin @user https://x.co", Source::twitter}, lex);
    EXPECT_EQ(r.tokens, (Tokens{"bitcoin", "user", "url"}));
    EXPECT_EQ(r.polarity, 0.0);
    EXPECT_EQ(r.label, Label::Neutral);
}

TEST(Lexicon, RejectsBadEntries) {
    Lexicon lex;
    EXPECT_THROW(lex.add("good", 1.5), DomainError);
    EXPECT_THROW(lex.add("Good", 0.5), DomainError);
    EXPECT_THROW(lex.add("two words", 0.5), DomainError);
    EXPECT_THROW(lex.add("", 0.5), DomainError);
    EXPECT_NO_THROW(lex.add("fine", -1.0));
    ASSERT_NE(lex.find("fine"), nullptr);
    EXPECT_EQ(*lex.find("fine"), -1.0);
    EXPECT_EQ(lex.find("missing"), nullptr);
}

TEST(Lexicon, LoadFile) {
    test::TempDir dir;
    test::write_file(dir / "lex.csv", "word,weight\n# comment\ngood,0.7\nbad,-0.7\n");
    const auto lex = Lexicon::load(dir / "lex.csv");
    EXPECT_EQ(lex.size(), 2u);
    EXPECT_EQ(lex.min_weight(), -0.7);
    EXPECT_EQ(lex.max_weight(), 0.7);
    test::write_file(dir / "bad.csv", "good,2\n");
    EXPECT_THROW(Lexicon::load(dir / "bad.csv"), Error);
    EXPECT_THROW(Lexicon::load(dir / "nope.csv"), DataError);
}

TEST(Posts, RoundTrip) {
    const std::vector<RawPost> posts = {{1, "plain", Source::twitter},
                                        {2, "has, comma and \"quotes\"", Source::reddit},
                                        {3, "", Source::twitter},
                                        {4, "emoji 🚀 text", Source::reddit}};
    const auto parsed = parse_posts(format_posts(posts));
    ASSERT_EQ(parsed.size(), posts.size());
    for (std::size_t i = 0; i < posts.size(); ++i) {
        EXPECT_EQ(parsed[i].timestamp, posts[i].timestamp);
        EXPECT_EQ(parsed[i].text, posts[i].text);
        EXPECT_EQ(parsed[i].source, posts[i].source);
    }
}

TEST(Posts, BundledCorpus) {
    const auto posts = read_posts(test::fixture("posts.csv"));
    EXPECT_GE(posts.size(), 20u);
    const auto lex = Lexicon::load(test::fixture("lexicon.csv"));
    for (const auto& p : posts) {
        const auto r = process_post(p, lex);
        EXPECT_GE(r.polarity, -1.0);
        EXPECT_LE(r.polarity, 1.0);
        EXPECT_EQ(r.label, classify(r.polarity));
    }
}

TEST(SentimentLog, RoundTrip) {
    test::TempDir dir;
    std::vector<SentimentRecord> records = {{10, {}, 0.25, Label::Positive},
                                            {20, {}, -0.1, Label::Negative},
                                            {30, {}, 0.0, Label::Neutral}};
    write_sentiment_log(dir / "s.csv", records);
    EXPECT_EQ(test::slurp(dir / "s.csv").substr(0, 25), "timestamp,polarity,label\n");
    const auto back = read_sentiment_log(dir / "s.csv");
    ASSERT_EQ(back.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back[i].timestamp, records[i].timestamp);
        EXPECT_EQ(back[i].polarity, records[i].polarity);
        EXPECT_EQ(back[i].label, records[i].label);
    }
}
