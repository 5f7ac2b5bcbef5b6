#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "ctc/textprep.hpp"
#include "helpers.hpp"

using ctc::clean;
using ctc::Dictionary;
using ctc::tokenize;

TEST_CASE("clean removes URLs and collapses whitespace") {
    CHECK(clean("Visit https://a.b/c now") == "Visit now");
    CHECK(clean("see http://x.y") == "see");
    CHECK(clean("go www.example.com today") == "go today");
}

TEST_CASE("clean removes tags") {
    CHECK(clean("x <code>y</code> z") == "x y z");
    CHECK(clean("a<br/>b") == "ab");
    CHECK(clean("open < close") == "open < close");  // unclosed bracket kept
}

TEST_CASE("clean strips non-ascii and trims") {
    CHECK(clean("caf\xc3\xa9 bar") == "caf bar");
    CHECK(clean("  padded\t\ttext \n") == "padded text");
    CHECK(clean("plain text") == "plain text");
    CHECK(clean("") == "");
}

TEST_CASE("clean is idempotent on random strings") {
    // Alphabet chosen to exercise URLs, tags, unicode and whitespace.
    const std::string alphabet = "ab <>/.:wht\tp\xc3\xa9\n";
    ctc::Rng rng(42);
    for (int trial = 0; trial < 500; ++trial) {
        std::string s;
        const std::size_t len = rng.below(60);
        for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
        const std::string once = clean(s);
        CHECK(clean(once) == once);
    }
}

TEST_CASE("clean handles tag-wrapped url remnants") {
    // The tag pass can splice a URL together; the repeated pass removes it.
    const std::string out = clean("<b>www.</b>x rest");
    CHECK(out == "rest");
    CHECK(clean(out) == out);
}

TEST_CASE("tokenize folds case and filters through the dictionary") {
    Dictionary d = Dictionary::from_words({"the", "server"});
    auto toks = tokenize("The server, the SERVER!", d);
    REQUIRE(toks == std::vector<std::uint32_t>{0, 1, 0, 1});

    CHECK(tokenize("xyzzy qwfp", d).empty());

    Dictionary alpha = Dictionary::from_words({"alpha"});
    CHECK(tokenize("alpha beta", alpha) == std::vector<std::uint32_t>{0});
}

TEST_CASE("tokenize splits on non-alphabetic characters") {
    Dictionary d = Dictionary::from_words({"multi", "layer"});
    CHECK(tokenize("multi-layer", d) == std::vector<std::uint32_t>{0, 1});
    CHECK(tokenize("multi9layer", d) == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("tokenize indices are always valid") {
    Dictionary d = Dictionary::from_words({"alpha", "beta", "gamma"});
    ctc::Rng rng(7);
    const std::string alphabet = "abet galph XYZ.,";
    for (int trial = 0; trial < 200; ++trial) {
        std::string s;
        for (std::size_t i = rng.below(40); i > 0; --i)
            s.push_back(alphabet[rng.below(alphabet.size())]);
        for (auto t : tokenize(clean(s), d)) CHECK(t < d.size());
    }
}

TEST_CASE("load_dictionary dedups and case-folds") {
    testutil::TempDir tmp;
    auto path = testutil::write_file(tmp.file("words.txt"), "Alpha\nbeta\nALPHA\n");
    Dictionary d = ctc::load_dictionary(path);
    REQUIRE(d.size() == 2);
    CHECK(d.word(0) == "alpha");
    CHECK(d.word(1) == "beta");
    CHECK(d.lookup("alpha") == 0);
    CHECK(d.lookup("missing") == -1);
}

TEST_CASE("load_dictionary rejects bad input") {
    testutil::TempDir tmp;
    auto bad = testutil::write_file(tmp.file("bad.txt"), "a1\n");
    CHECK_THROWS_WITH(ctc::load_dictionary(bad), Catch::Matchers::ContainsSubstring("line 1"));

    auto empty = testutil::write_file(tmp.file("empty.txt"), "");
    CHECK_THROWS_AS(ctc::load_dictionary(empty), ctc::DataError);

    auto blank = testutil::write_file(tmp.file("blank.txt"), "alpha\n\nbeta\n");
    CHECK_THROWS_WITH(ctc::load_dictionary(blank), Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("load_dictionary accepts the full-size word list") {
    // 24538 distinct words, the size of the production merged list.
    testutil::TempDir tmp;
    std::string content;
    for (std::size_t i = 0; i < 24538; ++i) {
        std::string w;
        std::size_t x = i;
        for (int p = 0; p < 4; ++p) {
            w.push_back(static_cast<char>('a' + x % 26));
            x /= 26;
        }
        content += w;
        content.push_back('\n');
    }
    auto path = testutil::write_file(tmp.file("full.txt"), content);
    CHECK(ctc::load_dictionary(path).size() == 24538);
}
