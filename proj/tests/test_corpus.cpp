#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "ctc/corpus.hpp"
#include "helpers.hpp"

using namespace ctc;

namespace {

Document doc(const std::string& id, Label label, std::string body = "alpha beta gamma") {
    Document d;
    d.id = id;
    d.source = "reddit";
    d.label = label;
    d.body = std::move(body);
    return d;
}

std::vector<Document> labeled_docs(std::size_t n_cyber, std::size_t n_noncyber) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n_cyber; ++i) docs.push_back(doc("c" + std::to_string(i), Label::cyber));
    for (std::size_t i = 0; i < n_noncyber; ++i)
        docs.push_back(doc("n" + std::to_string(i), Label::noncyber));
    return docs;
}

}  // namespace

TEST_CASE("ingest counts classes and preserves order") {
    testutil::TempDir tmp;
    auto path = testutil::write_file(
        tmp.file("c.jsonl"),
        R"({"id":"1","source":"reddit","label":"cyber","body":"a"})" "\n"
        R"({"id":"2","source":"reddit","label":"cyber","body":"b"})" "\n"
        R"({"id":"3","source":"arxiv","label":"noncyber","body":"c"})" "\n"
        R"({"id":"4","source":"arxiv","label":"noncyber","body":"d"})" "\n"
        R"({"id":"5","source":"arxiv","label":"noncyber","body":"e","extra":42})" "\n");
    auto res = ingest(path, true);
    REQUIRE(res.documents.size() == 5);
    CHECK(res.stats.n_cyber == 2);
    CHECK(res.stats.n_noncyber == 3);
    CHECK(res.stats.per_source.at("reddit") == 2);
    CHECK(res.stats.per_source.at("arxiv") == 3);
    CHECK(res.documents[0].id == "1");
    CHECK(res.documents[4].body == "e");
}

TEST_CASE("title joins body with period and space") {
    Document d;
    d.title = "A";
    d.body = "B";
    CHECK(d.combined_text() == "A. B");
    d.title.clear();
    CHECK(d.combined_text() == "B");
}

TEST_CASE("ingest of an empty file yields empty corpus") {
    testutil::TempDir tmp;
    auto res = ingest(testutil::write_file(tmp.file("e.jsonl"), ""), true);
    CHECK(res.documents.empty());
    CHECK(res.stats.n_cyber == 0);
    CHECK(res.stats.n_noncyber == 0);
}

TEST_CASE("ingest reports malformed and invalid lines") {
    testutil::TempDir tmp;
    auto bad = testutil::write_file(tmp.file("bad.jsonl"),
                                    R"({"id":"1","source":"x","body":"a"})" "\n"
                                    "not json\n");
    CHECK_THROWS_WITH(ingest(bad, false), Catch::Matchers::ContainsSubstring("line 2"));

    auto dup = testutil::write_file(tmp.file("dup.jsonl"),
                                    R"({"id":"1","source":"x","body":"a"})" "\n"
                                    R"({"id":"1","source":"x","body":"b"})" "\n");
    CHECK_THROWS_WITH(ingest(dup, false), Catch::Matchers::ContainsSubstring("duplicate id"));

    auto unlabeled = testutil::write_file(tmp.file("u.jsonl"),
                                          R"({"id":"1","source":"x","body":"a"})" "\n");
    CHECK_THROWS_AS(ingest(unlabeled, true), DataError);
    CHECK_NOTHROW(ingest(unlabeled, false));

    auto badlabel = testutil::write_file(tmp.file("l.jsonl"),
                                         R"({"id":"1","source":"x","label":"spam","body":"a"})" "\n");
    CHECK_THROWS_AS(ingest(badlabel, false), DataError);
}

TEST_CASE("token length filter keeps documents at the threshold") {
    Dictionary dict = Dictionary::from_words({"w"});
    auto with_tokens = [&](std::size_t n) {
        std::string body;
        for (std::size_t i = 0; i < n; ++i) body += i ? " w" : "w";
        Document d = doc("d" + std::to_string(n), Label::cyber, body);
        return d;
    };
    std::vector<Document> docs{with_tokens(9), with_tokens(10), with_tokens(11)};
    auto kept = filter_by_token_length(docs, dict, FilterConfig{10});
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].id == "d10");
    CHECK(kept[1].id == "d11");

    // zero usable tokens is excluded even at N=1
    std::vector<Document> empties{doc("x", Label::cyber, "zz qq")};
    CHECK(filter_by_token_length(empties, dict, FilterConfig{1}).empty());
}

TEST_CASE("token length filter is idempotent and monotone") {
    Dictionary dict = Dictionary::from_words({"w"});
    std::vector<Document> docs;
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        std::string body;
        for (std::size_t k = rng.below(20); k > 0; --k) body += "w ";
        docs.push_back(doc("d" + std::to_string(i), Label::cyber, body));
    }
    auto once = filter_by_token_length(docs, dict, FilterConfig{5});
    auto twice = filter_by_token_length(once, dict, FilterConfig{5});
    CHECK(once.size() == twice.size());

    std::size_t prev = docs.size();
    for (std::size_t n = 1; n <= 20; ++n) {
        auto kept = filter_by_token_length(docs, dict, FilterConfig{n});
        CHECK(kept.size() <= prev);
        prev = kept.size();
    }
}

TEST_CASE("stratified split hits exact class counts on divisible corpora") {
    auto docs = labeled_docs(40, 60);
    SplitSpec spec;
    spec.seed = 9;
    auto s = split(docs, spec);
    CHECK(s.train.size() == 50);
    CHECK(s.validation.size() == 50);
    auto count_cyber = [](const std::vector<Document>& v) {
        return std::count_if(v.begin(), v.end(),
                             [](const Document& d) { return d.label == Label::cyber; });
    };
    CHECK(count_cyber(s.train) == 20);
    CHECK(count_cyber(s.validation) == 20);
}

TEST_CASE("split of 8 docs at 3/8 takes 3 for training") {
    auto docs = labeled_docs(4, 4);
    SplitSpec spec;
    spec.fraction_num = 3;
    spec.fraction_den = 8;
    spec.seed = 1;
    auto s = split(docs, spec);
    CHECK(s.train.size() == 3);
    CHECK(s.validation.size() == 5);
}

TEST_CASE("split is deterministic under the seed") {
    auto docs = labeled_docs(13, 29);
    SplitSpec spec;
    spec.seed = 1234;
    auto a = split(docs, spec);
    auto b = split(docs, spec);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].id == b.train[i].id);
    for (std::size_t i = 0; i < a.validation.size(); ++i)
        CHECK(a.validation[i].id == b.validation[i].id);

    SplitSpec other = spec;
    other.seed = 4321;
    auto c = split(docs, other);
    bool same = c.train.size() == a.train.size();
    if (same)
        for (std::size_t i = 0; i < a.train.size(); ++i) same &= c.train[i].id == a.train[i].id;
    CHECK_FALSE(same);
}

TEST_CASE("splits partition the corpus for many seeds and fractions") {
    auto docs = labeled_docs(17, 23);
    for (bool stratified : {true, false}) {
        for (std::uint64_t seed : {0ULL, 7ULL, 99ULL}) {
            for (auto [num, den] : std::vector<std::pair<std::uint64_t, std::uint64_t>>{
                     {1, 2}, {3, 8}, {2, 5}}) {
                SplitSpec spec{num, den, seed, stratified};
                auto s = split(docs, spec);
                CHECK(s.train.size() + s.validation.size() == docs.size());
                std::set<std::string> ids;
                for (const auto& d : s.train) ids.insert(d.id);
                for (const auto& d : s.validation) ids.insert(d.id);
                CHECK(ids.size() == docs.size());

                if (stratified) {
                    const double frac = double(num) / double(den);
                    auto n_cyber = std::count_if(
                        s.train.begin(), s.train.end(),
                        [](const Document& d) { return d.label == Label::cyber; });
                    CHECK(std::abs(double(n_cyber) - frac * 17.0) <= 1.0);
                    CHECK(std::abs(double(s.train.size() - n_cyber) - frac * 23.0) <= 1.0);
                }
            }
        }
    }
}

TEST_CASE("split rejects degenerate inputs") {
    auto one_class = labeled_docs(5, 1);
    SplitSpec spec;
    CHECK_THROWS_AS(split(one_class, spec), DataError);

    std::vector<Document> unlabeled{Document{"u", "reddit", std::nullopt, "", "x"}};
    CHECK_THROWS_AS(split(unlabeled, spec), DataError);

    SplitSpec bad;
    bad.fraction_num = 5;
    bad.fraction_den = 4;
    CHECK_THROWS_AS(split(labeled_docs(4, 4), bad), DataError);
}

TEST_CASE("class balance follows the corpus counts") {
    auto b = class_balance_from_counts(164750, 4184184);
    CHECK(b.weight_noncyber == 1.0);
    CHECK(b.weight_cyber == Catch::Approx(25.3972).epsilon(1e-4));
    // exact rational check: w * n_c == n_nc to 1 ulp
    CHECK(b.weight_cyber * 164750.0 == Catch::Approx(4184184.0).margin(1e-9 * 4184184.0));

    CHECK(class_balance_from_counts(50, 50).weight_cyber == 1.0);
    CHECK(class_balance_from_counts(1, 3).weight_cyber == 3.0);

    auto docs = labeled_docs(2, 6);
    CHECK(class_balance(docs).weight_cyber == 3.0);

    CHECK_THROWS_AS(class_balance(labeled_docs(3, 0)), DataError);
    CHECK_THROWS_AS(class_balance_from_counts(0, 5), DataError);
}

TEST_CASE("token histogram masses equal document count") {
    Dictionary dict = Dictionary::from_words({"w"});
    std::vector<Document> docs{doc("a", Label::cyber, "w w w"), doc("b", Label::noncyber, "w"),
                               doc("c", Label::noncyber, "qq")};
    auto hist = token_length_histogram(docs, dict);
    std::size_t mass = 0;
    for (auto h : hist) mass += h;
    CHECK(mass == docs.size());
    CHECK(hist[3] == 1);
    CHECK(hist[1] == 1);
    CHECK(hist[0] == 1);
}
