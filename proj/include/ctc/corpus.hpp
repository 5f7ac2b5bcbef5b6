#pragma once

// Document data model, JSONL ingestion, token-length filtering,
// deterministic stratified splits, and class weights.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ctc/errors.hpp"
#include "ctc/random.hpp"
#include "ctc/textprep.hpp"

namespace ctc {

enum class Label { noncyber = 0, cyber = 1 };

inline const char* to_string(Label l) { return l == Label::cyber ? "cyber" : "noncyber"; }

inline Label label_from_string(std::string_view s) {
    if (s == "cyber") return Label::cyber;
    if (s == "noncyber") return Label::noncyber;
    throw DataError("unknown label \"" + std::string(s) + "\" (expected cyber|noncyber)");
}

/// Known source names; anything else is a custom source and is carried
/// through verbatim.
namespace sources {
inline constexpr const char* reddit = "reddit";
inline constexpr const char* stackexchange = "stackexchange";
inline constexpr const char* arxiv = "arxiv";
}  // namespace sources

struct Document {
    std::string id;
    std::string source;
    std::optional<Label> label;  // absent only on classification input
    std::string title;
    std::string body;

    /// Title and body merged with ". " when the title is nonempty.
    std::string combined_text() const {
        return title.empty() ? body : title + ". " + body;
    }
};

/// Usable-token count; the one definition shared by the length filter,
/// the histogram, and the vectorizer path.
inline std::size_t usable_token_count(const Document& doc, const Dictionary& dict) {
    return tokenize(clean(doc.combined_text()), dict).size();
}

struct CorpusStats {
    std::size_t n_cyber = 0;
    std::size_t n_noncyber = 0;
    std::map<std::string, std::size_t> per_source;
    /// token_histogram[k] = number of documents with k usable tokens
    /// (bin width 1). Filled by token_length_histogram.
    std::vector<std::size_t> token_histogram;
};

struct ClassBalance {
    std::size_t n_cyber = 0;
    std::size_t n_noncyber = 0;
    double weight_noncyber = 1.0;
    double weight_cyber = 1.0;

    double weight_of(Label l) const {
        return l == Label::cyber ? weight_cyber : weight_noncyber;
    }
};

struct SplitSpec {
    std::uint64_t fraction_num = 1;  // train fraction as a rational in (0,1)
    std::uint64_t fraction_den = 2;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct FilterConfig {
    std::size_t min_tokens = 10;
};

// ---------------------------------------------------------------------------
// Ingestion

struct IngestResult {
    std::vector<Document> documents;
    CorpusStats stats;
};

/// Reads a JSONL corpus: one {"id","source","label"?,"title"?,"body"}
/// object per line, unknown keys ignored, blank lines skipped. Stats
/// cover labeled documents only.
inline IngestResult ingest(const std::string& path, bool require_labels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus file: " + path);

    IngestResult result;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ": line " + std::to_string(line_no);

        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw DataError(where + ": malformed JSON object");

        Document doc;
        try {
            doc.id = j.at("id").get<std::string>();
            doc.source = j.at("source").get<std::string>();
            doc.body = j.at("body").get<std::string>();
            if (j.contains("title") && !j["title"].is_null())
                doc.title = j["title"].get<std::string>();
            if (j.contains("label") && !j["label"].is_null())
                doc.label = label_from_string(j["label"].get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }

        if (doc.id.empty()) throw DataError(where + ": empty id");
        if (!seen_ids.insert(doc.id).second)
            throw DataError(where + ": duplicate id \"" + doc.id + "\"");
        if (require_labels && !doc.label)
            throw DataError(where + ": document \"" + doc.id + "\" has no label");

        result.stats.per_source[doc.source]++;
        if (doc.label) {
            if (*doc.label == Label::cyber)
                result.stats.n_cyber++;
            else
                result.stats.n_noncyber++;
        }
        result.documents.push_back(std::move(doc));
    }
    return result;
}

/// Usable-token histogram over all documents (bin width 1).
inline std::vector<std::size_t> token_length_histogram(const std::vector<Document>& docs,
                                                       const Dictionary& dict) {
    std::vector<std::size_t> hist;
    for (const Document& d : docs) {
        std::size_t n = usable_token_count(d, dict);
        if (n >= hist.size()) hist.resize(n + 1, 0);
        hist[n]++;
    }
    return hist;
}

// ---------------------------------------------------------------------------
// Filtering

/// Keeps documents with at least cfg.min_tokens usable tokens; preserves order.
inline std::vector<Document> filter_by_token_length(const std::vector<Document>& docs,
                                                    const Dictionary& dict,
                                                    const FilterConfig& cfg) {
    std::vector<Document> out;
    out.reserve(docs.size());
    for (const Document& d : docs)
        if (usable_token_count(d, dict) >= cfg.min_tokens) out.push_back(d);
    return out;
}

// ---------------------------------------------------------------------------
// Splitting

struct Split {
    std::vector<Document> train;
    std::vector<Document> validation;
};

namespace detail {

inline std::size_t rounded_train_size(std::size_t n, const SplitSpec& spec) {
    // round(n * num / den) in integer arithmetic
    return static_cast<std::size_t>((2 * spec.fraction_num * n + spec.fraction_den) /
                                    (2 * spec.fraction_den));
}

}  // namespace detail

/// Seeded-shuffle split. Stratified mode allocates per-class training
/// counts by largest remainder, so the train size equals
/// round(fraction * n) while each class stays within one document of the
/// exact fraction.
inline Split split(const std::vector<Document>& docs, const SplitSpec& spec) {
    if (spec.fraction_num == 0 || spec.fraction_num >= spec.fraction_den)
        throw DataError("train fraction must lie in (0,1)");
    for (const Document& d : docs)
        if (!d.label) throw DataError("split requires labeled documents (id \"" + d.id + "\")");

    Rng rng(spec.seed);
    Split out;
    const std::size_t total_train = detail::rounded_train_size(docs.size(), spec);

    if (!spec.stratified) {
        std::vector<std::size_t> order(docs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        for (std::size_t k = 0; k < order.size(); ++k)
            (k < total_train ? out.train : out.validation).push_back(docs[order[k]]);
        return out;
    }

    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < docs.size(); ++i)
        by_class[static_cast<int>(*docs[i].label)].push_back(i);
    for (int c = 0; c < 2; ++c)
        if (by_class[c].size() < 2)
            throw DataError(std::string("stratified split needs at least 2 documents of class ") +
                            to_string(static_cast<Label>(c)));

    // Largest-remainder apportionment of the training quota.
    std::size_t take[2];
    double rem[2];
    std::size_t base_sum = 0;
    for (int c = 0; c < 2; ++c) {
        const double exact = static_cast<double>(by_class[c].size()) *
                             static_cast<double>(spec.fraction_num) /
                             static_cast<double>(spec.fraction_den);
        take[c] = static_cast<std::size_t>(exact);
        rem[c] = exact - static_cast<double>(take[c]);
        base_sum += take[c];
    }
    for (std::size_t extra = total_train > base_sum ? total_train - base_sum : 0; extra > 0;
         --extra) {
        int pick = (rem[0] >= rem[1]) ? 0 : 1;
        if (take[pick] >= by_class[pick].size()) pick = 1 - pick;
        take[pick]++;
        rem[pick] = -1.0;
    }

    for (int c = 0; c < 2; ++c) {
        rng.shuffle(by_class[c]);
        for (std::size_t k = 0; k < by_class[c].size(); ++k)
            (k < take[c] ? out.train : out.validation).push_back(docs[by_class[c][k]]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Class weights

/// weight_noncyber is always 1; weight_cyber balances total class mass.
inline ClassBalance class_balance(const std::vector<Document>& docs) {
    ClassBalance b;
    b.n_cyber = b.n_noncyber = 0;
    for (const Document& d : docs) {
        if (!d.label) continue;
        (*d.label == Label::cyber ? b.n_cyber : b.n_noncyber)++;
    }
    if (b.n_cyber == 0 || b.n_noncyber == 0)
        throw DataError("class_balance requires documents of both classes");
    b.weight_noncyber = 1.0;
    b.weight_cyber = static_cast<double>(b.n_noncyber) / static_cast<double>(b.n_cyber);
    return b;
}

inline ClassBalance class_balance_from_counts(std::size_t n_cyber, std::size_t n_noncyber) {
    if (n_cyber == 0 || n_noncyber == 0)
        throw DataError("class_balance requires documents of both classes");
    ClassBalance b;
    b.n_cyber = n_cyber;
    b.n_noncyber = n_noncyber;
    b.weight_noncyber = 1.0;
    b.weight_cyber = static_cast<double>(n_noncyber) / static_cast<double>(n_cyber);
    return b;
}

}  // namespace ctc
