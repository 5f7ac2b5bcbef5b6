#pragma once

// Deterministic TF-IDF over the fixed dictionary. The vectorizer is
// fitted to the word list itself (each word one document), which makes
// the smoothed IDF uniform and the transform corpus-independent. An
// alternative corpus-fitted IDF is available behind fit_to_corpus.

#include <cmath>
#include <cstdint>
#include <vector>

#include "ctc/errors.hpp"
#include "ctc/textprep.hpp"

namespace ctc {

/// Sparse non-negative vector; indices strictly increasing, stored
/// weights 32-bit. Nonempty vectors are L2-normalized.
struct FeatureVector {
    std::vector<std::uint32_t> idx;
    std::vector<float> val;
    std::size_t dim = 0;

    bool empty() const { return idx.empty(); }
    std::size_t nnz() const { return idx.size(); }
};

struct TfIdfModel {
    Dictionary dictionary;
    std::vector<float> idf;  // one weight per dictionary word, all > 0

    std::size_t dim() const { return idf.size(); }
};

/// Fits on the dictionary itself: n_docs = |dict| single-word documents,
/// df(w) = 1, so idf(w) = ln((1 + |dict|) / 2) + 1 for every word.
inline TfIdfModel fit_to_dictionary(const Dictionary& dict) {
    if (dict.size() == 0) throw DataError("cannot fit vectorizer to an empty dictionary");
    const double n = static_cast<double>(dict.size());
    const float idf = static_cast<float>(std::log((1.0 + n) / 2.0) + 1.0);
    return TfIdfModel{dict, std::vector<float>(dict.size(), idf)};
}

/// Corpus-fitted smoothed IDF: idf(w) = ln((1 + n_docs) / (1 + df(w))) + 1.
/// token_streams holds one tokenized document per entry.
inline TfIdfModel fit_to_corpus(const Dictionary& dict,
                                const std::vector<std::vector<std::uint32_t>>& token_streams) {
    if (dict.size() == 0) throw DataError("cannot fit vectorizer to an empty dictionary");
    std::vector<std::uint32_t> df(dict.size(), 0);
    std::vector<std::uint32_t> seen_at(dict.size(), UINT32_MAX);
    for (std::size_t d = 0; d < token_streams.size(); ++d) {
        for (std::uint32_t t : token_streams[d]) {
            if (seen_at[t] != d) {
                seen_at[t] = static_cast<std::uint32_t>(d);
                df[t]++;
            }
        }
    }
    const double n = static_cast<double>(token_streams.size());
    TfIdfModel model{dict, std::vector<float>(dict.size())};
    for (std::size_t w = 0; w < dict.size(); ++w)
        model.idf[w] = static_cast<float>(std::log((1.0 + n) / (1.0 + df[w])) + 1.0);
    return model;
}

/// Bag-of-words transform: weight(w) = count(w) * idf(w), L2-normalized.
/// Accumulation in 64-bit, stored weights rounded to 32-bit. An empty
/// token stream yields an empty vector.
inline FeatureVector transform(const TfIdfModel& model, const std::vector<std::uint32_t>& tokens) {
    FeatureVector v;
    v.dim = model.dim();
    if (tokens.empty()) return v;

    std::vector<std::uint32_t> sorted(tokens);
    std::sort(sorted.begin(), sorted.end());
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        const std::uint32_t w = sorted[i];
        if (w >= model.dim()) throw DataError("token index out of dictionary range");
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == w) ++j;
        const double weight = static_cast<double>(j - i) * static_cast<double>(model.idf[w]);
        v.idx.push_back(w);
        v.val.push_back(static_cast<float>(weight));
        norm_sq += weight * weight;
        i = j;
    }
    const double inv_norm = 1.0 / std::sqrt(norm_sq);
    for (float& x : v.val) x = static_cast<float>(static_cast<double>(x) * inv_norm);
    return v;
}

/// Clean + tokenize + transform in one step.
inline FeatureVector vectorize_text(const TfIdfModel& model, std::string_view raw) {
    return transform(model, tokenize(clean(raw), model.dictionary));
}

}  // namespace ctc
