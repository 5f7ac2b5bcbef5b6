#pragma once

// The voting machine: an ordered collection of trained models sharing
// one vectorizer, deciding by strict majority. The canonical deployment
// holds 21 models (7 configurations x 3 training sources), an odd count
// that cannot tie; user-assembled even ensembles break ties noncyber.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctc/corpus.hpp"
#include "ctc/models.hpp"
#include "ctc/parallel.hpp"
#include "ctc/vectorizer.hpp"

namespace ctc {

/// max(v0, v1) - 0.5: 0 means a coin flip, 0.5 maximal certainty.
inline double confidence(const ScorePair& s) { return std::max(s.v0, s.v1) - 0.5; }

/// Confidence for models that emit continuous scores; none for the
/// hard-output linear SVM.
inline std::optional<double> model_confidence(const TrainedModel& m, const ScorePair& s) {
    if (!m.continuous_output()) return std::nullopt;
    return confidence(s);
}

struct PerModelVote {
    std::string model;
    Label label = Label::noncyber;
    std::optional<double> confidence;
};

struct Verdict {
    std::string id;
    Label label = Label::noncyber;
    std::size_t votes_cyber = 0;
    std::size_t votes_total = 0;
    std::vector<PerModelVote> per_model;
    std::size_t token_count = 0;
    bool untokenizable = false;

    /// Mean of the available per-model confidences, if any.
    std::optional<double> mean_confidence() const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const PerModelVote& v : per_model)
            if (v.confidence) {
                sum += *v.confidence;
                ++n;
            }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    }
};

struct Ensemble {
    TfIdfModel vectorizer;
    std::vector<TrainedModel> models;

    std::size_t dim() const { return vectorizer.dim(); }
};

namespace detail {

inline Verdict tally(const Ensemble& e, const std::string& doc_id,
                     const std::vector<ScorePair>& scores, std::size_t token_count) {
    Verdict v;
    v.id = doc_id;
    v.token_count = token_count;
    v.votes_total = e.models.size();
    for (std::size_t m = 0; m < e.models.size(); ++m) {
        PerModelVote pmv;
        pmv.model = e.models[m].id();
        pmv.label = predict(scores[m]);
        pmv.confidence = model_confidence(e.models[m], scores[m]);
        if (pmv.label == Label::cyber) ++v.votes_cyber;
        v.per_model.push_back(std::move(pmv));
    }
    v.label = 2 * v.votes_cyber > v.votes_total ? Label::cyber : Label::noncyber;
    return v;
}

inline Verdict untokenizable_verdict(const std::string& doc_id) {
    Verdict v;
    v.id = doc_id;
    v.label = Label::noncyber;  // the training corpus never contained empty documents
    v.untokenizable = true;
    return v;
}

}  // namespace detail

/// Classifies one batch: clean/tokenize/vectorize each document once,
/// score every model, tally strict-majority verdicts in input order.
/// Documents and network batches may be processed in parallel; results
/// are written by index and are identical to the serial path.
inline std::vector<Verdict> vote_batch(const Ensemble& e, const std::vector<Document>& docs) {
    if (e.models.empty()) throw DataError("ensemble has no models");

    std::vector<FeatureVector> vecs(docs.size());
    std::vector<std::size_t> token_counts(docs.size());
    parallel_for(docs.size(), [&](std::size_t i) {
        auto tokens = tokenize(clean(docs[i].combined_text()), e.vectorizer.dictionary);
        token_counts[i] = tokens.size();
        vecs[i] = transform(e.vectorizer, tokens);
    });

    // Scorable subset (nonempty vectors), scored per model.
    std::vector<std::size_t> scorable;
    std::vector<const FeatureVector*> ptrs;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!vecs[i].empty()) {
            scorable.push_back(i);
            ptrs.push_back(&vecs[i]);
        }
    }
    std::vector<std::vector<ScorePair>> by_model(e.models.size());
    parallel_for(e.models.size(),
                 [&](std::size_t m) { by_model[m] = score_batch(e.models[m], ptrs); });

    std::vector<Verdict> out(docs.size());
    std::vector<ScorePair> scores(e.models.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (vecs[i].empty()) {
            out[i] = detail::untokenizable_verdict(docs[i].id);
            continue;
        }
        for (std::size_t m = 0; m < e.models.size(); ++m) scores[m] = by_model[m][k];
        out[i] = detail::tally(e, docs[i].id, scores, token_counts[i]);
        ++k;
    }
    return out;
}

inline Verdict vote(const Ensemble& e, const Document& doc) {
    return vote_batch(e, {doc}).front();
}

// ---------------------------------------------------------------------------
// Verdict JSONL

inline nlohmann::json to_json(const Verdict& v) {
    nlohmann::json per_model = nlohmann::json::array();
    for (const PerModelVote& pmv : v.per_model) {
        nlohmann::json j{{"model", pmv.model}, {"label", to_string(pmv.label)}};
        if (pmv.confidence)
            j["confidence"] = *pmv.confidence;
        else
            j["confidence"] = nullptr;
        per_model.push_back(std::move(j));
    }
    nlohmann::json j{{"id", v.id},
                     {"label", to_string(v.label)},
                     {"votes_cyber", v.votes_cyber},
                     {"votes_total", v.votes_total},
                     {"per_model", std::move(per_model)},
                     {"token_count", v.token_count}};
    if (v.untokenizable) j["untokenizable"] = true;
    return j;
}

}  // namespace ctc
