#pragma once

// The seven classifier configurations behind one train/score interface.
// All families consume sparse TF-IDF vectors and per-class weights and
// are deterministic under a fixed seed.

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ctc/corpus.hpp"
#include "ctc/errors.hpp"
#include "ctc/linear.hpp"
#include "ctc/nn.hpp"
#include "ctc/random.hpp"
#include "ctc/tree.hpp"
#include "ctc/vectorizer.hpp"

namespace ctc {

enum class Family { decision_tree, random_forest, logistic, linear_svm, mlp, dnn };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::decision_tree: return "decision_tree";
        case Family::random_forest: return "random_forest";
        case Family::logistic: return "logistic";
        case Family::linear_svm: return "linear_svm";
        case Family::mlp: return "mlp";
        case Family::dnn: return "dnn";
    }
    return "?";
}

struct Hyperparams {
    Family family = Family::logistic;

    // trees
    int max_depth = 100;      // decision_tree cap; forests grow unbounded
    std::size_t n_trees = 100;

    // linear models
    int max_iters = 1000;
    double tol = 1e-6;

    // networks
    std::vector<std::size_t> hidden;
    double learning_rate = 1e-3;
    std::size_t batch_size = 4000;
    int max_epochs = 500;
    double accuracy_threshold = 0.0;  // dnn stop rule; 0 disables
    double plateau_tol = 1e-4;        // mlp stop rule
    int patience = 10;

    static Hyperparams decision_tree() { return with(Family::decision_tree); }
    static Hyperparams random_forest() { return with(Family::random_forest); }
    static Hyperparams logistic() { return with(Family::logistic); }
    static Hyperparams linear_svm() { return with(Family::linear_svm); }

    static Hyperparams mlp() {
        Hyperparams hp = with(Family::mlp);
        hp.hidden = {100};
        hp.batch_size = 200;
        hp.max_epochs = 200;
        return hp;
    }

    static Hyperparams dnn(double threshold) {
        Hyperparams hp = with(Family::dnn);
        hp.hidden = {10000, 1000, 100};
        hp.batch_size = 4000;
        hp.max_epochs = 500;
        hp.accuracy_threshold = threshold;
        return hp;
    }

    /// Identifier used in reports and file names: the family name, with
    /// the accuracy threshold appended for DNNs ("dnn-0.95").
    std::string id() const {
        if (family != Family::dnn) return family_name(family);
        char buf[32];
        auto r = std::to_chars(buf, buf + sizeof buf, accuracy_threshold);
        return std::string("dnn-") + std::string(buf, r.ptr);
    }

    bool continuous_output() const { return family != Family::linear_svm; }

private:
    static Hyperparams with(Family f) {
        Hyperparams hp;
        hp.family = f;
        return hp;
    }
};

/// The canonical zoo: one configuration per classifier plus both DNN
/// accuracy thresholds.
inline std::vector<Hyperparams> canonical_families() {
    return {Hyperparams::decision_tree(), Hyperparams::random_forest(), Hyperparams::logistic(),
            Hyperparams::linear_svm(),    Hyperparams::mlp(),           Hyperparams::dnn(0.95),
            Hyperparams::dnn(0.99)};
}

/// Parses "decision_tree", "dnn-0.99", ... as produced by Hyperparams::id().
inline Hyperparams family_from_id(const std::string& id) {
    for (const Hyperparams& hp : canonical_families())
        if (hp.id() == id) return hp;
    if (id.starts_with("dnn-")) {
        double thr = 0.0;
        auto r = std::from_chars(id.data() + 4, id.data() + id.size(), thr);
        if (r.ec == std::errc() && r.ptr == id.data() + id.size() && thr > 0.0 && thr <= 1.0)
            return Hyperparams::dnn(thr);
    }
    if (id == "dnn") return Hyperparams::dnn(0.95);
    throw DataError("unknown model family \"" + id + "\"");
}

/// Two-class output; v0 = noncyber, v1 = cyber. Continuous families sum
/// to 1; the linear SVM emits exactly {0,1}.
struct ScorePair {
    double v0 = 0.0;
    double v1 = 0.0;
};

struct TrainedModel {
    Hyperparams hp;
    std::string source_tag = "other";
    std::size_t dim = 0;
    float training_accuracy = 0.0f;
    int epochs = 0;  // epochs (networks) or accepted iterations (logistic)
    std::variant<LinearModel, TreeModel, ForestModel, nn::Net<float>> params;

    std::string id() const { return source_tag + "-" + hp.id(); }
    bool continuous_output() const { return hp.continuous_output(); }
};

// ---------------------------------------------------------------------------
// Scoring

namespace detail {

inline ScorePair score_net_row(const float* p) {
    return {static_cast<double>(p[0]), static_cast<double>(p[1])};
}

}  // namespace detail

inline ScorePair score(const TrainedModel& m, const FeatureVector& v) {
    if (v.dim != m.dim)
        throw DataError("feature vector dimension " + std::to_string(v.dim) +
                        " does not match model dimension " + std::to_string(m.dim));
    switch (m.hp.family) {
        case Family::logistic: {
            const double p = detail::sigmoid(std::get<LinearModel>(m.params).decision(v));
            return {1.0 - p, p};
        }
        case Family::linear_svm: {
            const double d = std::get<LinearModel>(m.params).decision(v);
            return d > 0.0 ? ScorePair{0.0, 1.0} : ScorePair{1.0, 0.0};
        }
        case Family::decision_tree: {
            auto [p0, p1] = std::get<TreeModel>(m.params).leaf_prob(v);
            return {static_cast<double>(p0), static_cast<double>(p1)};
        }
        case Family::random_forest: {
            const double f = std::get<ForestModel>(m.params).cyber_vote_fraction(v);
            return {1.0 - f, f};
        }
        case Family::mlp:
        case Family::dnn: {
            const auto& net = std::get<nn::Net<float>>(m.params);
            std::vector<const FeatureVector*> one{&v};
            nn::Mat<float> X = nn::densify(one, 0, 1, m.dim);
            std::vector<nn::Mat<float>> acts;
            net.forward(X, acts);
            return detail::score_net_row(acts.back().row(0));
        }
    }
    throw DataError("unreachable family");
}

/// Batched scoring; identical results to calling score() per vector.
inline std::vector<ScorePair> score_batch(const TrainedModel& m,
                                          const std::vector<const FeatureVector*>& vs) {
    std::vector<ScorePair> out(vs.size());
    if (m.hp.family == Family::mlp || m.hp.family == Family::dnn) {
        const auto& net = std::get<nn::Net<float>>(m.params);
        constexpr std::size_t chunk = 512;
        std::vector<nn::Mat<float>> acts;
        for (std::size_t first = 0; first < vs.size(); first += chunk) {
            const std::size_t last = std::min(first + chunk, vs.size());
            for (std::size_t i = first; i < last; ++i)
                if (vs[i]->dim != m.dim) throw DataError("feature vector dimension mismatch");
            nn::Mat<float> X = nn::densify(vs, first, last, m.dim);
            net.forward(X, acts);
            for (std::size_t i = first; i < last; ++i)
                out[i] = detail::score_net_row(acts.back().row(i - first));
        }
        return out;
    }
    for (std::size_t i = 0; i < vs.size(); ++i) out[i] = score(m, *vs[i]);
    return out;
}

/// cyber iff v1 > v0; exact ties resolve to noncyber.
inline Label predict(const ScorePair& s) {
    return s.v1 > s.v0 ? Label::cyber : Label::noncyber;
}

inline Label predict(const TrainedModel& m, const FeatureVector& v) { return predict(score(m, v)); }

// ---------------------------------------------------------------------------
// Training

namespace detail {

struct NetFit {
    nn::Net<float> net;
    int epochs = 0;
    float accuracy = 0.0f;
};

struct NetEval {
    double accuracy = 0.0;
    double loss = 0.0;
};

inline NetEval evaluate_net(const nn::Net<float>& net, const std::vector<const FeatureVector*>& X,
                            const std::vector<int>& y, const std::vector<double>& cw,
                            std::size_t batch) {
    std::size_t correct = 0;
    double loss_sum = 0.0, w_sum = 0.0;
    std::vector<nn::Mat<float>> acts;
    for (std::size_t first = 0; first < X.size(); first += batch) {
        const std::size_t last = std::min(first + batch, X.size());
        nn::Mat<float> B = nn::densify(X, first, last, net.input_dim());
        net.forward(B, acts);
        const nn::Mat<float>& p = acts.back();
        for (std::size_t i = first; i < last; ++i) {
            const float* row = p.row(i - first);
            const int pred = row[1] > row[0] ? 1 : 0;
            if (pred == y[i]) ++correct;
            loss_sum += cw[i] * -std::log(std::max(static_cast<double>(row[y[i]]), 1e-30));
            w_sum += cw[i];
        }
    }
    return {static_cast<double>(correct) / static_cast<double>(X.size()), loss_sum / w_sum};
}

inline NetFit train_net(const std::vector<const FeatureVector*>& X, const std::vector<int>& y,
                        const std::vector<double>& cw, std::size_t dim, const Hyperparams& hp,
                        std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> widths;
    widths.push_back(dim);
    for (std::size_t h : hp.hidden) widths.push_back(h);
    widths.push_back(2);

    NetFit fit;
    fit.net = nn::Net<float>(widths, rng);
    nn::Adam<float> opt(fit.net, hp.learning_rate);

    std::vector<std::size_t> order(X.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_acc = 0.0;
    double best_loss = std::numeric_limits<double>::infinity();
    int plateau = 0;
    std::vector<const FeatureVector*> bX;
    std::vector<int> by;
    std::vector<float> bw;
    std::vector<nn::Mat<float>> acts;

    for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t first = 0; first < order.size(); first += hp.batch_size) {
            const std::size_t last = std::min(first + hp.batch_size, order.size());
            bX.clear(); by.clear(); bw.clear();
            for (std::size_t k = first; k < last; ++k) {
                bX.push_back(X[order[k]]);
                by.push_back(y[order[k]]);
                bw.push_back(static_cast<float>(cw[order[k]]));
            }
            nn::Mat<float> B = nn::densify(bX, 0, bX.size(), dim);
            fit.net.forward(B, acts);
            nn::Grads<float> g = fit.net.backward(acts, by, bw);
            opt.step(fit.net, g);
        }

        const NetEval ev = evaluate_net(fit.net, X, y, cw, hp.batch_size);
        fit.epochs = epoch;
        fit.accuracy = static_cast<float>(ev.accuracy);
        best_acc = std::max(best_acc, ev.accuracy);

        if (hp.accuracy_threshold > 0.0) {
            if (ev.accuracy >= hp.accuracy_threshold) return fit;
        } else {
            if (ev.loss > best_loss - hp.plateau_tol) {
                if (++plateau >= hp.patience) return fit;
            } else {
                plateau = 0;
            }
            best_loss = std::min(best_loss, ev.loss);
        }
    }

    if (hp.accuracy_threshold > 0.0)
        throw TrainError("accuracy threshold " + std::to_string(hp.accuracy_threshold) +
                             " not reached within " + std::to_string(hp.max_epochs) +
                             " epochs (best " + std::to_string(best_acc) + ")",
                         best_acc);
    return fit;
}

inline float training_accuracy_of(const TrainedModel& m,
                                  const std::vector<const FeatureVector*>& X,
                                  const std::vector<int>& y) {
    std::vector<ScorePair> scores = score_batch(m, X);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < X.size(); ++i)
        if ((predict(scores[i]) == Label::cyber ? 1 : 0) == y[i]) ++correct;
    return static_cast<float>(static_cast<double>(correct) / static_cast<double>(X.size()));
}

}  // namespace detail

struct TrainExample {
    const FeatureVector* x;
    Label label;
};

/// Trains one model. Deterministic under the seed; sample contributions
/// are weighted by the class balance throughout.
inline TrainedModel train(const Hyperparams& hp, const std::vector<TrainExample>& data,
                          const ClassBalance& balance, std::uint64_t seed) {
    if (data.empty()) throw TrainError("training data is empty");
    const std::size_t dim = data.front().x->dim;
    std::vector<const FeatureVector*> X;
    std::vector<int> y;
    std::vector<double> cw;
    std::size_t n_cyber = 0;
    for (const TrainExample& ex : data) {
        if (ex.x->dim != dim) throw DataError("inconsistent feature dimensions in training data");
        X.push_back(ex.x);
        y.push_back(ex.label == Label::cyber ? 1 : 0);
        cw.push_back(balance.weight_of(ex.label));
        if (ex.label == Label::cyber) ++n_cyber;
    }
    if (n_cyber == 0 || n_cyber == data.size())
        throw TrainError("training data contains a single class");

    TrainedModel m;
    m.hp = hp;
    m.dim = dim;

    switch (hp.family) {
        case Family::logistic: {
            LogisticFit fit = train_logistic(X, y, cw, dim, hp.max_iters, hp.tol);
            m.params = std::move(fit.model);
            m.epochs = fit.iterations;
            break;
        }
        case Family::linear_svm:
            m.params = train_linear_svm(X, y, cw, dim, hp.max_iters);
            break;
        case Family::decision_tree:
            m.params = train_decision_tree(X, y, cw, hp.max_depth);
            break;
        case Family::random_forest:
            m.params = train_random_forest(X, y, cw, hp.n_trees, seed);
            break;
        case Family::mlp:
        case Family::dnn: {
            detail::NetFit fit = detail::train_net(X, y, cw, dim, hp, seed);
            m.params = std::move(fit.net);
            m.epochs = fit.epochs;
            m.training_accuracy = fit.accuracy;
            break;
        }
    }

    if (hp.family == Family::dnn || hp.family == Family::mlp) return m;
    m.training_accuracy = detail::training_accuracy_of(m, X, y);
    return m;
}

/// Convenience overload building TrainExamples from parallel vectors.
inline TrainedModel train(const Hyperparams& hp, const std::vector<FeatureVector>& X,
                          const std::vector<Label>& y, const ClassBalance& balance,
                          std::uint64_t seed) {
    std::vector<TrainExample> data(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) data[i] = {&X[i], y[i]};
    return train(hp, data, balance, seed);
}

}  // namespace ctc
