#pragma once

// Logistic regression and linear SVM over sparse feature vectors, both
// with per-sample class weights and L2 regularization (lambda = 1/n).
// Logistic uses full-batch gradient descent with Armijo backtracking;
// the SVM uses full-batch subgradient descent and keeps the best
// iterate by loss.

#include <cmath>
#include <cstdint>
#include <vector>

#include "ctc/errors.hpp"
#include "ctc/vectorizer.hpp"

namespace ctc {

struct LinearModel {
    std::vector<float> w;
    float bias = 0.0f;

    double decision(const FeatureVector& v) const {
        double m = bias;
        for (std::size_t k = 0; k < v.nnz(); ++k)
            m += static_cast<double>(w[v.idx[k]]) * static_cast<double>(v.val[k]);
        return m;
    }
};

namespace detail {

inline double sigmoid(double m) {
    if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
    const double e = std::exp(m);
    return e / (1.0 + e);
}

// log(1 + exp(-|m|)) + pieces, stable for large |m|
inline double log_loss(double margin, int y) {
    const double ym = y ? margin : -margin;
    return ym >= 0 ? std::log1p(std::exp(-ym)) : -ym + std::log1p(std::exp(ym));
}

struct LinearData {
    const std::vector<const FeatureVector*>& X;
    const std::vector<int>& y;             // 0 = noncyber, 1 = cyber
    const std::vector<double>& c;          // per-sample weights
    double c_sum;
    double lambda;
};

inline double logistic_loss(const LinearData& d, const std::vector<double>& w, double bias) {
    double loss = 0.0;
    for (std::size_t i = 0; i < d.X.size(); ++i) {
        double m = bias;
        for (std::size_t k = 0; k < d.X[i]->nnz(); ++k)
            m += w[d.X[i]->idx[k]] * static_cast<double>(d.X[i]->val[k]);
        loss += d.c[i] * log_loss(m, d.y[i]);
    }
    loss /= d.c_sum;
    double reg = 0.0;
    for (double x : w) reg += x * x;
    return loss + 0.5 * d.lambda * reg;
}

}  // namespace detail

struct LogisticFit {
    LinearModel model;
    std::vector<double> loss_history;  // loss after each accepted step
    int iterations = 0;
};

inline LogisticFit train_logistic(const std::vector<const FeatureVector*>& X,
                                  const std::vector<int>& y, const std::vector<double>& c,
                                  std::size_t dim, int max_iters = 1000, double tol = 1e-6) {
    double c_sum = 0.0;
    for (double x : c) c_sum += x;
    detail::LinearData data{X, y, c, c_sum, 1.0 / static_cast<double>(X.size())};

    std::vector<double> w(dim, 0.0), gw(dim);
    double bias = 0.0;
    LogisticFit fit;
    double loss = detail::logistic_loss(data, w, bias);
    fit.loss_history.push_back(loss);

    for (int iter = 0; iter < max_iters; ++iter) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t i = 0; i < X.size(); ++i) {
            double m = bias;
            for (std::size_t k = 0; k < X[i]->nnz(); ++k)
                m += w[X[i]->idx[k]] * static_cast<double>(X[i]->val[k]);
            const double g = c[i] * (detail::sigmoid(m) - static_cast<double>(y[i])) / c_sum;
            for (std::size_t k = 0; k < X[i]->nnz(); ++k)
                gw[X[i]->idx[k]] += g * static_cast<double>(X[i]->val[k]);
            gb += g;
        }
        double g_norm_sq = gb * gb;
        for (std::size_t j = 0; j < dim; ++j) {
            gw[j] += data.lambda * w[j];
            g_norm_sq += gw[j] * gw[j];
        }

        // Armijo backtracking from the fixed base step.
        double eta = 0.5;
        std::vector<double> w_try(dim);
        double new_loss = loss;
        for (;;) {
            for (std::size_t j = 0; j < dim; ++j) w_try[j] = w[j] - eta * gw[j];
            const double b_try = bias - eta * gb;
            new_loss = detail::logistic_loss(data, w_try, b_try);
            if (new_loss <= loss - 1e-4 * eta * g_norm_sq) {
                w.swap(w_try);
                bias = b_try;
                break;
            }
            eta *= 0.5;
            if (eta < 1e-12) { new_loss = loss; break; }
        }
        fit.iterations = iter + 1;
        fit.loss_history.push_back(new_loss);
        const bool converged = std::abs(loss - new_loss) < tol;
        loss = new_loss;
        if (converged) break;
    }

    fit.model.w.assign(w.begin(), w.end());
    fit.model.bias = static_cast<float>(bias);
    return fit;
}

inline LinearModel train_linear_svm(const std::vector<const FeatureVector*>& X,
                                    const std::vector<int>& y, const std::vector<double>& c,
                                    std::size_t dim, int max_epochs = 1000, double eta0 = 1.0) {
    double c_sum = 0.0;
    for (double x : c) c_sum += x;
    const double lambda = 1.0 / static_cast<double>(X.size());

    std::vector<double> w(dim, 0.0), gw(dim), best_w(dim, 0.0);
    double bias = 0.0, best_bias = 0.0;
    double best_loss = std::numeric_limits<double>::infinity();

    for (int t = 0; t < max_epochs; ++t) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0, hinge_sum = 0.0;
        for (std::size_t i = 0; i < X.size(); ++i) {
            double m = bias;
            for (std::size_t k = 0; k < X[i]->nnz(); ++k)
                m += w[X[i]->idx[k]] * static_cast<double>(X[i]->val[k]);
            const double ysign = y[i] ? 1.0 : -1.0;
            const double margin = ysign * m;
            if (margin < 1.0) {
                hinge_sum += c[i] * (1.0 - margin);
                const double g = -c[i] * ysign / c_sum;
                for (std::size_t k = 0; k < X[i]->nnz(); ++k)
                    gw[X[i]->idx[k]] += g * static_cast<double>(X[i]->val[k]);
                gb += g;
            }
        }
        double reg = 0.0;
        for (double x : w) reg += x * x;
        const double loss = hinge_sum / c_sum + 0.5 * lambda * reg;
        if (loss < best_loss) {
            best_loss = loss;
            best_w = w;
            best_bias = bias;
        }

        const double eta = eta0 / std::sqrt(static_cast<double>(t + 1));
        for (std::size_t j = 0; j < dim; ++j) w[j] -= eta * (gw[j] + lambda * w[j]);
        bias -= eta * gb;
    }

    LinearModel model;
    model.w.assign(best_w.begin(), best_w.end());
    model.bias = static_cast<float>(best_bias);
    return model;
}

}  // namespace ctc
