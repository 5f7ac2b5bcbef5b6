#pragma once

// Dense feedforward network core shared by the MLP and DNN families:
// relu hidden layers, softmax output, class-weighted cross-entropy, and
// an Adam optimizer. Templated on the scalar type so tests can run the
// same code in 64-bit.
//
// The forward matmul accumulates over k in strictly ascending order for
// every output element, independent of how many rows are in the batch.
// A document therefore scores bit-identically whether it is classified
// alone or inside any batch.

#include <cmath>
#include <cstddef>
#include <vector>

#include "ctc/errors.hpp"
#include "ctc/random.hpp"
#include "ctc/vectorizer.hpp"

namespace ctc::nn {

template <typename T>
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, T(0)) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    T* row(std::size_t i) { return a_.data() + i * cols_; }
    const T* row(std::size_t i) const { return a_.data() + i * cols_; }
    T& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    T operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
    std::vector<T>& data() { return a_; }
    const std::vector<T>& data() const { return a_; }
    void zero() { std::fill(a_.begin(), a_.end(), T(0)); }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> a_;
};

// ---------------------------------------------------------------------------
// Kernels

/// C = A * B. Row i of C depends only on row i of A; the k loop runs in
/// ascending order per element, so results do not depend on batch size.
template <typename T>
void matmul(const Mat<T>& A, const Mat<T>& B, Mat<T>& C) {
    const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
    C = Mat<T>(n, m);
    constexpr std::size_t TILE = 8;
    for (std::size_t i0 = 0; i0 < n; i0 += TILE) {
        const std::size_t i1 = std::min(i0 + TILE, n);
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T* bk = B.row(kk);
            for (std::size_t i = i0; i < i1; ++i) {
                const T a = A(i, kk);
                if (a == T(0)) continue;
                T* ci = C.row(i);
                for (std::size_t j = 0; j < m; ++j) ci[j] += a * bk[j];
            }
        }
    }
}

/// C = A^T * B (contraction over rows). Used for weight gradients.
template <typename T>
void matmul_tn(const Mat<T>& A, const Mat<T>& B, Mat<T>& C) {
    const std::size_t n = A.rows(), d = A.cols(), m = B.cols();
    C = Mat<T>(d, m);
    constexpr std::size_t CHUNK = 64;
    for (std::size_t n0 = 0; n0 < n; n0 += CHUNK) {
        const std::size_t n1 = std::min(n0 + CHUNK, n);
        for (std::size_t i = 0; i < d; ++i) {
            T* ci = C.row(i);
            for (std::size_t nn = n0; nn < n1; ++nn) {
                const T a = A(nn, i);
                if (a == T(0)) continue;
                const T* bn = B.row(nn);
                for (std::size_t j = 0; j < m; ++j) ci[j] += a * bn[j];
            }
        }
    }
}

/// C = A * B^T. Used to push gradients through a layer.
template <typename T>
void matmul_nt(const Mat<T>& A, const Mat<T>& B, Mat<T>& C) {
    const std::size_t n = A.rows(), k = A.cols(), d = B.rows();
    C = Mat<T>(n, d);
    constexpr std::size_t TILE = 8;
    for (std::size_t i0 = 0; i0 < n; i0 += TILE) {
        const std::size_t i1 = std::min(i0 + TILE, n);
        for (std::size_t j = 0; j < d; ++j) {
            const T* bj = B.row(j);
            for (std::size_t i = i0; i < i1; ++i) {
                const T* ai = A.row(i);
                T acc(0);
                for (std::size_t kk = 0; kk < k; ++kk) acc += ai[kk] * bj[kk];
                C(i, j) = acc;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Network

template <typename T>
struct Grads {
    std::vector<Mat<T>> dW;
    std::vector<std::vector<T>> db;
};

template <typename T>
class Net {
public:
    Net() = default;

    /// widths = {input, hidden..., n_classes}; He-normal init for the
    /// relu stack, zero biases.
    Net(std::vector<std::size_t> widths, Rng& rng) : widths_(std::move(widths)) {
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            Mat<T> w(widths_[l], widths_[l + 1]);
            const double sd = std::sqrt(2.0 / static_cast<double>(widths_[l]));
            for (T& x : w.data()) x = static_cast<T>(rng.normal() * sd);
            W.push_back(std::move(w));
            b.emplace_back(widths_[l + 1], T(0));
        }
    }

    const std::vector<std::size_t>& widths() const { return widths_; }
    std::size_t input_dim() const { return widths_.front(); }
    std::size_t n_layers() const { return W.size(); }

    /// Forward pass. acts[0] = X, acts[l] = relu(Z_l) for hidden layers,
    /// acts.back() = softmax probabilities.
    void forward(const Mat<T>& X, std::vector<Mat<T>>& acts) const {
        acts.clear();
        acts.push_back(X);
        for (std::size_t l = 0; l < W.size(); ++l) {
            Mat<T> z;
            matmul(acts.back(), W[l], z);
            for (std::size_t i = 0; i < z.rows(); ++i) {
                T* zi = z.row(i);
                for (std::size_t j = 0; j < z.cols(); ++j) zi[j] += b[l][j];
            }
            if (l + 1 < W.size()) {
                for (T& x : z.data()) x = x > T(0) ? x : T(0);
            } else {
                softmax_rows(z);
            }
            acts.push_back(std::move(z));
        }
        for (T p : acts.back().data())
            if (!std::isfinite(static_cast<double>(p)))
                throw TrainError("non-finite network output (training divergence)");
    }

    /// Gradients of the weighted mean cross-entropy
    ///   L = sum_i c_i * (-ln p_{i,y_i}) / sum_i c_i
    /// with respect to every weight and bias.
    Grads<T> backward(const std::vector<Mat<T>>& acts, const std::vector<int>& labels,
                      const std::vector<T>& sample_weight) const {
        const std::size_t n = acts.front().rows();
        T wsum(0);
        for (T c : sample_weight) wsum += c;

        Mat<T> g = acts.back();  // softmax probs
        for (std::size_t i = 0; i < n; ++i) {
            T* gi = g.row(i);
            gi[labels[i]] -= T(1);
            const T scale = sample_weight[i] / wsum;
            for (std::size_t j = 0; j < g.cols(); ++j) gi[j] *= scale;
        }

        Grads<T> out;
        out.dW.resize(W.size());
        out.db.resize(W.size());
        for (std::size_t l = W.size(); l-- > 0;) {
            matmul_tn(acts[l], g, out.dW[l]);
            out.db[l].assign(W[l].cols(), T(0));
            for (std::size_t i = 0; i < n; ++i) {
                const T* gi = g.row(i);
                for (std::size_t j = 0; j < out.db[l].size(); ++j) out.db[l][j] += gi[j];
            }
            if (l > 0) {
                Mat<T> prev;
                matmul_nt(g, W[l], prev);
                for (std::size_t i = 0; i < n; ++i) {
                    const T* ai = acts[l].row(i);
                    T* pi = prev.row(i);
                    for (std::size_t j = 0; j < prev.cols(); ++j)
                        if (ai[j] <= T(0)) pi[j] = T(0);
                }
                g = std::move(prev);
            }
        }
        return out;
    }

    T weighted_cross_entropy(const Mat<T>& probs, const std::vector<int>& labels,
                             const std::vector<T>& sample_weight) const {
        T loss(0), wsum(0);
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            const T p = std::max(probs(i, labels[i]), T(1e-30));
            loss += sample_weight[i] * static_cast<T>(-std::log(static_cast<double>(p)));
            wsum += sample_weight[i];
        }
        return loss / wsum;
    }

    std::vector<Mat<T>> W;
    std::vector<std::vector<T>> b;

private:
    static void softmax_rows(Mat<T>& z) {
        for (std::size_t i = 0; i < z.rows(); ++i) {
            T* zi = z.row(i);
            T mx = zi[0];
            for (std::size_t j = 1; j < z.cols(); ++j) mx = std::max(mx, zi[j]);
            T sum(0);
            for (std::size_t j = 0; j < z.cols(); ++j) {
                zi[j] = static_cast<T>(std::exp(static_cast<double>(zi[j] - mx)));
                sum += zi[j];
            }
            for (std::size_t j = 0; j < z.cols(); ++j) zi[j] /= sum;
        }
    }

    std::vector<std::size_t> widths_;
};

// ---------------------------------------------------------------------------
// Optimizer

template <typename T>
class Adam {
public:
    explicit Adam(const Net<T>& net, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(static_cast<T>(lr)),
          b1_(static_cast<T>(beta1)),
          b2_(static_cast<T>(beta2)),
          eps_(static_cast<T>(eps)) {
        for (std::size_t l = 0; l < net.W.size(); ++l) {
            mW_.emplace_back(net.W[l].rows(), net.W[l].cols());
            vW_.emplace_back(net.W[l].rows(), net.W[l].cols());
            mb_.emplace_back(net.b[l].size(), T(0));
            vb_.emplace_back(net.b[l].size(), T(0));
        }
    }

    void step(Net<T>& net, const Grads<T>& g) {
        ++t_;
        const T c1 = T(1) / (T(1) - static_cast<T>(std::pow(static_cast<double>(b1_), t_)));
        const T c2 = T(1) / (T(1) - static_cast<T>(std::pow(static_cast<double>(b2_), t_)));
        for (std::size_t l = 0; l < net.W.size(); ++l) {
            update(net.W[l].data(), g.dW[l].data(), mW_[l].data(), vW_[l].data(), c1, c2);
            update(net.b[l], g.db[l], mb_[l], vb_[l], c1, c2);
        }
    }

private:
    void update(std::vector<T>& p, const std::vector<T>& g, std::vector<T>& m, std::vector<T>& v,
                T c1, T c2) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1_ * m[i] + (T(1) - b1_) * g[i];
            v[i] = b2_ * v[i] + (T(1) - b2_) * g[i] * g[i];
            p[i] -= lr_ * (m[i] * c1) /
                    (static_cast<T>(std::sqrt(static_cast<double>(v[i] * c2))) + eps_);
        }
    }

    T lr_, b1_, b2_, eps_;
    int t_ = 0;
    std::vector<Mat<T>> mW_, vW_;
    std::vector<std::vector<T>> mb_, vb_;
};

// ---------------------------------------------------------------------------
// Sparse-batch helpers

/// Densifies rows [first, last) of a sparse feature set into a batch.
inline Mat<float> densify(const std::vector<const FeatureVector*>& X, std::size_t first,
                          std::size_t last, std::size_t dim) {
    Mat<float> out(last - first, dim);
    for (std::size_t i = first; i < last; ++i) {
        float* row = out.row(i - first);
        const FeatureVector& v = *X[i];
        for (std::size_t k = 0; k < v.nnz(); ++k) row[v.idx[k]] = v.val[k];
    }
    return out;
}

}  // namespace ctc::nn
