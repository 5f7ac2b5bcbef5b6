#pragma once

// Shared test utilities: temp files and random sparse vectors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "ctc/random.hpp"
#include "ctc/vectorizer.hpp"

namespace testutil {

class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0;; ++i) {
            path_ = base / ("ctc_test_" + std::to_string(::getpid()) + "_" + std::to_string(i));
            if (std::filesystem::create_directory(path_)) break;
        }
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

/// Random normalized sparse vector with nnz in [1, max_nnz].
inline ctc::FeatureVector random_vector(ctc::Rng& rng, std::size_t dim, std::size_t max_nnz = 12) {
    ctc::FeatureVector v;
    v.dim = dim;
    const std::size_t nnz = 1 + rng.below(std::min(max_nnz, dim));
    std::vector<std::uint32_t> picks;
    while (picks.size() < nnz) {
        auto f = static_cast<std::uint32_t>(rng.below(dim));
        bool dup = false;
        for (auto p : picks) dup |= (p == f);
        if (!dup) picks.push_back(f);
    }
    std::sort(picks.begin(), picks.end());
    double norm_sq = 0.0;
    std::vector<double> raw;
    for (std::size_t k = 0; k < nnz; ++k) {
        const double x = rng.uniform() + 0.05;
        raw.push_back(x);
        norm_sq += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (std::size_t k = 0; k < nnz; ++k) {
        v.idx.push_back(picks[k]);
        v.val.push_back(static_cast<float>(raw[k] * inv));
    }
    return v;
}

}  // namespace testutil
