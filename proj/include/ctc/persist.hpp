#pragma once

// Bit-exact model serialization. Containers are a 16-byte fixed prelude
// (magic "CTCM", u32 version, u64 header length, all little-endian), a
// UTF-8 JSON header describing the model and its payload block table,
// and concatenated little-endian f32/i32 arrays. An ensemble is a
// directory with a JSON manifest listing the dictionary, vectorizer and
// model files together with their SHA-256 hashes.

#include <openssl/evp.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctc/ensemble.hpp"
#include "ctc/models.hpp"

namespace ctc::persist {

enum class ErrorCode {
    missing_file,
    bad_magic,
    unsupported_version,
    bad_header,
    bad_block_table,
    truncated,
    shape_mismatch,
    hash_mismatch,
};

class PersistError : public std::runtime_error {
public:
    PersistError(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code(code) {}
    ErrorCode code;
};

namespace detail {

constexpr char kMagic[4] = {'C', 'T', 'C', 'M'};
constexpr std::uint32_t kVersion = 1;

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
}

inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

struct Block {
    std::string name;
    std::uint64_t offset = 0;
    std::uint64_t length = 0;  // bytes
    std::string dtype;         // "f32" or "i32"
};

class PayloadWriter {
public:
    void add_f32(const std::string& name, const float* data, std::size_t count) {
        Block b{name, bytes_.size(), count * 4, "f32"};
        for (std::size_t i = 0; i < count; ++i) put_u32(bytes_, std::bit_cast<std::uint32_t>(data[i]));
        blocks_.push_back(std::move(b));
    }

    void add_i32(const std::string& name, const std::int32_t* data, std::size_t count) {
        Block b{name, bytes_.size(), count * 4, "i32"};
        for (std::size_t i = 0; i < count; ++i)
            put_u32(bytes_, static_cast<std::uint32_t>(data[i]));
        blocks_.push_back(std::move(b));
    }

    nlohmann::json block_table() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const Block& b : blocks_)
            arr.push_back({{"name", b.name},
                           {"offset", b.offset},
                           {"length", b.length},
                           {"dtype", b.dtype}});
        return arr;
    }

    const std::string& bytes() const { return bytes_; }

private:
    std::string bytes_;
    std::vector<Block> blocks_;
};

class PayloadReader {
public:
    PayloadReader(std::string payload, const nlohmann::json& table, const std::string& where)
        : payload_(std::move(payload)), where_(where) {
        if (!table.is_array())
            throw PersistError(ErrorCode::bad_header, where + ": block table is not an array");
        std::uint64_t cursor = 0;
        for (const auto& j : table) {
            Block b;
            try {
                b.name = j.at("name").get<std::string>();
                b.offset = j.at("offset").get<std::uint64_t>();
                b.length = j.at("length").get<std::uint64_t>();
                b.dtype = j.at("dtype").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw PersistError(ErrorCode::bad_header, where + ": bad block entry: " + e.what());
            }
            if (b.offset != cursor)
                throw PersistError(ErrorCode::bad_block_table,
                                   where + ": block \"" + b.name +
                                       "\" leaves a gap or overlap in the payload");
            if (b.length % 4 != 0)
                throw PersistError(ErrorCode::bad_block_table,
                                   where + ": block \"" + b.name + "\" length not a multiple of 4");
            cursor += b.length;
            if (cursor > payload_.size())
                throw PersistError(ErrorCode::truncated,
                                   where + ": payload truncated at block \"" + b.name + "\"");
            blocks_.push_back(std::move(b));
        }
        if (cursor != payload_.size())
            throw PersistError(ErrorCode::bad_block_table,
                               where + ": block table does not cover the payload exactly");
    }

    std::vector<float> f32(const std::string& name) const {
        const Block& b = find(name, "f32");
        std::vector<float> out(b.length / 4);
        const auto* p = reinterpret_cast<const unsigned char*>(payload_.data() + b.offset);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = std::bit_cast<float>(get_u32(p + 4 * i));
        return out;
    }

    std::vector<std::int32_t> i32(const std::string& name) const {
        const Block& b = find(name, "i32");
        std::vector<std::int32_t> out(b.length / 4);
        const auto* p = reinterpret_cast<const unsigned char*>(payload_.data() + b.offset);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = static_cast<std::int32_t>(get_u32(p + 4 * i));
        return out;
    }

private:
    const Block& find(const std::string& name, const std::string& dtype) const {
        for (const Block& b : blocks_)
            if (b.name == name) {
                if (b.dtype != dtype)
                    throw PersistError(ErrorCode::shape_mismatch,
                                       where_ + ": block \"" + name + "\" has dtype " + b.dtype);
                return b;
            }
        throw PersistError(ErrorCode::shape_mismatch, where_ + ": missing block \"" + name + "\"");
    }

    std::string payload_;
    std::string where_;
    std::vector<Block> blocks_;
};

inline void write_container(const std::string& path, const nlohmann::json& header,
                            const std::string& payload) {
    const std::string header_str = header.dump();
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u64(out, header_str.size());
    out += header_str;
    out += payload;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw PersistError(ErrorCode::missing_file, "cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw PersistError(ErrorCode::missing_file, "short write: " + path);
}

struct RawContainer {
    nlohmann::json header;
    std::string payload;
};

inline RawContainer read_container(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw PersistError(ErrorCode::missing_file, "cannot open: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 16) throw PersistError(ErrorCode::truncated, path + ": shorter than prelude");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw PersistError(ErrorCode::bad_magic, path + ": bad magic");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t version = get_u32(p + 4);
    if (version != kVersion)
        throw PersistError(ErrorCode::unsupported_version,
                           path + ": unsupported version " + std::to_string(version));
    const std::uint64_t header_len = get_u64(p + 8);
    if (16 + header_len > bytes.size())
        throw PersistError(ErrorCode::truncated, path + ": header extends past end of file");
    RawContainer rc;
    rc.header = nlohmann::json::parse(bytes.substr(16, header_len), nullptr, false);
    if (rc.header.is_discarded())
        throw PersistError(ErrorCode::bad_header, path + ": header is not valid JSON");
    rc.payload = bytes.substr(16 + header_len);
    return rc;
}

inline nlohmann::json hyperparams_json(const Hyperparams& hp) {
    nlohmann::json j;
    switch (hp.family) {
        case Family::decision_tree:
            j["max_depth"] = hp.max_depth;
            break;
        case Family::random_forest:
            j["n_trees"] = hp.n_trees;
            break;
        case Family::logistic:
        case Family::linear_svm:
            j["max_iters"] = hp.max_iters;
            j["tol"] = hp.tol;
            break;
        case Family::mlp:
        case Family::dnn:
            j["hidden"] = hp.hidden;
            j["learning_rate"] = hp.learning_rate;
            j["batch_size"] = hp.batch_size;
            j["max_epochs"] = hp.max_epochs;
            if (hp.family == Family::dnn)
                j["accuracy_threshold"] = hp.accuracy_threshold;
            else {
                j["plateau_tol"] = hp.plateau_tol;
                j["patience"] = hp.patience;
            }
            break;
    }
    return j;
}

inline void apply_hyperparams_json(Hyperparams& hp, const nlohmann::json& j) {
    if (j.contains("max_depth")) hp.max_depth = j["max_depth"].get<int>();
    if (j.contains("n_trees")) hp.n_trees = j["n_trees"].get<std::size_t>();
    if (j.contains("max_iters")) hp.max_iters = j["max_iters"].get<int>();
    if (j.contains("tol")) hp.tol = j["tol"].get<double>();
    if (j.contains("hidden")) hp.hidden = j["hidden"].get<std::vector<std::size_t>>();
    if (j.contains("learning_rate")) hp.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("batch_size")) hp.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("max_epochs")) hp.max_epochs = j["max_epochs"].get<int>();
    if (j.contains("accuracy_threshold"))
        hp.accuracy_threshold = j["accuracy_threshold"].get<double>();
    if (j.contains("plateau_tol")) hp.plateau_tol = j["plateau_tol"].get<double>();
    if (j.contains("patience")) hp.patience = j["patience"].get<int>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SHA-256

inline std::string sha256_hex(const void* data, std::size_t size) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data, size, md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

inline std::string sha256_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw PersistError(ErrorCode::missing_file, "cannot open: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes.data(), bytes.size());
}

// ---------------------------------------------------------------------------
// Models

inline void save_model(const TrainedModel& m, const std::string& path) {
    detail::PayloadWriter pw;
    if (const auto* lin = std::get_if<LinearModel>(&m.params)) {
        pw.add_f32("weights", lin->w.data(), lin->w.size());
        pw.add_f32("bias", &lin->bias, 1);
    } else if (const auto* tree = std::get_if<TreeModel>(&m.params)) {
        pw.add_i32("feature", tree->feature.data(), tree->feature.size());
        pw.add_f32("threshold", tree->threshold.data(), tree->threshold.size());
        pw.add_i32("left", tree->left.data(), tree->left.size());
        pw.add_i32("right", tree->right.data(), tree->right.size());
        pw.add_f32("node_prob", tree->prob.data(), tree->prob.size());
    } else if (const auto* forest = std::get_if<ForestModel>(&m.params)) {
        std::vector<std::int32_t> offsets{0};
        std::vector<std::int32_t> feature, left, right;
        std::vector<float> threshold, prob;
        for (const TreeModel& t : forest->trees) {
            const auto base = static_cast<std::int32_t>(feature.size());
            feature.insert(feature.end(), t.feature.begin(), t.feature.end());
            threshold.insert(threshold.end(), t.threshold.begin(), t.threshold.end());
            prob.insert(prob.end(), t.prob.begin(), t.prob.end());
            // child links stored file-global so the block is self-describing
            for (std::int32_t c : t.left) left.push_back(c < 0 ? -1 : c + base);
            for (std::int32_t c : t.right) right.push_back(c < 0 ? -1 : c + base);
            offsets.push_back(static_cast<std::int32_t>(feature.size()));
        }
        pw.add_i32("tree_offsets", offsets.data(), offsets.size());
        pw.add_i32("feature", feature.data(), feature.size());
        pw.add_f32("threshold", threshold.data(), threshold.size());
        pw.add_i32("left", left.data(), left.size());
        pw.add_i32("right", right.data(), right.size());
        pw.add_f32("node_prob", prob.data(), prob.size());
    } else if (const auto* net = std::get_if<nn::Net<float>>(&m.params)) {
        for (std::size_t l = 0; l < net->W.size(); ++l) {
            pw.add_f32("W" + std::to_string(l), net->W[l].data().data(), net->W[l].data().size());
            pw.add_f32("b" + std::to_string(l), net->b[l].data(), net->b[l].size());
        }
    }

    nlohmann::json header{{"kind", "model"},
                          {"family", m.hp.id()},
                          {"source_tag", m.source_tag},
                          {"training_accuracy", m.training_accuracy},
                          {"epochs", m.epochs},
                          {"dim", m.dim},
                          {"hyperparams", detail::hyperparams_json(m.hp)},
                          {"blocks", pw.block_table()}};
    detail::write_container(path, header, pw.bytes());
}

inline TrainedModel load_model(const std::string& path) {
    detail::RawContainer rc = detail::read_container(path);
    TrainedModel m;
    try {
        if (rc.header.at("kind").get<std::string>() != "model")
            throw PersistError(ErrorCode::bad_header, path + ": not a model container");
        m.hp = family_from_id(rc.header.at("family").get<std::string>());
        detail::apply_hyperparams_json(m.hp, rc.header.at("hyperparams"));
        m.source_tag = rc.header.at("source_tag").get<std::string>();
        m.training_accuracy = rc.header.at("training_accuracy").get<float>();
        m.epochs = rc.header.at("epochs").get<int>();
        m.dim = rc.header.at("dim").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw PersistError(ErrorCode::bad_header, path + ": " + e.what());
    }
    detail::PayloadReader pr(std::move(rc.payload), rc.header.at("blocks"), path);

    auto check = [&](bool ok, const std::string& what) {
        if (!ok) throw PersistError(ErrorCode::shape_mismatch, path + ": " + what);
    };

    switch (m.hp.family) {
        case Family::logistic:
        case Family::linear_svm: {
            LinearModel lin;
            lin.w = pr.f32("weights");
            auto bias = pr.f32("bias");
            check(lin.w.size() == m.dim, "weight count does not match dimension");
            check(bias.size() == 1, "bias block must hold one value");
            lin.bias = bias[0];
            m.params = std::move(lin);
            break;
        }
        case Family::decision_tree: {
            TreeModel t;
            t.feature = pr.i32("feature");
            t.threshold = pr.f32("threshold");
            t.left = pr.i32("left");
            t.right = pr.i32("right");
            t.prob = pr.f32("node_prob");
            const std::size_t n = t.feature.size();
            check(n >= 1 && t.threshold.size() == n && t.left.size() == n &&
                      t.right.size() == n && t.prob.size() == 2 * n,
                  "inconsistent tree arrays");
            for (std::size_t i = 0; i < n; ++i)
                check(t.feature[i] < static_cast<std::int32_t>(m.dim) &&
                          (t.feature[i] < 0 ||
                           (t.left[i] >= 0 && t.left[i] < static_cast<std::int32_t>(n) &&
                            t.right[i] >= 0 && t.right[i] < static_cast<std::int32_t>(n))),
                      "tree node references out of range");
            m.params = std::move(t);
            break;
        }
        case Family::random_forest: {
            auto offsets = pr.i32("tree_offsets");
            auto feature = pr.i32("feature");
            auto threshold = pr.f32("threshold");
            auto left = pr.i32("left");
            auto right = pr.i32("right");
            auto prob = pr.f32("node_prob");
            const std::size_t total = feature.size();
            check(!offsets.empty() && offsets.front() == 0 &&
                      offsets.back() == static_cast<std::int32_t>(total) &&
                      threshold.size() == total && left.size() == total &&
                      right.size() == total && prob.size() == 2 * total,
                  "inconsistent forest arrays");
            ForestModel f;
            for (std::size_t t = 0; t + 1 < offsets.size(); ++t) {
                const auto lo = static_cast<std::size_t>(offsets[t]);
                const auto hi = static_cast<std::size_t>(offsets[t + 1]);
                check(lo < hi && hi <= total, "bad tree offsets");
                TreeModel tree;
                tree.feature.assign(feature.begin() + lo, feature.begin() + hi);
                tree.threshold.assign(threshold.begin() + lo, threshold.begin() + hi);
                tree.prob.assign(prob.begin() + 2 * lo, prob.begin() + 2 * hi);
                tree.left.resize(hi - lo);
                tree.right.resize(hi - lo);
                for (std::size_t i = lo; i < hi; ++i) {
                    // child links are file-global; rebase them per tree
                    tree.left[i - lo] = left[i] < 0 ? -1 : left[i] - static_cast<std::int32_t>(lo);
                    tree.right[i - lo] =
                        right[i] < 0 ? -1 : right[i] - static_cast<std::int32_t>(lo);
                }
                f.trees.push_back(std::move(tree));
            }
            m.params = std::move(f);
            break;
        }
        case Family::mlp:
        case Family::dnn: {
            std::vector<std::size_t> widths{m.dim};
            for (std::size_t h : m.hp.hidden) widths.push_back(h);
            widths.push_back(2);
            Rng dummy(0);
            nn::Net<float> net(widths, dummy);
            for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
                auto W = pr.f32("W" + std::to_string(l));
                auto b = pr.f32("b" + std::to_string(l));
                check(W.size() == widths[l] * widths[l + 1] && b.size() == widths[l + 1],
                      "layer shape mismatch");
                net.W[l].data() = std::move(W);
                net.b[l] = std::move(b);
            }
            m.params = std::move(net);
            break;
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Vectorizer

inline void save_vectorizer(const TfIdfModel& v, const std::string& path) {
    detail::PayloadWriter pw;
    pw.add_f32("idf", v.idf.data(), v.idf.size());
    nlohmann::json header{
        {"kind", "tfidf"}, {"dim", v.dim()}, {"blocks", pw.block_table()}};
    detail::write_container(path, header, pw.bytes());
}

/// Loads idf weights; the dictionary is supplied by the caller and must
/// match the stored dimension.
inline TfIdfModel load_vectorizer(const std::string& path, Dictionary dict) {
    detail::RawContainer rc = detail::read_container(path);
    std::size_t dim = 0;
    try {
        if (rc.header.at("kind").get<std::string>() != "tfidf")
            throw PersistError(ErrorCode::bad_header, path + ": not a vectorizer container");
        dim = rc.header.at("dim").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw PersistError(ErrorCode::bad_header, path + ": " + e.what());
    }
    if (dim != dict.size())
        throw PersistError(ErrorCode::shape_mismatch,
                           path + ": vectorizer dimension " + std::to_string(dim) +
                               " does not match dictionary size " + std::to_string(dict.size()));
    detail::PayloadReader pr(std::move(rc.payload), rc.header.at("blocks"), path);
    TfIdfModel model{std::move(dict), pr.f32("idf")};
    if (model.idf.size() != dim)
        throw PersistError(ErrorCode::shape_mismatch, path + ": idf block size mismatch");
    return model;
}

// ---------------------------------------------------------------------------
// Ensembles

/// Writes a self-contained ensemble directory: dictionary.txt,
/// vectorizer.ctcm, one container per model, and an ensemble.json
/// manifest with SHA-256 hashes of every referenced file.
inline std::string save_ensemble(const Ensemble& e, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    const std::string dict_path = (fs::path(dir) / "dictionary.txt").string();
    {
        std::ofstream f(dict_path, std::ios::binary | std::ios::trunc);
        for (const std::string& w : e.vectorizer.dictionary.words()) f << w << '\n';
    }
    const std::string vec_path = (fs::path(dir) / "vectorizer.ctcm").string();
    save_vectorizer(e.vectorizer, vec_path);

    nlohmann::json models = nlohmann::json::array();
    for (const TrainedModel& m : e.models) {
        const std::string name = m.id() + ".ctcm";
        const std::string path = (fs::path(dir) / name).string();
        save_model(m, path);
        models.push_back({{"path", name}, {"sha256", sha256_file(path)}});
    }

    nlohmann::json manifest{
        {"format", "ctc-ensemble"},
        {"version", 1},
        {"dictionary", {{"path", "dictionary.txt"}, {"sha256", sha256_file(dict_path)}}},
        {"vectorizer", {{"path", "vectorizer.ctcm"}, {"sha256", sha256_file(vec_path)}}},
        {"models", std::move(models)}};

    const std::string manifest_path = (fs::path(dir) / "ensemble.json").string();
    std::ofstream f(manifest_path, std::ios::binary | std::ios::trunc);
    f << manifest.dump(2) << '\n';
    return manifest_path;
}

inline Ensemble load_ensemble(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    std::ifstream f(manifest_path, std::ios::binary);
    if (!f) throw PersistError(ErrorCode::missing_file, "cannot open: " + manifest_path);
    nlohmann::json manifest = nlohmann::json::parse(f, nullptr, false);
    if (manifest.is_discarded())
        throw PersistError(ErrorCode::bad_header, manifest_path + ": not valid JSON");

    const fs::path base = fs::path(manifest_path).parent_path();
    auto resolve_checked = [&](const nlohmann::json& entry) {
        const std::string rel = entry.at("path").get<std::string>();
        const std::string path = (base / rel).string();
        if (!fs::exists(path))
            throw PersistError(ErrorCode::missing_file, "manifest references missing file: " + rel);
        const std::string expect = entry.at("sha256").get<std::string>();
        const std::string actual = sha256_file(path);
        if (expect != actual)
            throw PersistError(ErrorCode::hash_mismatch,
                               rel + ": content hash mismatch (expected " + expect + ")");
        return path;
    };

    try {
        const std::string dict_path = resolve_checked(manifest.at("dictionary"));
        Dictionary dict = load_dictionary(dict_path);
        const std::string vec_path = resolve_checked(manifest.at("vectorizer"));

        Ensemble e{load_vectorizer(vec_path, std::move(dict)), {}};
        for (const auto& entry : manifest.at("models")) {
            TrainedModel m = load_model(resolve_checked(entry));
            if (m.dim != e.vectorizer.dim())
                throw PersistError(ErrorCode::shape_mismatch,
                                   m.id() + ": model dimension does not match the vectorizer");
            e.models.push_back(std::move(m));
        }
        return e;
    } catch (const nlohmann::json::exception& err) {
        throw PersistError(ErrorCode::bad_header,
                           manifest_path + (": " + std::string(err.what())));
    }
}

}  // namespace ctc::persist
