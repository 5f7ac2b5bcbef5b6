#pragma once

// Text cleaning and fixed-dictionary tokenization. The token count
// produced here is the single definition of "usable tokens" used by the
// length filter, the histogram command, and the vectorizer.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctc/errors.hpp"

namespace ctc {

// ---------------------------------------------------------------------------
// Dictionary

/// Ordered, duplicate-free list of lowercase words defining the vector space.
class Dictionary {
public:
    /// Builds from raw words: lowercases, drops duplicates keeping first
    /// occurrence. Rejects empty input and non-alphabetic words.
    static Dictionary from_words(const std::vector<std::string>& raw) {
        Dictionary d;
        for (const std::string& w : raw) {
            std::string lower = to_lower(w);
            if (lower.empty() || !all_alpha(lower))
                throw DataError("dictionary word is not alphabetic: \"" + w + "\"");
            if (d.index_.emplace(lower, d.words_.size()).second)
                d.words_.push_back(std::move(lower));
        }
        if (d.words_.empty()) throw DataError("dictionary is empty");
        return d;
    }

    std::size_t size() const { return words_.size(); }
    const std::vector<std::string>& words() const { return words_; }
    const std::string& word(std::size_t i) const { return words_[i]; }

    /// Position of a lowercase word, or -1 if absent.
    int lookup(std::string_view w) const {
        auto it = index_.find(std::string(w));
        return it == index_.end() ? -1 : static_cast<int>(it->second);
    }

    static std::string to_lower(std::string_view s) {
        std::string out(s);
        std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
            return static_cast<char>(std::tolower(c));
        });
        return out;
    }

private:
    static bool all_alpha(std::string_view s) {
        return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalpha(c) != 0; });
    }

    std::vector<std::string> words_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Loads a dictionary file: UTF-8, one word per line, LF endings.
/// Lowercased, deduplicated preserving first-occurrence order.
inline Dictionary load_dictionary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dictionary file: " + path);
    std::vector<std::string> words;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        bool alpha = !line.empty() &&
                     std::all_of(line.begin(), line.end(),
                                 [](unsigned char c) { return std::isalpha(c) != 0; });
        if (!alpha)
            throw DataError(path + ": line " + std::to_string(line_no) +
                            ": not a purely alphabetic word");
        words.push_back(line);
    }
    if (words.empty()) throw DataError(path + ": dictionary file is empty");
    return Dictionary::from_words(words);
}

// ---------------------------------------------------------------------------
// Cleaning

namespace detail {

inline bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool starts_url(std::string_view s) {
    return s.starts_with("http://") || s.starts_with("https://") || s.starts_with("www.");
}

// One ordered pass: URLs, then <...> tags, then non-ASCII bytes, then
// whitespace collapse and trim.
inline std::string clean_pass(std::string_view s) {
    // Drop whitespace-delimited runs that start like a URL.
    std::string no_url;
    no_url.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (is_space(static_cast<unsigned char>(s[i]))) {
            no_url.push_back(s[i]);
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && !is_space(static_cast<unsigned char>(s[j]))) ++j;
        if (!starts_url(s.substr(i, j - i))) no_url.append(s.substr(i, j - i));
        i = j;
    }

    // Drop <...> spans that contain no embedded '<'.
    std::string no_tag;
    no_tag.reserve(no_url.size());
    i = 0;
    while (i < no_url.size()) {
        if (no_url[i] == '<') {
            std::size_t j = i + 1;
            while (j < no_url.size() && no_url[j] != '>' && no_url[j] != '<') ++j;
            if (j < no_url.size() && no_url[j] == '>') {
                i = j + 1;  // tag removed
                continue;
            }
        }
        no_tag.push_back(no_url[i]);
        ++i;
    }

    // ASCII only, whitespace collapsed, trimmed.
    std::string out;
    out.reserve(no_tag.size());
    bool pending_space = false;
    for (unsigned char c : no_tag) {
        if (c >= 0x80) continue;
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(c));
    }
    return out;
}

}  // namespace detail

/// Cleans raw text: removes URLs, HTML/code tags, non-ASCII bytes, and
/// excess whitespace, in that order. Each pass only deletes characters,
/// and the pass repeats until stable, so clean is idempotent.
inline std::string clean(std::string_view raw) {
    std::string cur(raw);
    for (;;) {
        std::string next = detail::clean_pass(cur);
        if (next == cur) return cur;
        cur = std::move(next);
    }
}

// ---------------------------------------------------------------------------
// Tokenization

/// Lowercases, splits on any non-alphabetic character, and keeps only
/// words present in the dictionary. Returns dictionary indices in text
/// order; repetitions preserved.
inline std::vector<std::uint32_t> tokenize(std::string_view text, const Dictionary& dict) {
    std::vector<std::uint32_t> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            int idx = dict.lookup(word);
            if (idx >= 0) out.push_back(static_cast<std::uint32_t>(idx));
            word.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isalpha(c))
            word.push_back(static_cast<char>(std::tolower(c)));
        else
            flush();
    }
    flush();
    return out;
}

}  // namespace ctc
