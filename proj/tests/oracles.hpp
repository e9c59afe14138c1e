#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library code it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::vector<std::string> words(const std::string& text) {
    std::istringstream is(text);
    std::vector<std::string> out;
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

/// Sparse bucket counts of the hashed bag-of-words embedding.
inline std::map<std::uint64_t, long double> bow_counts(const std::string& text, std::uint64_t dim = 256) {
    std::map<std::uint64_t, long double> out;
    for (const auto& w : words(text)) out[fnv1a(lower(w)) % dim] += 1.0L;
    return out;
}

/// Cosine over sparse counts; nullopt when either side is empty.
inline std::optional<double> bow_cosine(const std::string& a, const std::string& b, std::uint64_t dim = 256) {
    auto ca = bow_counts(a, dim);
    auto cb = bow_counts(b, dim);
    if (ca.empty() || cb.empty()) return std::nullopt;
    long double dot = 0, na = 0, nb = 0;
    for (const auto& [k, v] : ca) {
        na += v * v;
        auto it = cb.find(k);
        if (it != cb.end()) dot += v * it->second;
    }
    for (const auto& [k, v] : cb) nb += v * v;
    return static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
}

/// Competition rank by exhaustive search: the best position a variant can take
/// in any ordering of the population that is sorted by `better` (no element
/// strictly better than an earlier one). Ranks start at 1.
template <typename T>
std::vector<int> brute_force_ranks(const std::vector<T>& items, const std::function<bool(const T&, const T&)>& better) {
    const std::size_t n = items.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best(n, static_cast<int>(n) + 1);
    do {
        bool sorted = true;
        for (std::size_t i = 0; i < n && sorted; ++i)
            for (std::size_t j = i + 1; j < n && sorted; ++j)
                if (better(items[perm[j]], items[perm[i]])) sorted = false;
        if (!sorted) continue;
        for (std::size_t pos = 0; pos < n; ++pos)
            best[perm[pos]] = std::min(best[perm[pos]], static_cast<int>(pos) + 1);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Multiset token F1 written out longhand.
inline double token_f1(const std::string& pred, const std::string& gold) {
    auto p = words(lower(pred));
    auto g = words(lower(gold));
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    std::vector<bool> used(g.size(), false);
    int common = 0;
    for (const auto& t : p)
        for (std::size_t i = 0; i < g.size(); ++i)
            if (!used[i] && g[i] == t) {
                used[i] = true;
                ++common;
                break;
            }
    if (common == 0) return 0.0;
    double prec = static_cast<double>(common) / static_cast<double>(p.size());
    double rec = static_cast<double>(common) / static_cast<double>(g.size());
    return 2 * prec * rec / (prec + rec);
}

}  // namespace oracle
