#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "copath/core.hpp"

namespace copath {

enum class RougeVariant { f1, recall };

/// Ground truth for one instance: one or more extracted triplets, plus the
/// response tokens used when no triplet was extracted.
struct Reference {
    std::vector<Tokens> triplets;
    Tokens fallback;
};

namespace detail {
inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}
}  // namespace detail

/// Clipped unigram overlap, case-insensitive, no stemming. Zero when either
/// side is empty or nothing overlaps.
inline double rouge1(const Tokens& candidate, const Tokens& reference, RougeVariant variant = RougeVariant::f1) {
    if (candidate.empty() || reference.empty()) return 0.0;
    std::map<std::string, int> ref_counts;
    for (const auto& t : reference) ++ref_counts[detail::lower(t)];
    std::map<std::string, int> cand_counts;
    for (const auto& t : candidate) ++cand_counts[detail::lower(t)];
    long overlap = 0;
    for (const auto& [tok, n] : cand_counts) {
        auto it = ref_counts.find(tok);
        if (it != ref_counts.end()) overlap += std::min(n, it->second);
    }
    if (overlap == 0) return 0.0;
    const double recall = static_cast<double>(overlap) / static_cast<double>(reference.size());
    if (variant == RougeVariant::recall) return recall;
    const double precision = static_cast<double>(overlap) / static_cast<double>(candidate.size());
    return 2.0 * precision * recall / (precision + recall);
}

/// The triplet scoring best against `candidate` (first on ties), else the fallback.
inline const Tokens& reference_tokens(const Reference& ref, const Tokens& candidate,
                                      RougeVariant variant = RougeVariant::f1) {
    const Tokens* best = nullptr;
    double best_score = -1.0;
    for (const auto& t : ref.triplets) {
        if (t.empty()) continue;
        const double s = rouge1(candidate, t, variant);
        if (s > best_score) best_score = s, best = &t;
    }
    if (best) return *best;
    if (ref.fallback.empty()) input_error("reference has no triplet and no fallback tokens");
    return ref.fallback;
}

inline double path_rouge(const Tokens& path, const Reference& ref, RougeVariant variant = RougeVariant::f1) {
    return rouge1(path, reference_tokens(ref, path, variant), variant);
}

/// Re = ROUGE(p^v, p_gt) + ROUGE(p^u, p_gt), each path against its own best reference.
inline double compute_reward(const Tokens& p_v, const Tokens& p_u, const Reference& ref,
                             RougeVariant variant = RougeVariant::f1) {
    return path_rouge(p_v, ref, variant) + path_rouge(p_u, ref, variant);
}

}  // namespace copath
