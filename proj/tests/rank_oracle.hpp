#pragma once

// Composite ordering rebuilt from oracle::brute_force_ranks.

#include "oracles.hpp"

#include "paace/evolution.hpp"

namespace oracle {

/// Composite order rebuilt from brute-force ranks.
inline std::vector<std::string> composite_order(const std::vector<paace::PopulationEntry>& pop) {
    using F = std::function<bool(const paace::VariantStats&, const paace::VariantStats&)>;
    auto opt_gt = [](const std::optional<double>& a, const std::optional<double>& b) {
        return a && (!b || *a > *b);
    };
    auto opt_lt = [](const std::optional<double>& a, const std::optional<double>& b) {
        return a && (!b || *a < *b);
    };
    std::vector<paace::VariantStats> items;
    for (const auto& e : pop) items.push_back(e.stats);
    std::vector<F> metrics = {
        [](const paace::VariantStats& a, const paace::VariantStats& b) { return a.reward > b.reward; },
        [](const paace::VariantStats& a, const paace::VariantStats& b) { return a.success_rate > b.success_rate; },
        [&](const paace::VariantStats& a, const paace::VariantStats& b) { return opt_gt(a.mean_s, b.mean_s); },
        [&](const paace::VariantStats& a, const paace::VariantStats& b) { return opt_lt(a.mean_r, b.mean_r); },
    };
    std::vector<double> total(pop.size(), 0.0);
    for (const auto& m : metrics) {
        auto ranks = brute_force_ranks<paace::VariantStats>(items, m);
        for (std::size_t i = 0; i < pop.size(); ++i) total[i] += ranks[i];
    }
    std::vector<std::size_t> idx(pop.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (total[a] != total[b]) return total[a] < total[b];
        return pop[a].variant.prompt_id < pop[b].variant.prompt_id;
    });
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(pop[i].variant.prompt_id);
    return out;
}

}  // namespace oracle
