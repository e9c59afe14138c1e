#include "paace/evolution.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <thread>

namespace paace {

using nlohmann::json;

namespace {

double sorted_mean(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

}  // namespace

void VariantStats::add(const EvalResult& r) {
    ++n_evals;
    if (r.success) {
        ++n_success;
        s_values.push_back(r.equivalence_s);
        r_values.push_back(r.mean_ratio);
    }
    success_rate = static_cast<double>(n_success) / static_cast<double>(n_evals);
    if (n_success > 0) {
        mean_s = sorted_mean(s_values);
        mean_r = sorted_mean(r_values);
    }
    reward = paace::reward(*this);
}

double reward(const VariantStats& stats) {
    if (stats.n_evals == 0 || stats.n_success == 0 || !stats.mean_s || !stats.mean_r) return 0.0;
    double v = stats.success_rate * *stats.mean_s * (1.0 - *stats.mean_r);
    return std::clamp(v, 0.0, 1.0);
}

std::vector<RankedVariant> composite_ranking(const std::vector<PopulationEntry>& population, std::size_t min_evals) {
    std::vector<const PopulationEntry*> pool;
    for (const auto& e : population)
        if (e.stats.n_evals >= min_evals && e.stats.n_evals > 0) pool.push_back(&e);

    // better(a, b): a strictly better than b on the metric.
    auto rank_by = [&](auto better) {
        std::vector<int> ranks(pool.size(), 1);
        for (std::size_t i = 0; i < pool.size(); ++i)
            for (std::size_t j = 0; j < pool.size(); ++j)
                if (j != i && better(pool[j]->stats, pool[i]->stats)) ++ranks[i];
        return ranks;
    };
    auto higher_opt = [](const std::optional<double>& a, const std::optional<double>& b) {
        if (!a) return false;
        if (!b) return true;
        return *a > *b;
    };
    auto lower_opt = [](const std::optional<double>& a, const std::optional<double>& b) {
        if (!a) return false;
        if (!b) return true;
        return *a < *b;
    };
    auto r_reward = rank_by([](const VariantStats& a, const VariantStats& b) { return a.reward > b.reward; });
    auto r_success = rank_by([](const VariantStats& a, const VariantStats& b) { return a.success_rate > b.success_rate; });
    auto r_s = rank_by([&](const VariantStats& a, const VariantStats& b) { return higher_opt(a.mean_s, b.mean_s); });
    auto r_r = rank_by([&](const VariantStats& a, const VariantStats& b) { return lower_opt(a.mean_r, b.mean_r); });

    std::vector<RankedVariant> out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        RankedVariant rv;
        rv.prompt_id = pool[i]->variant.prompt_id;
        rv.rank_reward = r_reward[i];
        rv.rank_success = r_success[i];
        rv.rank_s = r_s[i];
        rv.rank_r = r_r[i];
        rv.composite = (rv.rank_reward + rv.rank_success + rv.rank_s + rv.rank_r) / 4.0;
        out.push_back(std::move(rv));
    }
    std::sort(out.begin(), out.end(), [](const RankedVariant& a, const RankedVariant& b) {
        if (a.composite != b.composite) return a.composite < b.composite;
        return a.prompt_id < b.prompt_id;
    });
    return out;
}

// ---------------------------------------------------------------------------

void EvolutionConfig::validate() const {
    if (seed_prompt.empty()) throw ConfigError("evolution.seed_prompt must be non-empty");
    if (population_cap < 1) throw ConfigError("evolution.population_cap must be >= 1");
    if (elitism < 0 || elitism > population_cap) throw ConfigError("evolution.elitism must be in [0, population_cap]");
    if (min_evals < 1) throw ConfigError("evolution.min_evals must be >= 1");
    if (batch_size < 1) throw ConfigError("evolution.batch_size must be >= 1");
    if (top_q < 1) throw ConfigError("evolution.top_q must be >= 1");
    if (children_per_round < 0) throw ConfigError("evolution.children_per_round must be >= 0");
    if (eval_budget < 1) throw ConfigError("evolution.eval_budget must be >= 1");
    if (workers < 1) throw ConfigError("evolution.workers must be >= 1");
    if (seed_pool_size < 1) throw ConfigError("evolution.seed_pool_size must be >= 1");
    if (lease_timeout_factor <= 0.0) throw ConfigError("evolution.lease_timeout_factor must be > 0");
    if (initial_batch_seconds <= 0.0) throw ConfigError("evolution.initial_batch_seconds must be > 0");
    if (k < 1) throw ConfigError("evolution.k must be >= 1");
    try {
        generator.validate();
        thresholds.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
}

Clock steady_clock_seconds() {
    return [] {
        using namespace std::chrono;
        return duration<double>(steady_clock::now().time_since_epoch()).count();
    };
}

Registry::Registry(EvolutionConfig cfg, std::shared_ptr<PromptMutator> mutator, Clock clock)
    : cfg_(std::move(cfg)), mutator_(std::move(mutator)), clock_(std::move(clock)) {
    cfg_.validate();
    if (!mutator_) throw ConfigError("evolution needs a prompt mutator");
    add_variant(cfg_.seed_prompt, std::nullopt);
}

std::string Registry::add_variant(std::string text, std::optional<std::string> parent) {
    char id[16];
    std::snprintf(id, sizeof id, "p%04d", next_variant_++);
    PromptVariant v{id, std::move(text), std::move(parent), round_};
    stats_[v.prompt_id] = VariantStats{};
    variants_.push_back(std::move(v));
    return id;
}

std::vector<PopulationEntry> Registry::population_locked() const {
    std::vector<PopulationEntry> out;
    for (const auto& v : variants_) out.push_back({v, stats_.at(v.prompt_id)});
    return out;
}

std::vector<std::uint64_t> Registry::seeds_for(const std::string& prompt_id, int batch_index) const {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < cfg_.batch_size; ++i) {
        auto slot = static_cast<std::uint64_t>(batch_index) * static_cast<std::uint64_t>(cfg_.batch_size) +
                    static_cast<std::uint64_t>(i);
        if (cfg_.resample) {
            seeds.push_back(splitmix64(cfg_.seed ^ fnv1a64(prompt_id) ^ splitmix64(slot)) % 1'000'000'007ULL);
        } else {
            auto j = slot % static_cast<std::uint64_t>(cfg_.seed_pool_size);
            seeds.push_back(splitmix64(cfg_.seed * 0x9e3779b97f4a7c15ULL + j) % 1'000'000'007ULL);
        }
    }
    return seeds;
}

double Registry::lease_window() const {
    double base = cfg_.initial_batch_seconds;
    if (!runtimes_.empty()) {
        auto r = runtimes_;
        auto mid = r.begin() + static_cast<std::ptrdiff_t>(r.size() / 2);
        std::nth_element(r.begin(), mid, r.end());
        base = std::max(*mid, 1e-3);
    }
    return cfg_.lease_timeout_factor * base;
}

std::optional<Lease> Registry::issue(const std::string& worker_id, const std::string& prompt_id, double now) {
    const auto budget = static_cast<std::size_t>(cfg_.eval_budget);
    if (reserved_ >= budget) return std::nullopt;
    for (const auto& [id, a] : active_)
        if (a.lease.worker_id == worker_id && a.lease.prompt_id == prompt_id) return std::nullopt;
    auto count = std::min<std::size_t>(static_cast<std::size_t>(cfg_.batch_size), budget - reserved_);
    int b = batches_issued_[prompt_id]++;
    auto seeds = seeds_for(prompt_id, b);
    seeds.resize(count);

    Lease lease;
    lease.batch_id = next_batch_++;
    lease.worker_id = worker_id;
    lease.prompt_id = prompt_id;
    lease.seeds = seeds;
    lease.issued_at = now;
    lease.deadline = now + lease_window();
    reserved_ += count;
    in_flight_evals_[prompt_id] += static_cast<int>(count);
    active_[lease.batch_id] = Active{lease, seeds};
    return lease;
}

std::optional<Lease> Registry::request_lease(const std::string& worker_id) {
    std::lock_guard lock(mu_);
    const double now = clock_();

    for (auto& [id, a] : active_) {
        if (a.lease.deadline >= now || a.pending.empty()) continue;
        a.lease.worker_id = worker_id;
        a.lease.seeds = a.pending;
        a.lease.issued_at = now;
        a.lease.deadline = now + lease_window();
        return a.lease;
    }
    if (reserved_ >= static_cast<std::size_t>(cfg_.eval_budget)) return std::nullopt;

    auto under_evaluated = [&]() -> std::optional<std::string> {
        for (const auto& v : variants_) {
            auto n = stats_.at(v.prompt_id).n_evals + static_cast<std::size_t>(in_flight_evals_[v.prompt_id]);
            if (n < static_cast<std::size_t>(cfg_.min_evals)) return v.prompt_id;
        }
        return std::nullopt;
    };

    if (auto pid = under_evaluated()) return issue(worker_id, *pid, now);
    select_locked();
    if (auto pid = under_evaluated()) return issue(worker_id, *pid, now);

    auto ranking = composite_ranking(population_locked(), static_cast<std::size_t>(cfg_.min_evals));
    for (const auto& r : ranking)
        if (auto lease = issue(worker_id, r.prompt_id, now)) return lease;
    return issue(worker_id, variants_.front().prompt_id, now);
}

bool Registry::post_result(std::uint64_t batch_id, const EvalResult& result) {
    std::lock_guard lock(mu_);
    auto it = active_.find(batch_id);
    if (it == active_.end()) return false;
    auto& pending = it->second.pending;
    auto p = std::find(pending.begin(), pending.end(), result.seed);
    if (p == pending.end()) return false;
    pending.erase(p);
    const auto& pid = it->second.lease.prompt_id;
    stats_[pid].add(result);
    --in_flight_evals_[pid];
    done_seeds_[batch_id].push_back(result.seed);
    ++evals_;
    recompute_global();
    return true;
}

void Registry::complete_lease(std::uint64_t batch_id, double runtime_seconds) {
    std::lock_guard lock(mu_);
    auto it = active_.find(batch_id);
    if (it == active_.end()) return;
    const auto unposted = it->second.pending.size();
    reserved_ -= unposted;
    in_flight_evals_[it->second.lease.prompt_id] -= static_cast<int>(unposted);
    active_.erase(it);
    runtimes_.push_back(runtime_seconds);
}

bool Registry::finished() const {
    std::lock_guard lock(mu_);
    return reserved_ >= static_cast<std::size_t>(cfg_.eval_budget) && active_.empty();
}

void Registry::recompute_global() {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : variants_) {
        const auto& s = stats_.at(v.prompt_id);
        if (s.n_evals == 0) continue;
        sum += s.reward;
        ++n;
    }
    global_mean_reward_ = n ? sum / static_cast<double>(n) : 0.0;
}

void Registry::select_now() {
    std::lock_guard lock(mu_);
    select_locked();
}

void Registry::select_locked() {
    auto ranking = composite_ranking(population_locked(), static_cast<std::size_t>(cfg_.min_evals));
    if (ranking.empty()) return;
    elite_history_.push_back(ranking.front().prompt_id);
    ++round_;

    auto known = [&](const std::string& text) {
        for (const auto& v : variants_)
            if (v.text == text) return true;
        for (const auto& a : evicted_)
            if (a.variant.text == text) return true;
        return false;
    };

    const int parents = std::min<int>(cfg_.top_q, static_cast<int>(ranking.size()));
    for (int i = 0; i < parents; ++i) {
        int n = cfg_.children_per_round / parents + (i < cfg_.children_per_round % parents ? 1 : 0);
        if (n < 1) continue;
        const auto& pid = ranking[static_cast<std::size_t>(i)].prompt_id;
        auto parent = std::find_if(variants_.begin(), variants_.end(),
                                   [&](const PromptVariant& v) { return v.prompt_id == pid; });
        const auto& st = stats_.at(pid);
        char summary[160];
        std::snprintf(summary, sizeof summary, "n_evals=%zu success_rate=%.4f mean_s=%.4f mean_r=%.4f reward=%.4f",
                      st.n_evals, st.success_rate, st.mean_s.value_or(0.0), st.mean_r.value_or(1.0), st.reward);
        std::vector<std::string> children;
        auto mseed = splitmix64(cfg_.seed ^ splitmix64(static_cast<std::uint64_t>(round_) * 64 + static_cast<std::uint64_t>(i)));
        try {
            children = mutator_->propose(parent->text, summary, n, mseed);
        } catch (const std::exception&) {
            children.clear();
        }
        std::string parent_text = parent->text;
        for (auto& c : children) {
            if (c.empty() || c == parent_text || known(c)) continue;
            add_variant(std::move(c), pid);
        }
    }

    // Eviction: worst ranked first, never the top `elitism`, never with work in flight.
    while (static_cast<int>(variants_.size()) > cfg_.population_cap) {
        std::optional<std::string> victim;
        for (std::size_t r = ranking.size(); r-- > static_cast<std::size_t>(std::min<int>(cfg_.elitism, static_cast<int>(ranking.size())));) {
            const auto& pid = ranking[r].prompt_id;
            bool present = std::any_of(variants_.begin(), variants_.end(),
                                       [&](const PromptVariant& v) { return v.prompt_id == pid; });
            if (present && in_flight_evals_[pid] == 0) {
                victim = pid;
                break;
            }
        }
        if (!victim) break;
        auto it = std::find_if(variants_.begin(), variants_.end(),
                               [&](const PromptVariant& v) { return v.prompt_id == *victim; });
        evicted_.push_back({*it, stats_.at(*victim), true, round_});
        variants_.erase(it);
    }
}

std::size_t Registry::total_evals() const {
    std::lock_guard lock(mu_);
    return evals_;
}

int Registry::rounds() const {
    std::lock_guard lock(mu_);
    return round_;
}

std::vector<PopulationEntry> Registry::population() const {
    std::lock_guard lock(mu_);
    return population_locked();
}

std::vector<ArchiveRecord> Registry::archive() const {
    std::lock_guard lock(mu_);
    std::vector<ArchiveRecord> out = evicted_;
    for (const auto& v : variants_) out.push_back({v, stats_.at(v.prompt_id), false, -1});
    std::sort(out.begin(), out.end(),
              [](const ArchiveRecord& a, const ArchiveRecord& b) { return a.variant.prompt_id < b.variant.prompt_id; });
    return out;
}

std::optional<PromptVariant> Registry::find(const std::string& prompt_id) const {
    std::lock_guard lock(mu_);
    for (const auto& v : variants_)
        if (v.prompt_id == prompt_id) return v;
    for (const auto& a : evicted_)
        if (a.variant.prompt_id == prompt_id) return a.variant;
    return std::nullopt;
}

VariantStats Registry::stats(const std::string& prompt_id) const {
    std::lock_guard lock(mu_);
    auto it = stats_.find(prompt_id);
    if (it == stats_.end()) throw ValidationError("unknown prompt_id " + prompt_id);
    return it->second;
}

PopulationEntry Registry::best() const {
    std::lock_guard lock(mu_);
    auto pop = population_locked();
    auto ranking = composite_ranking(pop, static_cast<std::size_t>(cfg_.min_evals));
    if (ranking.empty()) return pop.front();
    for (auto& e : pop)
        if (e.variant.prompt_id == ranking.front().prompt_id) return e;
    return pop.front();
}

double Registry::mean_population_reward() const {
    std::lock_guard lock(mu_);
    return global_mean_reward_;
}

std::vector<std::string> Registry::elite_history() const {
    std::lock_guard lock(mu_);
    return elite_history_;
}

// ---------------------------------------------------------------------------

SimulatedEvaluator::SimulatedEvaluator(const EvolutionConfig& cfg, Backends backends)
    : cfg_(cfg), backends_(std::move(backends)) {}

EvalResult SimulatedEvaluator::evaluate(const PromptVariant& v, std::uint64_t seed) {
    std::shared_ptr<const std::pair<GeneratedWorkflow, Trajectory>> base;
    {
        std::lock_guard lock(cache_mu_);
        auto it = full_cache_.find(seed);
        if (it != full_cache_.end()) base = it->second;
    }
    RunConfig rc;
    rc.k = cfg_.k;
    rc.seed = seed;
    if (!base) {
        auto g = generate_workflow(seed, cfg_.generator);
        auto full = run_full(g.workflow, g.world, *backends_.agent, rc);
        base = std::make_shared<const std::pair<GeneratedWorkflow, Trajectory>>(std::move(g), std::move(full));
        std::lock_guard lock(cache_mu_);
        full_cache_.emplace(seed, base);
    }
    const auto& g = base->first;
    auto handle = teacher_handle(backends_.compressor, v.prompt_id, v.text, cfg_.k);
    TrajectoryPair pair{g.workflow, base->second, run_compressed(g.workflow, g.world, *backends_.agent, handle, rc)};
    auto label = label_trajectory(pair, cfg_.thresholds, *backends_.embedder, *backends_.judge);

    EvalResult r;
    r.seed = seed;
    r.success = label.success;
    r.equivalence_s = label.equivalence_s;
    if (!label.per_step_ratios.empty())
        r.mean_ratio = std::accumulate(label.per_step_ratios.begin(), label.per_step_ratios.end(), 0.0) /
                       static_cast<double>(label.per_step_ratios.size());
    return r;
}

void run_worker(Registry& registry, VariantEvaluator& evaluator, const std::string& worker_id) {
    while (true) {
        auto lease = registry.request_lease(worker_id);
        if (!lease) {
            if (registry.finished()) return;
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
            continue;
        }
        auto variant = registry.find(lease->prompt_id);
        auto t0 = std::chrono::steady_clock::now();
        for (auto seed : lease->seeds) registry.post_result(lease->batch_id, evaluator.evaluate(*variant, seed));
        std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        registry.complete_lease(lease->batch_id, dt.count());
    }
}

EvolutionResult evolve(const EvolutionConfig& cfg, VariantEvaluator& evaluator, std::shared_ptr<PromptMutator> mutator,
                       Clock clock) {
    Registry registry(cfg, std::move(mutator), std::move(clock));
    if (cfg.workers == 1) {
        run_worker(registry, evaluator, "w0");
    } else {
        std::vector<std::thread> threads;
        for (int i = 0; i < cfg.workers; ++i)
            threads.emplace_back([&, i] { run_worker(registry, evaluator, "w" + std::to_string(i)); });
        for (auto& t : threads) t.join();
    }
    EvolutionResult out;
    out.best = registry.best();
    out.archive = registry.archive();
    out.total_evals = registry.total_evals();
    out.rounds = registry.rounds();
    out.mean_population_reward = registry.mean_population_reward();
    return out;
}

// ---------------------------------------------------------------------------

namespace {

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json stats_json(const VariantStats& s) {
    return {{"n_evals", s.n_evals},   {"n_success", s.n_success}, {"success_rate", s.success_rate},
            {"mean_s", opt_json(s.mean_s)}, {"mean_r", opt_json(s.mean_r)}, {"reward", s.reward}};
}

}  // namespace

std::string archive_to_jsonl(const std::vector<ArchiveRecord>& archive) {
    std::string out;
    for (const auto& a : archive) {
        json j = {{"schema_version", 1},
                  {"prompt_id", a.variant.prompt_id},
                  {"parent_id", a.variant.parent_id ? json(*a.variant.parent_id) : json(nullptr)},
                  {"created_at", a.variant.created_at},
                  {"text", a.variant.text},
                  {"status", a.evicted ? "evicted" : "active"},
                  {"evicted_at", a.evicted_at},
                  {"stats", stats_json(a.stats)}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::string archive_summary_json(const EvolutionResult& result, const EvolutionConfig& cfg) {
    json j = {{"schema_version", 1},
              {"best_prompt_id", result.best.variant.prompt_id},
              {"best_text", result.best.variant.text},
              {"best_stats", stats_json(result.best.stats)},
              {"total_evals", result.total_evals},
              {"rounds", result.rounds},
              {"archive_size", result.archive.size()},
              {"mean_population_reward", result.mean_population_reward},
              {"eval_budget", cfg.eval_budget},
              {"population_cap", cfg.population_cap},
              {"elitism", cfg.elitism},
              {"min_evals", cfg.min_evals},
              {"batch_size", cfg.batch_size},
              {"k", cfg.k},
              {"seed", cfg.seed}};
    return j.dump(2) + "\n";
}

}  // namespace paace
