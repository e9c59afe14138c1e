#pragma once

#include "paace/backends.hpp"
#include "paace/executor.hpp"
#include "paace/scoring.hpp"
#include "paace/synth.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace paace {

struct PromptVariant {
    std::string prompt_id;
    std::string text;
    std::optional<std::string> parent_id;
    int created_at = 0;  // selection round that produced it

    bool operator==(const PromptVariant&) const = default;
};

struct EvalResult {
    std::uint64_t seed = 0;
    bool success = false;
    double equivalence_s = 0.0;
    double mean_ratio = 0.0;
};

/// Counters plus the multisets of s and r over successes. Means are sums over
/// the sorted multiset so the final stats do not depend on arrival order.
struct VariantStats {
    std::size_t n_evals = 0;
    std::size_t n_success = 0;
    double success_rate = 0.0;
    std::optional<double> mean_s;
    std::optional<double> mean_r;
    double reward = 0.0;
    std::vector<double> s_values;
    std::vector<double> r_values;

    void add(const EvalResult& r);
    bool operator==(const VariantStats&) const = default;
};

/// success_rate * mean_s * (1 - mean_r), 0 when nothing succeeded.
double reward(const VariantStats& stats);

struct RankedVariant {
    std::string prompt_id;
    int rank_reward = 0;
    int rank_success = 0;
    int rank_s = 0;
    int rank_r = 0;
    double composite = 0.0;
};

struct PopulationEntry {
    PromptVariant variant;
    VariantStats stats;
};

/// Competition ranks (1 + number strictly better) per metric; undefined means
/// share the worst rank. Composite = mean of the four ranks; sorted by
/// composite then prompt_id. Variants below min_evals are left out.
std::vector<RankedVariant> composite_ranking(const std::vector<PopulationEntry>& population, std::size_t min_evals);

// ---------------------------------------------------------------------------

struct EvolutionConfig {
    std::string seed_prompt =
        "Compress the agent context for the upcoming tasks. Keep facts the next task needs and drop noise.";
    int population_cap = 32;
    int elitism = 4;
    int min_evals = 5;
    int batch_size = 4;
    int top_q = 2;
    int children_per_round = 4;
    int eval_budget = 200;
    int workers = 1;
    int seed_pool_size = 64;
    bool resample = false;
    double lease_timeout_factor = 10.0;
    double initial_batch_seconds = 5.0;
    std::uint64_t seed = 0;
    int k = 2;
    GeneratorConfig generator;
    Thresholds thresholds;

    void validate() const;
};

struct Lease {
    std::uint64_t batch_id = 0;
    std::string worker_id;
    std::string prompt_id;
    std::vector<std::uint64_t> seeds;
    double issued_at = 0.0;
    double deadline = 0.0;
};

using Clock = std::function<double()>;  // seconds
Clock steady_clock_seconds();

struct ArchiveRecord {
    PromptVariant variant;
    VariantStats stats;
    bool evicted = false;
    int evicted_at = -1;
};

/// Serializes every stat update and lease grant.
class Registry {
public:
    Registry(EvolutionConfig cfg, std::shared_ptr<PromptMutator> mutator, Clock clock = steady_clock_seconds());

    /// Next batch for this worker, or nullopt when the budget is spent.
    std::optional<Lease> request_lease(const std::string& worker_id);

    /// Returns false when (batch, seed) was already recorded or the batch is unknown.
    bool post_result(std::uint64_t batch_id, const EvalResult& result);

    void complete_lease(std::uint64_t batch_id, double runtime_seconds);

    /// Budget spent and nothing in flight.
    bool finished() const;

    std::size_t total_evals() const;
    int rounds() const;
    std::vector<PopulationEntry> population() const;
    std::vector<ArchiveRecord> archive() const;
    std::optional<PromptVariant> find(const std::string& prompt_id) const;
    VariantStats stats(const std::string& prompt_id) const;

    /// Highest-ranked variant (seed prompt when nothing is ranked yet).
    PopulationEntry best() const;
    double mean_population_reward() const;

    /// Best composite variant before each selection round (index = round).
    std::vector<std::string> elite_history() const;

    /// Forces one selection round (used by tests).
    void select_now();

private:
    struct Active {
        Lease lease;
        std::vector<std::uint64_t> pending;
    };

    EvolutionConfig cfg_;
    std::shared_ptr<PromptMutator> mutator_;
    Clock clock_;
    mutable std::mutex mu_;

    std::vector<PromptVariant> variants_;  // population, creation order
    std::map<std::string, VariantStats> stats_;
    std::vector<ArchiveRecord> evicted_;
    std::map<std::string, int> batches_issued_;
    std::map<std::string, int> in_flight_evals_;
    std::map<std::uint64_t, Active> active_;
    std::map<std::uint64_t, std::vector<std::uint64_t>> done_seeds_;
    std::vector<double> runtimes_;
    std::vector<std::string> elite_history_;
    std::uint64_t next_batch_ = 1;
    int next_variant_ = 0;
    int round_ = 0;
    std::size_t evals_ = 0;
    std::size_t reserved_ = 0;  // posted + in flight
    double global_mean_reward_ = 0.0;

    std::string add_variant(std::string text, std::optional<std::string> parent);
    std::vector<PopulationEntry> population_locked() const;
    std::optional<Lease> issue(const std::string& worker_id, const std::string& prompt_id, double now);
    void select_locked();
    std::vector<std::uint64_t> seeds_for(const std::string& prompt_id, int batch_index) const;
    double lease_window() const;
    void recompute_global();
};

/// Runs one workflow seed under a prompt variant and labels the pair.
class VariantEvaluator {
public:
    virtual ~VariantEvaluator() = default;
    virtual EvalResult evaluate(const PromptVariant& v, std::uint64_t seed) = 0;
};

/// Mock-backed evaluator: full run (cached per seed) vs teacher-compressed run.
class SimulatedEvaluator final : public VariantEvaluator {
public:
    SimulatedEvaluator(const EvolutionConfig& cfg, Backends backends);
    EvalResult evaluate(const PromptVariant& v, std::uint64_t seed) override;

private:
    EvolutionConfig cfg_;
    Backends backends_;
    std::mutex cache_mu_;
    std::map<std::uint64_t, std::shared_ptr<const std::pair<GeneratedWorkflow, Trajectory>>> full_cache_;
};

struct EvolutionResult {
    PopulationEntry best;
    std::vector<ArchiveRecord> archive;
    std::size_t total_evals = 0;
    int rounds = 0;
    double mean_population_reward = 0.0;
};

/// Steady-state loop with cfg.workers threads (the calling thread when 1).
EvolutionResult evolve(const EvolutionConfig& cfg, VariantEvaluator& evaluator,
                       std::shared_ptr<PromptMutator> mutator, Clock clock = steady_clock_seconds());

/// Worker body: lease, evaluate, post, complete, until the registry is done.
void run_worker(Registry& registry, VariantEvaluator& evaluator, const std::string& worker_id);

std::string archive_to_jsonl(const std::vector<ArchiveRecord>& archive);
std::string archive_summary_json(const EvolutionResult& result, const EvolutionConfig& cfg);

}  // namespace paace
