#include "paace/app.hpp"
#include "paace/baselines.hpp"
#include "paace/config.hpp"
#include "paace/metrics.hpp"
#include "paace/store.hpp"
#include "paace/supervision.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <future>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace paace {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::string config_path;
    std::string run_dir = "run";
    std::vector<std::string> sets;
    bool trace = false;
};

struct Overrides {
    std::vector<std::pair<std::string, std::string>> items;
    void add(const std::string& key, const std::string& value) { items.emplace_back(key, value); }
};

AppConfig resolve(const Common& common, Overrides ov, const EnvLookup& env) {
    for (const auto& s : common.sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
        ov.add(s.substr(0, eq), s.substr(eq + 1));
    }
    if (common.trace) ov.add("trace", "true");
    return load_config(common.config_path, env, ov.items);
}

RunDirectory open_run_dir(const Common& common, const AppConfig& cfg, const std::string& command) {
    RunDirectory dir(common.run_dir);
    dir.ensure();
    write_text_file(dir.config(command), config_snapshot(cfg));
    return dir;
}

Backends backends_for(const AppConfig& cfg, const RunDirectory& dir, const EnvLookup& env) {
    std::shared_ptr<TraceLog> trace;
    if (cfg.trace) trace = std::make_shared<TraceLog>(dir.trace());
    return make_backends(cfg.backend, env, trace);
}

std::vector<GeneratedWorkflow> generate_corpus(const AppConfig& cfg) {
    std::vector<GeneratedWorkflow> out;
    out.reserve(static_cast<std::size_t>(cfg.corpus.count));
    for (int i = 0; i < cfg.corpus.count; ++i)
        out.push_back(generate_workflow(cfg.corpus.seed + static_cast<std::uint64_t>(i), cfg.corpus.generator));
    return out;
}

std::string teacher_prompt_for(const AppConfig& cfg, const RunDirectory& dir) {
    if (!cfg.run.teacher_prompt.empty()) return cfg.run.teacher_prompt;
    if (fs::exists(dir.best_prompt())) {
        auto text = read_text_file(dir.best_prompt());
        while (!text.empty() && text.back() == '\n') text.pop_back();
        if (!text.empty()) return text;
    }
    return cfg.evolution.seed_prompt;
}

/// Strategy label written to trajectories for a --strategy name.
std::string trajectory_label(const std::string& strategy) {
    return strategy == "extractive" ? "extractive-lite" : strategy;
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

// ---------------------------------------------------------------------------

int cmd_synth(const Common& common, const AppConfig& cfg, const std::string& out_path, std::ostream& out) {
    auto dir = open_run_dir(common, cfg, "synth");
    const std::string path = out_path.empty() ? dir.corpus() : out_path;
    auto corpus = generate_corpus(cfg);
    write_corpus(corpus, path);
    out << "wrote " << corpus.size() << " workflows to " << path << " (" << corpus_id_of(path) << ")\n";
    return kExitOk;
}

struct WorkflowResult {
    std::vector<TrajectoryRecord> trajectories;
    std::vector<LabelRecord> labels;
};

int cmd_run(const Common& common, const AppConfig& cfg, const std::string& corpus_arg, const EnvLookup& env,
            std::ostream& out) {
    auto dir = open_run_dir(common, cfg, "run");
    std::string corpus_path = corpus_arg.empty() ? dir.corpus() : corpus_arg;
    if (corpus_arg.empty() && !fs::exists(corpus_path)) write_corpus(generate_corpus(cfg), corpus_path);
    const auto corpus = read_corpus(corpus_path);
    const auto corpus_id = corpus_id_of(corpus_path);
    if (corpus_arg.size() && fs::absolute(corpus_path) != fs::absolute(dir.corpus()))
        fs::copy_file(corpus_path, dir.corpus(), fs::copy_options::overwrite_existing);

    auto backends = backends_for(cfg, dir, env);
    const auto prompt = teacher_prompt_for(cfg, dir);
    const auto rc = cfg.run_config();

    // Resume: what is already in the log for this corpus and k.
    std::map<std::pair<std::string, std::string>, Trajectory> done;
    if (fs::exists(dir.trajectories())) {
        repair_log_tail(dir.trajectories());
        for (auto& r : read_trajectory_log(dir.trajectories())) {
            if (r.corpus_id != corpus_id) continue;
            if (r.trajectory.mode != RunMode::full && r.trajectory.k != cfg.run.k) continue;
            done[{r.trajectory.strategy, r.trajectory.workflow_id}] = std::move(r.trajectory);
        }
    }
    if (fs::exists(dir.labels())) repair_log_tail(dir.labels());

    std::vector<std::string> compressing;
    bool want_full = false;
    for (const auto& s : cfg.run.strategies) {
        if (s == "none")
            want_full = true;
        else
            compressing.push_back(s);
    }
    std::vector<CompressorHandle> handles;
    for (const auto& s : compressing)
        handles.push_back(strategy_handle(s, cfg.baselines, backends, cfg.run.k, cfg.run.teacher_prompt_id, prompt));

    auto work = [&](const GeneratedWorkflow& g) {
        WorkflowResult res;
        const auto& wid = g.workflow.id;
        std::optional<Trajectory> full;
        if (auto it = done.find({"none", wid}); it != done.end()) full = it->second;
        bool need_any = want_full && !full;
        for (const auto& h : handles) need_any = need_any || !done.count({h.name, wid});
        if (!need_any) return res;
        if (!full) {
            full = run_full(g.workflow, g.world, *backends.agent, rc);
            res.trajectories.push_back({cfg.run_id, corpus_id, g.workflow.seed, *full});
        }
        for (std::size_t i = 0; i < compressing.size(); ++i) {
            if (done.count({handles[i].name, wid})) continue;
            TrajectoryPair pair;
            pair.workflow = g.workflow;
            pair.full = *full;
            pair.compressed = run_compressed(g.workflow, g.world, *backends.agent, handles[i], rc);
            auto label = label_trajectory(pair, cfg.thresholds, *backends.embedder, *backends.judge);
            res.trajectories.push_back({cfg.run_id, corpus_id, g.workflow.seed, pair.compressed});
            res.labels.push_back({cfg.run_id, wid, handles[i].name, label});
        }
        return res;
    };

    JsonlAppender traj_log(dir.trajectories());
    JsonlAppender label_log(dir.labels());
    std::size_t written = 0;
    const std::size_t workers = static_cast<std::size_t>(cfg.run.workers);
    for (std::size_t start = 0; start < corpus.size(); start += workers) {
        const std::size_t end = std::min(corpus.size(), start + workers);
        std::vector<std::future<WorkflowResult>> futures;
        for (std::size_t i = start; i < end; ++i)
            futures.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                         [&, i] { return work(corpus[i]); }));
        // Commit in corpus order so the logs do not depend on scheduling.
        for (auto& f : futures) {
            auto res = f.get();
            for (const auto& t : res.trajectories) traj_log.append_line(trajectory_record_line(t));
            for (const auto& l : res.labels) label_log.append_line(label_record_line(l));
            written += res.trajectories.size();
        }
    }
    out << "run " << cfg.run_id << ": " << written << " new trajectories over " << corpus.size() << " workflows ("
        << (done.empty() ? "fresh" : "resumed") << ")\n";
    return kExitOk;
}

int cmd_evolve(const Common& common, const AppConfig& cfg, const EnvLookup& env, std::ostream& out) {
    auto dir = open_run_dir(common, cfg, "evolve");
    auto backends = backends_for(cfg, dir, env);
    const auto ec = cfg.evolution_config();
    SimulatedEvaluator evaluator(ec, backends);
    auto result = evolve(ec, evaluator, backends.mutator);
    write_text_file(dir.archive(), archive_to_jsonl(result.archive));
    write_text_file(dir.archive_summary(), archive_summary_json(result, ec));
    write_text_file(dir.best_prompt(), result.best.variant.text + "\n");
    out << "evolve " << cfg.run_id << ": " << result.total_evals << " evaluations, " << result.rounds
        << " rounds, best " << result.best.variant.prompt_id << " reward " << fmt(result.best.stats.reward) << "\n";
    return kExitOk;
}

int cmd_extract(const Common& common, const AppConfig& cfg, const std::string& out_arg, std::ostream& out) {
    auto dir = open_run_dir(common, cfg, "extract");
    const std::string path = out_arg.empty() ? dir.dataset() : out_arg;
    if (!fs::exists(dir.trajectories())) throw DataError("no trajectory log in " + common.run_dir);
    auto records = read_trajectory_log(dir.trajectories());
    std::map<std::pair<std::string, std::string>, LabelRecord> labels;
    if (fs::exists(dir.labels()))
        for (auto& l : read_label_log(dir.labels())) labels[{l.strategy, l.workflow_id}] = std::move(l);

    std::map<std::pair<std::string, std::string>, TrajectoryRecord> latest;
    std::vector<std::pair<std::string, std::string>> order;
    for (auto& r : records) {
        std::pair<std::string, std::string> key{r.trajectory.strategy, r.trajectory.workflow_id};
        if (!latest.count(key)) order.push_back(key);
        latest[key] = std::move(r);
    }
    std::vector<SupervisionTuple> tuples;
    std::size_t pairs = 0;
    for (const auto& key : order) {
        const auto& rec = latest.at(key);
        const auto& want = cfg.extract.strategies;
        if (std::none_of(want.begin(), want.end(), [&](const std::string& w) { return trajectory_label(w) == key.first; }))
            continue;
        auto lit = labels.find(key);
        if (lit == labels.end()) continue;
        TrajectoryPair pair;
        pair.workflow.id = key.second;
        if (auto fit = latest.find({"none", key.second}); fit != latest.end()) pair.full = fit->second.trajectory;
        pair.compressed = rec.trajectory;
        auto t = extract_tuples(pair, lit->second.label, rec.run_id);
        tuples.insert(tuples.end(), t.begin(), t.end());
        ++pairs;
    }
    if (cfg.extract.dedup) tuples = dedup_tuples(tuples);
    auto manifest = write_dataset(tuples, path);
    out << "extract: " << manifest.tuple_count << " tuples from " << pairs << " labeled trajectories -> " << path
        << " (mean ratio " << fmt(manifest.mean_ratio) << ")\n";
    return kExitOk;
}

int cmd_eval(const Common& common, const AppConfig& cfg, const std::string& corpus_arg, std::ostream& out) {
    auto dir = open_run_dir(common, cfg, "eval");
    const std::string corpus_path = corpus_arg.empty() ? dir.corpus() : corpus_arg;
    const auto corpus = read_corpus(corpus_path);
    const auto corpus_id = corpus_id_of(corpus_path);
    std::map<std::string, const GeneratedWorkflow*> by_id;
    for (const auto& g : corpus) by_id[g.workflow.id] = &g;
    if (!fs::exists(dir.trajectories())) throw DataError("no trajectory log in " + common.run_dir);

    // Latest record per (label, workflow); labels carry k when a strategy ran with several.
    auto records = read_trajectory_log(dir.trajectories());
    std::map<std::string, std::set<int>> ks;
    for (const auto& r : records)
        if (r.corpus_id == corpus_id) ks[r.trajectory.strategy].insert(r.trajectory.k);
    std::map<std::string, std::map<std::string, TrajectoryRecord>> groups;
    std::vector<std::string> group_order;
    for (auto& r : records) {
        if (r.corpus_id != corpus_id) continue;
        std::string label = r.trajectory.strategy;
        if (ks[label].size() > 1) label += "@k" + std::to_string(r.trajectory.k);
        if (!groups.count(label)) group_order.push_back(label);
        groups[label][r.trajectory.workflow_id] = std::move(r);
    }
    if (groups.empty()) throw DataError("no trajectories for corpus " + corpus_id + " in " + common.run_dir);
    std::vector<TrajectorySet> sets;
    for (const auto& label : group_order) {
        TrajectorySet set;
        set.strategy = label;
        set.corpus_id = corpus_id;
        for (const auto& [wid, rec] : groups.at(label)) {
            auto it = by_id.find(wid);
            if (it == by_id.end()) throw DataError("trajectory for unknown workflow " + wid);
            const auto& w = it->second->workflow;
            set.runs.push_back({rec.trajectory, w.gold_answer.value_or(""), static_cast<int>(w.plan.size())});
        }
        sets.push_back(std::move(set));
    }
    auto report = build_report(sets, config_digest(cfg));
    write_text_file(dir.report_text(), render_report(report));
    write_text_file(dir.report_json(), report_to_json(report));
    out << render_report(report);
    return kExitOk;
}

Plan plan_from_file(const std::string& path, int& current_step) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw DataError("plan file " + path + ": " + e.what());
    }
    try {
        const json* steps = &j;
        if (j.is_object()) {
            steps = &j.at("steps");
            if (j.contains("current_step") && current_step <= 0) current_step = j["current_step"].get<int>();
        }
        std::vector<TaskStep> out;
        int next_id = 1;
        for (const auto& s : *steps) {
            TaskStep t;
            if (s.is_string()) {
                t.id = next_id;
                t.instruction = s.get<std::string>();
            } else {
                t.id = s.value("id", next_id);
                t.instruction = s.at("instruction").get<std::string>();
                for (int d : s.value("depends_on", std::vector<int>{})) t.depends_on.insert(d);
                if (s.contains("kind")) t.kind = step_kind_from_string(s["kind"].get<std::string>());
            }
            next_id = t.id + 1;
            out.push_back(std::move(t));
        }
        return Plan(std::move(out));
    } catch (const json::exception& e) {
        throw DataError("plan file " + path + ": " + e.what());
    } catch (const ValidationError& e) {
        throw DataError("plan file " + path + ": " + e.what());
    }
}

int cmd_compress(const Common& common, const AppConfig& cfg, const std::string& strategy, const std::string& context_path,
                 const std::string& plan_path, int step, const EnvLookup& env, std::ostream& out, std::ostream& err) {
    RunDirectory dir(common.run_dir);
    if (strategy == "none") throw ConfigError("compress needs a compressing strategy");
    int current = step;
    const auto plan = plan_from_file(plan_path, current);
    if (current <= 0) current = 1;
    if (current > static_cast<int>(plan.size()))
        throw DataError("current step " + std::to_string(current) + " is outside the plan");
    auto context = parse_context(read_text_file(context_path));
    if (context.plan_text.empty()) context.plan_text = plan.description();
    context.step = current;

    std::shared_ptr<TraceLog> trace;
    if (cfg.trace) {
        dir.ensure();
        trace = std::make_shared<TraceLog>(dir.trace());
    }
    auto backends = make_backends(cfg.backend, env, trace);
    auto handle = strategy_handle(strategy, cfg.baselines, backends, cfg.run.k, cfg.run.teacher_prompt_id,
                                  teacher_prompt_for(cfg, dir));
    const auto slice = plan_slice(plan, current, cfg.run.k);
    const auto original = render_context(context);
    auto result = handle.impl->compress(context, slice);
    std::string compressed = result ? render_context(*result) : std::string();
    if (word_count(compressed) == 0) {
        err << "compression failed; emitting the original context\n";
        out << original;
        err << "ratio=1.0000 original_tokens=" << word_count(original) << " compressed_tokens=" << word_count(original)
            << "\n";
        return kExitOk;
    }
    auto rec = make_record(current, cfg.run.k, slice, original, compressed, handle.prompt_id);
    out << compressed;
    err << "ratio=" << fmt(rec.ratio) << " original_tokens=" << rec.original_tokens
        << " compressed_tokens=" << rec.compressed_tokens << "\n";
    return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app{"Plan-aware context compression engine"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--run-dir", common.run_dir, "Run directory");
    app.add_option("--set", common.sets, "Override a config key (key=value)");
    app.add_flag("--trace", common.trace, "Log backend requests and responses (redacted) to trace.jsonl");

    Overrides ov;
    std::string out_path;
    std::string corpus_path;
    std::string strategies;
    std::string context_path;
    std::string plan_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> count;
    std::optional<int> k;
    std::optional<int> workers;
    std::optional<int> budget;
    int step = 0;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic workflow corpus");
    synth->add_option("--seed", seed, "First workflow seed");
    synth->add_option("--count", count, "Number of workflows");
    synth->add_option("--out", out_path, "Corpus path (default: <run-dir>/corpus.jsonl)");

    auto* run = app.add_subcommand("run", "Execute strategies over a corpus");
    run->add_option("--corpus", corpus_path, "Corpus file (default: <run-dir>/corpus.jsonl, generated if absent)");
    run->add_option("--strategy", strategies, "Comma-separated strategies");
    run->add_option("--k", k, "Plan lookahead");
    run->add_option("--workers", workers, "Parallel workflows");
    run->add_option("--seed", seed, "First workflow seed when generating");
    run->add_option("--count", count, "Workflows when generating");

    auto* evolve_cmd = app.add_subcommand("evolve", "Evolve the teacher compression prompt");
    evolve_cmd->add_option("--budget", budget, "Evaluation budget");
    evolve_cmd->add_option("--workers", workers, "Worker threads");
    evolve_cmd->add_option("--k", k, "Plan lookahead");

    auto* extract = app.add_subcommand("extract", "Build the supervision dataset from labeled runs");
    extract->add_option("--out", out_path, "Dataset path (default: <run-dir>/dataset.jsonl)");
    extract->add_option("--strategy", strategies, "Comma-separated source strategies");

    auto* eval = app.add_subcommand("eval", "Build metric reports from the run directory");
    eval->add_option("--corpus", corpus_path, "Corpus file (default: <run-dir>/corpus.jsonl)");

    auto* compress = app.add_subcommand("compress", "Compress one context for the upcoming plan slice");
    compress->add_option("--k", k, "Plan lookahead");
    compress->add_option("--strategy", strategies, "Compressing strategy")->required();
    compress->add_option("--context", context_path, "Rendered context file")->required()->check(CLI::ExistingFile);
    compress->add_option("--plan", plan_path, "Plan JSON file")->required()->check(CLI::ExistingFile);
    compress->add_option("--step", step, "Current task id (default: plan's current_step, else 1)");

    std::vector<std::string> argv;
    for (auto it = args.rbegin(); it != args.rend(); ++it) argv.push_back(*it);
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (seed) ov.add("corpus.seed", std::to_string(*seed));
        if (count) ov.add("corpus.count", std::to_string(*count));
        if (k) ov.add("run.k", std::to_string(*k));
        if (budget) ov.add("evolution.eval_budget", std::to_string(*budget));
        if (workers) ov.add(evolve_cmd->parsed() ? "evolution.workers" : "run.workers", std::to_string(*workers));
        if (!strategies.empty() && run->parsed()) ov.add("run.strategies", strategies);
        if (!strategies.empty() && extract->parsed()) ov.add("extract.strategies", strategies);
        const AppConfig cfg = resolve(common, ov, env);

        if (synth->parsed()) return cmd_synth(common, cfg, out_path, out);
        if (run->parsed()) return cmd_run(common, cfg, corpus_path, env, out);
        if (evolve_cmd->parsed()) return cmd_evolve(common, cfg, env, out);
        if (extract->parsed()) return cmd_extract(common, cfg, out_path, out);
        if (eval->parsed()) return cmd_eval(common, cfg, corpus_path, out);
        if (compress->parsed()) {
            const auto& names = strategy_names();
            if (std::find(names.begin(), names.end(), strategies) == names.end())
                throw ConfigError("unknown strategy: " + strategies);
            return cmd_compress(common, cfg, strategies, context_path, plan_path, step, env, out, err);
        }
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ValidationError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TransportError& e) {
        err << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const ProtocolError& e) {
        err << "backend protocol error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    }
}

}  // namespace paace
