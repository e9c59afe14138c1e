#include "paace/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace paace {

using nlohmann::json;

namespace {

json generator_json(const GeneratorConfig& g) {
    json mix = json::object();
    for (const auto& [kind, w] : g.domain_mix) mix[std::string(to_string(kind))] = w;
    return {{"min_steps", g.min_steps},     {"max_steps", g.max_steps}, {"noise_level", g.noise_level},
            {"distractor_count", g.distractor_count}, {"domain_mix", mix}, {"max_gap", g.max_gap},
            {"exact_gap", g.exact_gap}};
}

GeneratorConfig generator_from(const json& j) {
    GeneratorConfig g;
    g.min_steps = j.at("min_steps").get<int>();
    g.max_steps = j.at("max_steps").get<int>();
    g.noise_level = j.at("noise_level").get<double>();
    g.distractor_count = j.at("distractor_count").get<int>();
    g.domain_mix.clear();
    for (const auto& [name, w] : j.at("domain_mix").items()) g.domain_mix[step_kind_from_string(name)] = w.get<double>();
    g.max_gap = j.at("max_gap").get<int>();
    g.exact_gap = j.at("exact_gap").get<int>();
    return g;
}

std::string type_name(const json& j) {
    if (j.is_boolean()) return "boolean";
    if (j.is_number()) return "number";
    if (j.is_string()) return "string";
    if (j.is_array()) return "array";
    if (j.is_object()) return "object";
    return "null";
}

bool compatible(const json& base, const json& v) {
    if (base.is_number_integer()) return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()));
    if (base.is_number()) return v.is_number();
    if (base.is_array()) return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); });
    return type_name(base) == type_name(v);
}

void merge_strict(json& base, const json& overlay, const std::string& prefix) {
    if (!overlay.is_object()) throw ConfigError("config " + (prefix.empty() ? "root" : prefix) + ": expected an object");
    for (const auto& [key, value] : overlay.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!base.contains(key)) throw ConfigError("unknown config key: " + path);
        json& slot = base[key];
        if (slot.is_object()) {
            merge_strict(slot, value, path);
        } else {
            if (!compatible(slot, value))
                throw ConfigError("config key " + path + " expects a " + type_name(slot) + ", got " + type_name(value));
            slot = slot.is_number_integer() && value.is_number_float() ? json(static_cast<long long>(value.get<double>()))
                                                                      : value;
        }
    }
}

void collect_leaves(const json& j, const std::string& prefix, std::vector<std::string>& out) {
    for (const auto& [key, value] : j.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object())
            collect_leaves(value, path, out);
        else
            out.push_back(path);
    }
}

json* find_leaf(json& root, const std::string& path) {
    json* cur = &root;
    std::size_t start = 0;
    while (true) {
        auto dot = path.find('.', start);
        std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!cur->is_object() || !cur->contains(part)) return nullptr;
        cur = &(*cur)[part];
        if (dot == std::string::npos) return cur;
        start = dot + 1;
    }
}

/// Parses override text according to the type of the value it replaces.
json parse_raw(const json& current, const std::string& raw, const std::string& where) {
    if (current.is_boolean()) {
        std::string v = raw;
        std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError(where + ": expected a boolean, got '" + raw + "'");
    }
    if (current.is_number_integer()) {
        try {
            std::size_t used = 0;
            long long v = std::stoll(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(where + ": expected an integer, got '" + raw + "'");
        }
    }
    if (current.is_number()) {
        try {
            std::size_t used = 0;
            double v = std::stod(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(where + ": expected a number, got '" + raw + "'");
        }
    }
    if (current.is_array()) {
        json arr = json::array();
        std::size_t start = 0;
        while (start <= raw.size()) {
            auto comma = raw.find(',', start);
            std::string item = raw.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            auto b = item.find_first_not_of(" \t");
            auto e = item.find_last_not_of(" \t");
            if (b != std::string::npos) arr.push_back(item.substr(b, e - b + 1));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return arr;
    }
    return raw;
}

void apply_raw(json& root, const std::string& path, const std::string& raw, const std::string& source) {
    json* leaf = find_leaf(root, path);
    if (!leaf || leaf->is_object()) throw ConfigError("unknown config key: " + path + " (from " + source + ")");
    *leaf = parse_raw(*leaf, raw, source + " " + path);
}

}  // namespace

void AppConfig::validate() const {
    if (corpus.count < 1) throw ConfigError("corpus.count must be >= 1");
    try {
        corpus.generator.validate();
        thresholds.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    backend.validate();
    baselines.validate();
    if (run.k < 1) throw ConfigError("run.k must be >= 1");
    if (run.max_steps < 0) throw ConfigError("run.max_steps must be >= 0");
    if (run.token_budget == 0) throw ConfigError("run.token_budget must be > 0");
    if (run.workers < 1) throw ConfigError("run.workers must be >= 1");
    if (run.strategies.empty()) throw ConfigError("run.strategies must not be empty");
    const auto& names = strategy_names();
    for (const auto& s : run.strategies)
        if (std::find(names.begin(), names.end(), s) == names.end()) throw ConfigError("unknown strategy: " + s);
    for (const auto& s : extract.strategies)
        if (std::find(names.begin(), names.end(), s) == names.end() || s == "none")
            throw ConfigError("extract.strategies: not a compressing strategy: " + s);
    evolution_config().validate();
}

EvolutionConfig AppConfig::evolution_config() const {
    EvolutionConfig e = evolution;
    e.generator = corpus.generator;
    e.thresholds = thresholds;
    e.k = run.k;
    return e;
}

RunConfig AppConfig::run_config() const {
    RunConfig r;
    r.k = run.k;
    r.max_steps = run.max_steps;
    r.token_budget = run.token_budget;
    r.seed = corpus.seed;
    return r;
}

json config_to_json(const AppConfig& c) {
    const auto& b = c.backend;
    const auto& e = c.evolution;
    return {
        {"run_id", c.run_id},
        {"trace", c.trace},
        {"corpus", {{"seed", c.corpus.seed}, {"count", c.corpus.count}, {"generator", generator_json(c.corpus.generator)}}},
        {"backend",
         {{"kind", b.kind},
          {"endpoint", b.endpoint},
          {"model", b.model},
          {"embedding_model", b.embedding_model},
          {"judge_endpoint", b.judge_endpoint},
          {"api_key_env", b.api_key_env},
          {"student_endpoint", b.student_endpoint},
          {"student_model", b.student_model},
          {"timeout_ms", b.timeout_ms},
          {"retries", b.retries},
          {"max_concurrency", b.max_concurrency}}},
        {"thresholds",
         {{"theta", c.thresholds.theta},
          {"equivalence_filter", c.thresholds.equivalence_filter},
          {"judge_filter", c.thresholds.judge_filter}}},
        {"run",
         {{"k", c.run.k},
          {"max_steps", c.run.max_steps},
          {"token_budget", c.run.token_budget},
          {"strategies", c.run.strategies},
          {"teacher_prompt", c.run.teacher_prompt},
          {"teacher_prompt_id", c.run.teacher_prompt_id},
          {"workers", c.run.workers}}},
        {"baselines",
         {{"fifo_turns", c.baselines.fifo_turns},
          {"retrieval_top_m", c.baselines.retrieval_top_m},
          {"prompting_instruction", c.baselines.prompting_instruction},
          {"extractive_keep_fraction", c.baselines.extractive_keep_fraction}}},
        {"evolution",
         {{"seed_prompt", e.seed_prompt},
          {"population_cap", e.population_cap},
          {"elitism", e.elitism},
          {"min_evals", e.min_evals},
          {"batch_size", e.batch_size},
          {"top_q", e.top_q},
          {"children_per_round", e.children_per_round},
          {"eval_budget", e.eval_budget},
          {"workers", e.workers},
          {"seed_pool_size", e.seed_pool_size},
          {"resample", e.resample},
          {"lease_timeout_factor", e.lease_timeout_factor},
          {"initial_batch_seconds", e.initial_batch_seconds},
          {"seed", e.seed}}},
        {"extract", {{"strategies", c.extract.strategies}, {"dedup", c.extract.dedup}}},
    };
}

AppConfig config_from_json(const json& overlay) {
    json j = config_to_json(AppConfig{});
    merge_strict(j, overlay, "");
    AppConfig c;
    try {
        c.run_id = j.at("run_id").get<std::string>();
        c.trace = j.at("trace").get<bool>();
        const auto& cj = j.at("corpus");
        c.corpus.seed = cj.at("seed").get<std::uint64_t>();
        c.corpus.count = cj.at("count").get<int>();
        c.corpus.generator = generator_from(cj.at("generator"));
        const auto& bj = j.at("backend");
        auto& b = c.backend;
        b.kind = bj.at("kind").get<std::string>();
        b.endpoint = bj.at("endpoint").get<std::string>();
        b.model = bj.at("model").get<std::string>();
        b.embedding_model = bj.at("embedding_model").get<std::string>();
        b.judge_endpoint = bj.at("judge_endpoint").get<std::string>();
        b.api_key_env = bj.at("api_key_env").get<std::string>();
        b.student_endpoint = bj.at("student_endpoint").get<std::string>();
        b.student_model = bj.at("student_model").get<std::string>();
        b.timeout_ms = bj.at("timeout_ms").get<int>();
        b.retries = bj.at("retries").get<int>();
        b.max_concurrency = bj.at("max_concurrency").get<int>();
        const auto& tj = j.at("thresholds");
        c.thresholds.theta = tj.at("theta").get<double>();
        c.thresholds.equivalence_filter = tj.at("equivalence_filter").get<bool>();
        c.thresholds.judge_filter = tj.at("judge_filter").get<bool>();
        const auto& rj = j.at("run");
        c.run.k = rj.at("k").get<int>();
        c.run.max_steps = rj.at("max_steps").get<int>();
        c.run.token_budget = rj.at("token_budget").get<std::size_t>();
        c.run.strategies = rj.at("strategies").get<std::vector<std::string>>();
        c.run.teacher_prompt = rj.at("teacher_prompt").get<std::string>();
        c.run.teacher_prompt_id = rj.at("teacher_prompt_id").get<std::string>();
        c.run.workers = rj.at("workers").get<int>();
        const auto& lj = j.at("baselines");
        c.baselines.fifo_turns = lj.at("fifo_turns").get<int>();
        c.baselines.retrieval_top_m = lj.at("retrieval_top_m").get<int>();
        c.baselines.prompting_instruction = lj.at("prompting_instruction").get<std::string>();
        c.baselines.extractive_keep_fraction = lj.at("extractive_keep_fraction").get<double>();
        const auto& ej = j.at("evolution");
        auto& e = c.evolution;
        e.seed_prompt = ej.at("seed_prompt").get<std::string>();
        e.population_cap = ej.at("population_cap").get<int>();
        e.elitism = ej.at("elitism").get<int>();
        e.min_evals = ej.at("min_evals").get<int>();
        e.batch_size = ej.at("batch_size").get<int>();
        e.top_q = ej.at("top_q").get<int>();
        e.children_per_round = ej.at("children_per_round").get<int>();
        e.eval_budget = ej.at("eval_budget").get<int>();
        e.workers = ej.at("workers").get<int>();
        e.seed_pool_size = ej.at("seed_pool_size").get<int>();
        e.resample = ej.at("resample").get<bool>();
        e.lease_timeout_factor = ej.at("lease_timeout_factor").get<double>();
        e.initial_batch_seconds = ej.at("initial_batch_seconds").get<double>();
        e.seed = ej.at("seed").get<std::uint64_t>();
        const auto& xj = j.at("extract");
        c.extract.strategies = xj.at("strategies").get<std::vector<std::string>>();
        c.extract.dedup = xj.at("dedup").get<bool>();
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    } catch (const ValidationError& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    }
    return c;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    collect_leaves(config_to_json(AppConfig{}), "", out);
    return out;
}

std::string env_var_for(const std::string& key_path) {
    std::string out = "PAACE_";
    for (char ch : key_path) out += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

AppConfig load_config(const std::string& path, const EnvLookup& env,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
    json j = config_to_json(AppConfig{});
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file " + path);
        json file;
        try {
            file = json::parse(in);
        } catch (const json::exception& ex) {
            throw ConfigError("config file " + path + ": " + ex.what());
        }
        merge_strict(j, file, "");
    }
    for (const auto& key : config_keys()) {
        auto name = env_var_for(key);
        if (auto v = env(name)) apply_raw(j, key, *v, "environment variable " + name + " ->");
    }
    for (const auto& [key, raw] : overrides) apply_raw(j, key, raw, "flag ->");
    AppConfig c = config_from_json(j);
    c.validate();
    if (c.run_id.empty()) c.run_id = "run-" + config_digest(c).substr(0, 12);
    return c;
}

std::string config_snapshot(const AppConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

std::string config_digest(const AppConfig& cfg) {
    AppConfig c = cfg;
    c.run_id.clear();
    return hex_digest(config_to_json(c).dump());
}

}  // namespace paace
