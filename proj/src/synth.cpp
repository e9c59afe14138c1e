#include "paace/synth.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <numeric>

namespace paace {

long long Rng::uniform(long long lo, long long hi) {
    if (hi <= lo) return lo;
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<long long>(engine_() % span);
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::weighted(const std::vector<double>& weights) {
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double x = unit() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        if (x < weights[i]) return i;
        x -= weights[i];
    }
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return i;
    return 0;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// ---------------------------------------------------------------------------

namespace {

std::optional<long long> parse_int(std::string_view s) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string arg(const ToolCall& call, const std::string& name) {
    auto it = call.arguments.find(name);
    return it == call.arguments.end() ? std::string() : it->second;
}

ToolResult result(std::string payload) {
    ToolResult r;
    r.tokens = word_count(payload);
    r.payload = std::move(payload);
    return r;
}

std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
            cur += c;
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace

const std::vector<std::string>& supported_tool_kinds() {
    static const std::vector<std::string> kinds = {"lookup",    "search",      "read_file", "write_file",
                                                   "table_sum", "table_filter", "extract"};
    return kinds;
}

bool is_tool_kind(std::string_view kind) {
    const auto& k = supported_tool_kinds();
    return std::find(k.begin(), k.end(), kind) != k.end();
}

std::optional<std::string> extract_field(std::string_view text, std::string_view field) {
    std::string needle = std::string(field) + ":";
    auto words = split_words(text);
    for (std::size_t i = 0; i + 1 < words.size(); ++i) {
        if (words[i] != needle) continue;
        std::string v = words[i + 1];
        while (!v.empty() && (v.back() == '.' || v.back() == ',' || v.back() == ';')) v.pop_back();
        return v;
    }
    return std::nullopt;
}

ToolOutcome apply_tool(const WorldState& world, const ToolCall& call) {
    const auto& kind = call.kind;
    if (kind == "lookup") {
        auto key = arg(call, "key");
        auto it = world.kv.find(key);
        return {result(it == world.kv.end() ? "NOT_FOUND:" + key : it->second), std::nullopt};
    }
    if (kind == "search") {
        auto query = arg(call, "query");
        for (const auto& [id, text] : world.documents) {
            auto words = word_tokens(text);
            if (std::find(words.begin(), words.end(), query) != words.end())
                return {result(id + " | " + text), std::nullopt};
        }
        return {result("NOT_FOUND:" + query), std::nullopt};
    }
    if (kind == "read_file") {
        auto path = arg(call, "path");
        auto it = world.files.find(path);
        return {result(it == world.files.end() ? "NOT_FOUND:" + path : it->second), std::nullopt};
    }
    if (kind == "write_file") {
        WorldState next = world;
        next.files[arg(call, "path")] = arg(call, "text");
        return {result("OK"), std::move(next)};
    }
    if (kind == "table_sum" || kind == "table_filter") {
        auto table = arg(call, "table");
        auto col = arg(call, "col");
        auto it = world.tables.find(table);
        if (it == world.tables.end()) return {result("NOT_FOUND:" + table), std::nullopt};
        std::optional<long long> threshold;
        if (kind == "table_filter") {
            threshold = parse_int(arg(call, "gt"));
            if (!threshold) return {result("BAD_ARGUMENT:gt"), std::nullopt};
        }
        long long acc = 0;
        for (const auto& row : it->second) {
            auto cell = row.find(col);
            if (cell == row.end()) return {result("NOT_FOUND:" + col), std::nullopt};
            if (threshold)
                acc += cell->second > *threshold ? 1 : 0;
            else
                acc += cell->second;
        }
        return {result(std::to_string(acc)), std::nullopt};
    }
    if (kind == "extract") {
        auto field = arg(call, "field");
        auto v = extract_field(arg(call, "text"), field);
        return {result(v ? *v : "NOT_FOUND:" + field), std::nullopt};
    }
    throw ValidationError("unsupported tool kind: " + kind);
}

std::string format_tool_call(const ToolCall& call) {
    std::string out = "CALL " + call.kind;
    for (const auto& [name, value] : call.arguments) {
        out += ' ';
        out += name;
        out += '=';
        bool quote = value.empty() || value.find_first_of(" \t\"\\") != std::string::npos;
        if (!quote) {
            out += value;
            continue;
        }
        out += '"';
        for (char c : value) {
            if (c == '"' || c == '\\') out += '\\';
            out += c;
        }
        out += '"';
    }
    return out;
}

std::optional<ToolCall> parse_tool_call(std::string_view line) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    if (line.rfind("CALL ", 0) != 0) return std::nullopt;
    line.remove_prefix(5);
    ToolCall call;
    std::size_t i = 0;
    auto skip_ws = [&] {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    };
    skip_ws();
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) call.kind += line[i++];
    if (call.kind.empty()) return std::nullopt;
    while (true) {
        skip_ws();
        if (i >= line.size()) break;
        std::string name;
        while (i < line.size() && line[i] != '=' && !std::isspace(static_cast<unsigned char>(line[i])))
            name += line[i++];
        if (i >= line.size() || line[i] != '=' || name.empty()) return std::nullopt;
        ++i;
        std::string value;
        if (i < line.size() && line[i] == '"') {
            ++i;
            bool closed = false;
            while (i < line.size()) {
                char c = line[i++];
                if (c == '\\' && i < line.size()) {
                    value += line[i++];
                } else if (c == '"') {
                    closed = true;
                    break;
                } else {
                    value += c;
                }
            }
            if (!closed) return std::nullopt;
        } else {
            while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) value += line[i++];
        }
        call.arguments[name] = std::move(value);
    }
    return call;
}

// ---------------------------------------------------------------------------

Instruction parse_instruction(std::string_view text) {
    Instruction ins;
    auto words = split_words(text);
    if (words.empty()) throw ValidationError("empty instruction");
    std::size_t end = words.size();
    if (end >= 3 && words[end - 2] == "->") {
        ins.result = words[end - 1];
        end -= 2;
    }
    ins.verb = words[0];
    std::size_t i = 1;
    if (is_compute_verb(ins.verb) && i < end) ins.op = words[i++];
    for (; i < end; ++i) {
        const auto& w = words[i];
        auto eq = w.find('=');
        if (eq != std::string::npos && eq > 0)
            ins.named[w.substr(0, eq)] = w.substr(eq + 1);
        else
            ins.operands.push_back(w);
    }
    return ins;
}

std::string_view instruction_of(std::string_view plan_line) {
    std::string_view instr = plan_line;
    if (!instr.empty() && instr.front() == '[') {
        auto close = instr.find("] ");
        if (close != std::string_view::npos) instr = instr.substr(close + 2);
    }
    auto after = instr.rfind(" (after ");
    if (after != std::string_view::npos && instr.back() == ')') instr = instr.substr(0, after);
    return instr;
}

std::vector<std::string> required_names(std::string_view plan_line) {
    auto instr = instruction_of(plan_line);
    auto names = referenced_names(instr);
    if (split_words(instr).empty()) return names;
    auto ins = parse_instruction(instr);
    if (ins.verb == "lookup" && ins.named.empty() && ins.operands.size() == 1 && ins.operands.front()[0] != '$' &&
        std::find(names.begin(), names.end(), ins.operands.front()) == names.end())
        names.push_back(ins.operands.front());
    return names;
}

bool is_compute_verb(std::string_view verb) {
    return verb == "compute" || verb == "aggregate" || verb == "answer";
}

std::optional<std::string> evaluate_op(std::string_view op, const std::vector<std::string>& values) {
    if (op == "collect") return join(values, " ");
    std::vector<long long> nums;
    for (const auto& v : values) {
        auto n = parse_int(v);
        if (!n) return std::nullopt;
        nums.push_back(*n);
    }
    if (nums.empty()) return std::nullopt;
    long long acc = nums.front();
    for (std::size_t i = 1; i < nums.size(); ++i) {
        if (op == "add" || op == "sum")
            acc += nums[i];
        else if (op == "sub")
            acc -= nums[i];
        else if (op == "max")
            acc = std::max(acc, nums[i]);
        else if (op == "min")
            acc = std::min(acc, nums[i]);
        else
            return std::nullopt;
    }
    if (op != "add" && op != "sum" && op != "sub" && op != "max" && op != "min") return std::nullopt;
    return std::to_string(acc);
}

// ---------------------------------------------------------------------------
// Generator

const std::string kDefaultSystemPrompt =
    "You are a workflow agent. Execute the current task using only facts visible in context. "
    "Emit a CALL line for tool tasks.";

void GeneratorConfig::validate() const {
    if (min_steps < 1) throw ValidationError("generator: min_steps must be >= 1");
    if (min_steps > max_steps) throw ValidationError("generator: min_steps must be <= max_steps");
    if (noise_level < 0.0 || noise_level > 1.0) throw ValidationError("generator: noise_level must be in [0,1]");
    if (distractor_count < 0) throw ValidationError("generator: distractor_count must be >= 0");
    double total = 0.0;
    for (const auto& [kind, w] : domain_mix) {
        if (w < 0.0) throw ValidationError("generator: domain_mix weights must be nonnegative");
        if (kind == StepKind::answer) throw ValidationError("generator: answer is not a mixable kind");
        total += w;
    }
    if (total <= 0.0) throw ValidationError("generator: domain_mix weights must sum to > 0");
    if (max_gap < 1) throw ValidationError("generator: max_gap must be >= 1");
    if (exact_gap < 0) throw ValidationError("generator: exact_gap must be >= 0");
    if (exact_gap == 0 && min_steps < 3) throw ValidationError("generator: min_steps must be >= 3");
    if (exact_gap > 0 && exact_gap >= min_steps)
        throw ValidationError("generator: exact_gap must be smaller than min_steps");
}

namespace {

const std::vector<std::string> kTopics = {
    "amber",  "basalt", "cedar",  "dune",   "ember",  "fjord",  "garnet", "harbor",
    "indigo", "juniper", "kelp",  "lagoon", "marble", "nectar", "onyx",   "prairie",
    "quartz", "raven",  "sierra", "tundra", "umber",  "violet", "willow", "yarrow",
};

const std::vector<std::string> kFiller = {
    "quarterly", "vendor",  "backlog", "ticket",  "review",  "invoice", "draft",    "schedule",
    "audit",     "archive", "sync",    "latency", "cluster", "pending", "approved", "migration",
    "customer",  "ledger",  "budget",  "roster",  "export",  "import",  "batch",    "queue",
};

const std::vector<std::string> kServices = {"auth", "billing", "search", "mailer", "scheduler", "storage"};
const std::vector<std::string> kPeople = {"ana", "bo", "chen", "dara", "eli", "farah"};
const std::vector<std::string> kDocFields = {"amount", "score", "count"};
const std::vector<std::string> kFileFields = {"total", "pages"};
const std::vector<std::string> kTableCols = {"x", "y", "z"};

enum class ValueType { number, list, doc_text, file_text, ok };

bool is_numeric(ValueType t) { return t == ValueType::number; }
bool is_textual(ValueType t) { return t == ValueType::doc_text || t == ValueType::file_text; }

struct Produced {
    int step;
    ValueType type;
};

std::string filler(Rng& rng, int words) {
    std::vector<std::string> out;
    for (int i = 0; i < words; ++i) out.push_back(rng.pick(kFiller));
    return join(out, " ");
}

WorldState build_world(Rng& rng, int n) {
    WorldState w;
    const int keys = n + 12;
    for (int i = 1; i <= keys; ++i) w.kv["k" + std::to_string(i)] = std::to_string(rng.uniform(1, 99));
    std::vector<std::string> topics = kTopics;
    for (std::size_t i = topics.size(); i > 1; --i)
        std::swap(topics[i - 1], topics[static_cast<std::size_t>(rng.uniform(0, static_cast<long long>(i) - 1))]);
    const int docs = 10;
    for (int i = 1; i <= docs; ++i) {
        std::string text = "topic " + topics[static_cast<std::size_t>(i - 1)];
        for (const auto& f : kDocFields) text += " | " + f + ": " + std::to_string(rng.uniform(1, 99));
        text += " | " + filler(rng, 8);
        w.documents["d" + std::to_string(i)] = text;
    }
    for (int t = 1; t <= 4; ++t) {
        std::vector<TableRow> rows;
        auto count = rng.uniform(3, 6);
        for (long long r = 0; r < count; ++r) {
            TableRow row;
            for (const auto& c : kTableCols) row[c] = rng.uniform(1, 50);
            rows.push_back(std::move(row));
        }
        w.tables["t" + std::to_string(t)] = std::move(rows);
    }
    for (int f = 1; f <= 8; ++f) {
        std::string id = "p" + std::to_string(f);
        std::string text = "report " + id;
        for (const auto& field : kFileFields) text += " | " + field + ": " + std::to_string(rng.uniform(1, 99));
        text += " | " + filler(rng, 8);
        w.files["/data/" + id + ".txt"] = text;
    }
    return w;
}

std::string noise_line(Rng& rng, const WorldState& world) {
    switch (rng.uniform(0, 2)) {
        case 0: {
            char ts[32];
            std::snprintf(ts, sizeof ts, "2024-03-%02lld %02lld:%02lld", rng.uniform(1, 28), rng.uniform(0, 23),
                          rng.uniform(0, 59));
            return "log " + std::string(ts) + " svc=" + rng.pick(kServices) +
                   " level=" + (rng.chance(0.7) ? "info" : "warn") + " msg " + filler(rng, 4);
        }
        case 1: {
            auto doc = std::next(world.documents.begin(), rng.uniform(0, static_cast<long long>(world.documents.size()) - 1));
            return "summary: earlier attempt inspected " + doc->first + " and " + rng.pick(kFiller) +
                   " but stopped before the " + rng.pick(kFiller) + " step";
        }
        default:
            return "note: " + filler(rng, 3) + " pending review by " + rng.pick(kPeople);
    }
}

class PlanBuilder {
public:
    PlanBuilder(Rng& rng, const GeneratorConfig& cfg, const WorldState& world, int n)
        : rng_(rng), cfg_(cfg), world_(world), n_(n) {}

    std::vector<TaskStep> steps;
    std::vector<std::pair<std::string, std::string>> input_facts;

    void build() {
        if (cfg_.exact_gap > 0)
            build_chain(cfg_.exact_gap);
        else
            build_banded(cfg_.max_gap);
    }

private:
    Rng& rng_;
    const GeneratorConfig& cfg_;
    const WorldState& world_;
    int n_;
    std::vector<ValueType> types_{ValueType::ok};  // index 0 unused

    std::string input_fact(std::string value) {
        std::string name = "f" + std::to_string(input_facts.size() + 1);
        input_facts.emplace_back(name, std::move(value));
        return "$" + name;
    }

    std::string random_key() { return "k" + std::to_string(rng_.uniform(1, static_cast<long long>(world_.kv.size()))); }
    std::string random_topic() {
        auto it = std::next(world_.documents.begin(), rng_.uniform(0, static_cast<long long>(world_.documents.size()) - 1));
        return split_words(it->second).at(1);
    }
    std::string random_table() { return "t" + std::to_string(rng_.uniform(1, static_cast<long long>(world_.tables.size()))); }
    std::string random_file() { return "/data/p" + std::to_string(rng_.uniform(1, static_cast<long long>(world_.files.size()))) + ".txt"; }
    std::string ref(int step) { return "$r" + std::to_string(step); }

    void add(int id, StepKind kind, const std::string& body, std::set<int> deps, ValueType out) {
        TaskStep s;
        s.id = id;
        s.kind = kind;
        s.instruction = body + " -> r" + std::to_string(id);
        s.depends_on = std::move(deps);
        steps.push_back(std::move(s));
        types_.push_back(out);
    }

    std::string field_for(ValueType t) {
        return t == ValueType::doc_text ? rng_.pick(kDocFields) : rng_.pick(kFileFields);
    }

    // Steps that take one fact from I0: lookup key, search topic, or arithmetic.
    void emit_input_step(int id, bool numeric_only) {
        int choice = static_cast<int>(rng_.uniform(0, numeric_only ? 1 : 2));
        if (choice == 0) {
            add(id, StepKind::lookup, "lookup key=" + input_fact(random_key()), {}, ValueType::number);
        } else if (choice == 1) {
            add(id, StepKind::arithmetic,
                "compute add " + input_fact(std::to_string(rng_.uniform(1, 99))) + " " +
                    std::to_string(rng_.uniform(1, 20)),
                {}, ValueType::number);
        } else {
            add(id, StepKind::search, "search query=" + input_fact(random_topic()), {}, ValueType::doc_text);
        }
    }

    // A step with only literal arguments.
    void emit_literal_step(int id, bool numeric_only) {
        int choice = static_cast<int>(rng_.uniform(0, numeric_only ? 1 : 3));
        switch (choice) {
            case 0: add(id, StepKind::lookup, "lookup key=" + random_key(), {}, ValueType::number); break;
            case 1:
                add(id, StepKind::table_op, "table_sum table=" + random_table() + " col=" + rng_.pick(kTableCols), {},
                    ValueType::number);
                break;
            case 2: add(id, StepKind::search, "search query=" + random_topic(), {}, ValueType::doc_text); break;
            default: add(id, StepKind::file_op, "read_file path=" + random_file(), {}, ValueType::file_text); break;
        }
    }

    // Consumes exactly r_{src}.
    void emit_unary_step(int id, int src) {
        ValueType t = types_[static_cast<std::size_t>(src)];
        if (is_textual(t)) {
            add(id, StepKind::extract, "extract field=" + field_for(t) + " text=" + ref(src), {src}, ValueType::number);
        } else if (rng_.chance(0.5)) {
            add(id, StepKind::arithmetic,
                "compute " + std::string(rng_.chance(0.5) ? "add" : "sub") + " " + ref(src) + " " +
                    std::to_string(rng_.uniform(1, 20)),
                {src}, ValueType::number);
        } else {
            add(id, StepKind::table_op,
                "table_filter table=" + random_table() + " col=" + rng_.pick(kTableCols) + " gt=" + ref(src), {src},
                ValueType::number);
        }
    }

    void build_chain(int gap) {
        for (int i = 1; i < n_; ++i) {
            bool numeric_only = (i == n_ - gap);
            if (i < gap)
                emit_literal_step(i, numeric_only);
            else if (i == gap)
                emit_input_step(i, numeric_only);
            else
                emit_unary_step(i, i - gap);
        }
        add(n_, StepKind::answer, "answer sum " + ref(n_ - gap) + " 0", {n_ - gap}, ValueType::number);
    }

    std::vector<int> window(int i, int gap, bool (*accept)(ValueType)) const {
        std::vector<int> out;
        for (int j = std::max(1, i - gap); j < i; ++j)
            if (accept(types_[static_cast<std::size_t>(j)])) out.push_back(j);
        return out;
    }

    void build_banded(int gap) {
        static constexpr StepKind kMixable[] = {StepKind::lookup, StepKind::arithmetic, StepKind::file_op,
                                                StepKind::table_op, StepKind::search, StepKind::extract,
                                                StepKind::aggregate};
        auto numeric = [](ValueType t) { return is_numeric(t); };
        auto textual = [](ValueType t) { return is_textual(t); };
        auto combinable = [](ValueType t) { return t == ValueType::number || t == ValueType::list; };

        for (int i = 1; i < n_; ++i) {
            const bool numeric_only = i >= n_ - 2;
            const bool input_allowed = i <= gap;
            if (i == 1) {
                emit_input_step(i, numeric_only);
                continue;
            }
            auto nums = window(i, gap, +numeric);
            auto texts = window(i, gap, +textual);
            bool pair_ok = i >= 3 && combinable(types_[static_cast<std::size_t>(i - 1)]) &&
                           combinable(types_[static_cast<std::size_t>(i - 2)]);

            std::vector<double> weights;
            for (StepKind kind : kMixable) {
                auto it = cfg_.domain_mix.find(kind);
                double w = it == cfg_.domain_mix.end() ? 0.0 : it->second;
                bool feasible = true;
                switch (kind) {
                    case StepKind::lookup:
                    case StepKind::table_op: break;
                    case StepKind::arithmetic: feasible = !nums.empty() || input_allowed; break;
                    case StepKind::file_op:
                    case StepKind::search: feasible = !numeric_only; break;
                    case StepKind::extract: feasible = !texts.empty(); break;
                    case StepKind::aggregate: feasible = pair_ok; break;
                    default: feasible = false;
                }
                weights.push_back(feasible ? w : 0.0);
            }
            if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0.0) {
                emit_literal_step(i, true);
                continue;
            }
            StepKind kind = kMixable[rng_.weighted(weights)];
            switch (kind) {
                case StepKind::lookup:
                    if (input_allowed && rng_.chance(0.5))
                        add(i, kind, "lookup key=" + input_fact(random_key()), {}, ValueType::number);
                    else
                        add(i, kind, "lookup key=" + random_key(), {}, ValueType::number);
                    break;
                case StepKind::search:
                    if (input_allowed && rng_.chance(0.5))
                        add(i, kind, "search query=" + input_fact(random_topic()), {}, ValueType::doc_text);
                    else
                        add(i, kind, "search query=" + random_topic(), {}, ValueType::doc_text);
                    break;
                case StepKind::file_op:
                    if (!nums.empty() && rng_.chance(0.3)) {
                        int src = rng_.pick(nums);
                        add(i, kind, "write_file path=/out/r" + std::to_string(src) + ".txt text=" + ref(src), {src},
                            ValueType::ok);
                    } else {
                        add(i, kind, "read_file path=" + random_file(), {}, ValueType::file_text);
                    }
                    break;
                case StepKind::table_op:
                    if (!nums.empty() && rng_.chance(0.5)) {
                        int src = rng_.pick(nums);
                        add(i, kind,
                            "table_filter table=" + random_table() + " col=" + rng_.pick(kTableCols) + " gt=" + ref(src),
                            {src}, ValueType::number);
                    } else {
                        add(i, kind, "table_sum table=" + random_table() + " col=" + rng_.pick(kTableCols), {},
                            ValueType::number);
                    }
                    break;
                case StepKind::extract: {
                    int src = rng_.pick(texts);
                    add(i, kind, "extract field=" + field_for(types_[static_cast<std::size_t>(src)]) + " text=" + ref(src),
                        {src}, ValueType::number);
                    break;
                }
                case StepKind::arithmetic: {
                    std::string lhs;
                    std::set<int> deps;
                    if (!nums.empty()) {
                        int src = rng_.pick(nums);
                        lhs = ref(src);
                        deps.insert(src);
                    } else {
                        lhs = input_fact(std::to_string(rng_.uniform(1, 99)));
                    }
                    std::string rhs = std::to_string(rng_.uniform(1, 20));
                    if (nums.size() >= 2 && rng_.chance(0.4)) {
                        int other = nums.front() == *deps.begin() ? nums.back() : nums.front();
                        rhs = ref(other);
                        deps.insert(other);
                    }
                    add(i, kind, "compute " + std::string(rng_.chance(0.5) ? "add " : "sub ") + lhs + " " + rhs,
                        std::move(deps), ValueType::number);
                    break;
                }
                case StepKind::aggregate: emit_pair(i, StepKind::aggregate, "aggregate"); break;
                default: break;
            }
        }
        emit_pair(n_, StepKind::answer, "answer");
    }

    void emit_pair(int i, StepKind kind, const std::string& verb) {
        ValueType a = types_[static_cast<std::size_t>(i - 2)];
        ValueType b = types_[static_cast<std::size_t>(i - 1)];
        std::string op;
        ValueType out = ValueType::number;
        if (a == ValueType::list || b == ValueType::list) {
            op = "collect";
        } else {
            static const std::vector<std::string> ops = {"sum", "max", "min", "collect"};
            op = rng_.pick(ops);
        }
        if (op == "collect") out = ValueType::list;
        add(i, kind, verb + " " + op + " " + ref(i - 2) + " " + ref(i - 1), {i - 2, i - 1}, out);
    }
};

}  // namespace

GeneratedWorkflow generate_workflow(std::uint64_t seed, const GeneratorConfig& cfg) {
    cfg.validate();
    Rng rng(splitmix64(seed));
    const int n = static_cast<int>(rng.uniform(cfg.min_steps, cfg.max_steps));

    GeneratedWorkflow out;
    out.world = build_world(rng, n);

    PlanBuilder builder(rng, cfg, out.world, n);
    builder.build();

    std::vector<std::string> lines;
    for (const auto& [name, value] : builder.input_facts) lines.push_back(name + " = " + value);
    for (int d = 0; d < cfg.distractor_count; ++d) {
        std::string value = rng.chance(0.5) ? std::to_string(rng.uniform(1, 99))
                                            : "k" + std::to_string(rng.uniform(1, static_cast<long long>(out.world.kv.size())));
        lines.push_back("f" + std::to_string(100 + d) + " = " + value);
    }
    const int noise_lines = static_cast<int>(cfg.noise_level * 40.0 + 0.5);
    for (int i = 0; i < noise_lines; ++i) lines.push_back(noise_line(rng, out.world));
    if (lines.size() > builder.input_facts.size()) {
        for (std::size_t i = lines.size() - 1; i > 0; --i)
            std::swap(lines[i], lines[static_cast<std::size_t>(rng.uniform(0, static_cast<long long>(i)))]);
    }

    Workflow& w = out.workflow;
    w.id = "wf-" + std::to_string(seed);
    w.seed = seed;
    w.system_prompt = kDefaultSystemPrompt;
    w.initial_input = join(lines, "\n");
    w.plan = Plan(std::move(builder.steps));
    w.final_requirement = "report $r" + std::to_string(n);
    w.gold_answer = oracle_answer(w, out.world);
    return out;
}

std::string oracle_answer(const Workflow& w, const WorldState& world_in) {
    WorldState world = world_in;
    std::map<std::string, std::string> values;
    for (const auto& f : collect_facts(w.initial_input)) values[f.name] = f.value;
    auto resolve = [&values](const std::string& token) -> std::string {
        if (token.empty() || token.front() != '$') return token;
        auto it = values.find(token.substr(1));
        if (it == values.end()) throw ValidationError("oracle: unresolved reference " + token);
        return it->second;
    };

    for (const auto& step : w.plan.steps()) {
        Instruction ins = parse_instruction(step.instruction);
        std::string result_name = ins.result.empty() ? step.result_name() : ins.result;
        if (is_tool_kind(ins.verb)) {
            ToolCall call{ins.verb, {}};
            for (const auto& [k, v] : ins.named) call.arguments[k] = resolve(v);
            auto outcome = apply_tool(world, call);
            if (outcome.updated) world = std::move(*outcome.updated);
            values[result_name] = outcome.result.payload;
        } else if (is_compute_verb(ins.verb)) {
            std::vector<std::string> args;
            for (const auto& o : ins.operands) args.push_back(resolve(o));
            auto v = evaluate_op(ins.op, args);
            if (!v) throw ValidationError("oracle: cannot evaluate '" + step.instruction + "'");
            values[result_name] = *v;
        } else {
            throw ValidationError("oracle: unknown verb in '" + step.instruction + "'");
        }
    }
    Instruction fin = parse_instruction(w.final_requirement);
    if (fin.operands.empty()) throw ValidationError("oracle: final requirement names no result");
    return resolve(fin.operands.front());
}

std::vector<std::string> distractor_names(const Workflow& w) {
    std::vector<std::string> out;
    for (const auto& f : collect_facts(w.initial_input)) {
        if (f.name.size() > 1 && f.name[0] == 'f') {
            int idx = std::atoi(f.name.c_str() + 1);
            if (idx >= 100) out.push_back(f.name);
        }
    }
    return out;
}

}  // namespace paace
