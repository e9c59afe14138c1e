#include "paace/core.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace paace {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

constexpr std::string_view kSectionNames[] = {"system",  "plan",         "input",    "memory",
                                              "history", "observations", "retrieved"};

}  // namespace

std::size_t word_count(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : text) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

const TokenCounter& default_token_counter() {
    static const TokenCounter counter = [](std::string_view t) { return word_count(t); };
    return counter;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex_digest(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) {
            if (start < text.size()) out.emplace_back(text.substr(start));
            break;
        }
        out.emplace_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string normalize_answer(std::string_view text) {
    std::string out;
    for (const auto& w : split_words(text)) {
        if (!out.empty()) out += ' ';
        for (char c : w) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(StepKind kind) {
    switch (kind) {
        case StepKind::lookup: return "lookup";
        case StepKind::arithmetic: return "arithmetic";
        case StepKind::file_op: return "file_op";
        case StepKind::table_op: return "table_op";
        case StepKind::search: return "search";
        case StepKind::extract: return "extract";
        case StepKind::aggregate: return "aggregate";
        case StepKind::answer: return "answer";
    }
    return "lookup";
}

StepKind step_kind_from_string(std::string_view name) {
    static const std::unordered_map<std::string_view, StepKind> table = {
        {"lookup", StepKind::lookup},       {"arithmetic", StepKind::arithmetic},
        {"file_op", StepKind::file_op},     {"table_op", StepKind::table_op},
        {"search", StepKind::search},       {"extract", StepKind::extract},
        {"aggregate", StepKind::aggregate}, {"answer", StepKind::answer},
    };
    auto it = table.find(name);
    if (it == table.end()) throw ValidationError("unknown step kind: " + std::string(name));
    return it->second;
}

std::string render_step(const TaskStep& step, const std::set<int>* visible) {
    std::string line = "[" + std::to_string(step.id) + "] " + step.instruction;
    std::vector<std::string> edges;
    for (int d : step.depends_on) {
        if (!visible || visible->count(d)) edges.push_back(std::to_string(d));
    }
    if (!edges.empty()) line += " (after " + join(edges, ",") + ")";
    return line;
}

Plan::Plan(std::vector<TaskStep> steps) : steps_(std::move(steps)) {
    const int n = static_cast<int>(steps_.size());
    for (int i = 0; i < n; ++i) {
        const auto& s = steps_[static_cast<std::size_t>(i)];
        if (s.id != i + 1) throw ValidationError("plan step ids must be 1..n contiguous");
        if (trim(s.instruction).empty())
            throw ValidationError("step " + std::to_string(s.id) + " has an empty instruction");
        for (int d : s.depends_on) {
            if (d < 1 || d > n || d == s.id)
                throw ValidationError("step " + std::to_string(s.id) + " depends on invalid step " +
                                      std::to_string(d));
        }
    }

    // Kahn's algorithm over the raw edges so cycles get a precise diagnostic.
    std::vector<int> indegree(static_cast<std::size_t>(n) + 1, 0);
    std::vector<std::vector<int>> dependents(static_cast<std::size_t>(n) + 1);
    for (const auto& s : steps_) {
        for (int d : s.depends_on) {
            dependents[static_cast<std::size_t>(d)].push_back(s.id);
            ++indegree[static_cast<std::size_t>(s.id)];
        }
    }
    std::queue<int> ready;
    for (int id = 1; id <= n; ++id)
        if (indegree[static_cast<std::size_t>(id)] == 0) ready.push(id);
    int visited = 0;
    while (!ready.empty()) {
        int id = ready.front();
        ready.pop();
        ++visited;
        for (int next : dependents[static_cast<std::size_t>(id)])
            if (--indegree[static_cast<std::size_t>(next)] == 0) ready.push(next);
    }
    if (visited != n) throw ValidationError("plan dependencies contain a cycle");

    for (const auto& s : steps_) {
        if (!s.depends_on.empty() && *s.depends_on.rbegin() >= s.id)
            throw ValidationError("step " + std::to_string(s.id) + " depends on a later step");
    }

    std::vector<std::string> lines;
    lines.reserve(steps_.size());
    for (const auto& s : steps_) lines.push_back(render_step(s));
    description_ = join(lines, "\n");
}

const TaskStep& Plan::at(int id) const {
    if (id < 1 || id > static_cast<int>(steps_.size()))
        throw ValidationError("plan step " + std::to_string(id) + " out of range");
    return steps_[static_cast<std::size_t>(id - 1)];
}

// ---------------------------------------------------------------------------

ContextState initial_context(const Workflow& w) {
    ContextState c;
    c.initial_input = w.initial_input;
    c.system_prompt = w.system_prompt;
    c.plan_text = w.plan.description();
    c.step = 1;
    return c;
}

std::string render_context(const ContextState& c) {
    std::string out;
    auto section = [&out](std::string_view name, std::string_view body) {
        if (body.empty()) return;
        out += "## ";
        out += name;
        out += '\n';
        out += body;
        out += '\n';
    };
    auto entries = [](const std::vector<Entry>& es) {
        std::string body;
        for (const auto& e : es) {
            if (e.text.empty()) continue;
            if (!body.empty()) body += '\n';
            body += e.text;
        }
        return body;
    };
    std::string memory;
    for (const auto& m : c.memory) {
        if (m.empty()) continue;
        if (!memory.empty()) memory += '\n';
        memory += m;
    }
    section(kSectionNames[0], c.system_prompt);
    section(kSectionNames[1], c.plan_text);
    section(kSectionNames[2], c.initial_input);
    section(kSectionNames[3], memory);
    section(kSectionNames[4], entries(c.history));
    section(kSectionNames[5], entries(c.observations));
    section(kSectionNames[6], entries(c.retrieved));
    return out;
}

ContextState parse_context(std::string_view rendered) {
    ContextState c;
    int current = -1;
    std::vector<std::string> bodies[7];
    for (const auto& line : split_lines(rendered)) {
        if (line.rfind("## ", 0) == 0) {
            auto name = std::string_view(line).substr(3);
            auto it = std::find(std::begin(kSectionNames), std::end(kSectionNames), name);
            if (it != std::end(kSectionNames)) {
                current = static_cast<int>(it - std::begin(kSectionNames));
                continue;
            }
        }
        if (current < 0) current = 2;  // headerless text is treated as initial input
        bodies[current].push_back(line);
    }
    c.system_prompt = join(bodies[0], "\n");
    c.plan_text = join(bodies[1], "\n");
    c.initial_input = join(bodies[2], "\n");
    c.memory = bodies[3];
    for (auto& l : bodies[4]) c.history.push_back({0, l});
    for (auto& l : bodies[5]) c.observations.push_back({0, l});
    for (auto& l : bodies[6]) c.retrieved.push_back({0, l});
    return c;
}

std::size_t context_tokens(const ContextState& c, const TokenCounter& counter) {
    return counter(render_context(c));
}

// ---------------------------------------------------------------------------

std::optional<Fact> parse_fact_line(std::string_view line) {
    auto s = trim(line);
    if (s.empty() || !is_name_start(s.front())) return std::nullopt;
    std::size_t i = 1;
    while (i < s.size() && is_name_char(s[i])) ++i;
    std::string_view name = s.substr(0, i);
    std::size_t j = i;
    while (j < s.size() && (s[j] == ' ' || s[j] == '\t')) ++j;
    if (j >= s.size() || s[j] != '=') return std::nullopt;
    auto value = trim(s.substr(j + 1));
    return Fact{std::string(name), std::string(value), std::string(s)};
}

std::vector<Fact> collect_facts(std::string_view text) {
    std::vector<Fact> facts;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& line : split_lines(text)) {
        auto f = parse_fact_line(line);
        if (!f) continue;
        auto it = index.find(f->name);
        if (it != index.end()) facts[it->second].name.clear();  // tombstone the older one
        index[f->name] = facts.size();
        facts.push_back(std::move(*f));
    }
    std::erase_if(facts, [](const Fact& f) { return f.name.empty(); });
    return facts;
}

std::optional<std::string> find_fact(std::string_view text, std::string_view name) {
    std::optional<std::string> found;
    for (const auto& line : split_lines(text)) {
        auto f = parse_fact_line(line);
        if (f && f->name == name) found = f->value;
    }
    return found;
}

std::vector<std::string> referenced_names(std::string_view text) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '$' || i + 1 >= text.size() || !is_name_start(text[i + 1])) continue;
        std::size_t j = i + 1;
        while (j < text.size() && is_name_char(text[j])) ++j;
        std::string name(text.substr(i + 1, j - i - 1));
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
        i = j - 1;
    }
    return names;
}

// ---------------------------------------------------------------------------

bool CompressionRecord::valid() const {
    return !compressed.empty() && ratio > 0.0 && ratio < 1.0;
}

CompressionRecord make_record(int step, int k, std::string plan_slice, std::string context,
                              std::string compressed, std::string prompt_id,
                              const TokenCounter& counter) {
    CompressionRecord r;
    r.step = step;
    r.k = k;
    r.plan_slice = std::move(plan_slice);
    r.original_tokens = counter(context);
    r.compressed_tokens = counter(compressed);
    r.ratio = r.original_tokens == 0
                  ? 0.0
                  : static_cast<double>(r.compressed_tokens) / static_cast<double>(r.original_tokens);
    r.prompt_id = std::move(prompt_id);
    r.context = std::move(context);
    r.compressed = std::move(compressed);
    return r;
}

std::size_t Trajectory::missing_fact_count() const {
    return static_cast<std::size_t>(
        std::count_if(per_step.begin(), per_step.end(), [](const StepRecord& s) { return s.missing_fact; }));
}

std::string_view to_string(RunMode mode) {
    switch (mode) {
        case RunMode::full: return "full";
        case RunMode::compressed: return "compressed";
        case RunMode::baseline: return "baseline";
    }
    return "full";
}

RunMode run_mode_from_string(std::string_view name) {
    if (name == "full") return RunMode::full;
    if (name == "compressed") return RunMode::compressed;
    if (name == "baseline") return RunMode::baseline;
    throw ValidationError("unknown run mode: " + std::string(name));
}

}  // namespace paace
