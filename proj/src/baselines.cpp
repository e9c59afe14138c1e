#include "paace/baselines.hpp"
#include "paace/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

namespace paace {

void BaselineConfig::validate() const {
    if (fifo_turns < 1) throw ConfigError("baselines.fifo_turns must be >= 1");
    if (retrieval_top_m < 1) throw ConfigError("baselines.retrieval_top_m must be >= 1");
    if (!(extractive_keep_fraction > 0.0 && extractive_keep_fraction < 1.0))
        throw ConfigError("baselines.extractive_keep_fraction must be in (0,1)");
}

ContextState fifo_compress(const ContextState& c, int turns) {
    if (turns < 1) throw ValidationError("fifo: turns must be >= 1");
    std::set<int> steps;
    for (const auto* section : {&c.history, &c.observations, &c.retrieved})
        for (const auto& e : *section) steps.insert(e.step);
    std::set<int> keep;
    for (auto it = steps.rbegin(); it != steps.rend() && static_cast<int>(keep.size()) < turns; ++it) keep.insert(*it);

    ContextState out = c;
    auto filter = [&](std::vector<Entry>& es) {
        std::erase_if(es, [&](const Entry& e) { return !keep.count(e.step); });
    };
    filter(out.history);
    filter(out.observations);
    filter(out.retrieved);
    return out;
}

ContextState retrieval_compress(const ContextState& c, const std::string& query, Embedder& embedder, int top_m) {
    if (top_m < 1) throw ValidationError("retrieval: top_m must be >= 1");
    struct Candidate {
        int section;
        std::size_t index;
        std::size_t order;  // global recency: later entries larger
        int step;
        std::optional<double> score;
    };
    const std::vector<Entry>* sections[] = {&c.history, &c.observations, &c.retrieved};
    auto q = embedder.embed(query);
    std::vector<Candidate> cands;
    std::size_t order = 0;
    for (int s = 0; s < 3; ++s) {
        for (std::size_t i = 0; i < sections[s]->size(); ++i) {
            const auto& e = (*sections[s])[i];
            std::optional<double> score;
            try {
                score = cosine(embedder.embed(e.text), q);
            } catch (const UndefinedSimilarityError&) {
                score.reset();
            }
            cands.push_back({s, i, order++, e.step, score});
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score.has_value() != b.score.has_value()) return a.score.has_value();
        if (a.score && *a.score != *b.score) return *a.score > *b.score;
        if (a.step != b.step) return a.step > b.step;
        return a.order > b.order;
    });
    if (static_cast<int>(cands.size()) > top_m) cands.resize(static_cast<std::size_t>(top_m));

    std::set<std::pair<int, std::size_t>> keep;
    for (const auto& cd : cands) keep.insert({cd.section, cd.index});
    ContextState out = c;
    std::vector<Entry>* outs[] = {&out.history, &out.observations, &out.retrieved};
    for (int s = 0; s < 3; ++s) {
        std::vector<Entry> kept;
        for (std::size_t i = 0; i < sections[s]->size(); ++i)
            if (keep.count({s, i})) kept.push_back((*sections[s])[i]);
        *outs[s] = std::move(kept);
    }
    return out;
}

std::optional<ContextState> prompting_compress(const ContextState& c, CompletionBackend& backend,
                                               const std::string& instruction) {
    CompletionRequest req;
    req.messages.push_back({"system", instruction});
    req.messages.push_back({"user", "SUMMARIZE:\n" + render_context(c)});
    std::string summary;
    try {
        summary = backend.complete(req).text;
    } catch (const TransportError&) {
        return std::nullopt;
    } catch (const ProtocolError&) {
        return std::nullopt;
    }
    if (word_count(summary) == 0) return std::nullopt;
    ContextState out = c;
    out.history = {Entry{c.step, summary}};
    out.observations.clear();
    out.retrieved.clear();
    return out;
}

namespace {

std::set<std::string> alnum_tokens(std::string_view text) {
    std::set<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        } else if (!cur.empty()) {
            out.insert(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.insert(std::move(cur));
    return out;
}

}  // namespace

ContextState extractive_compress(const ContextState& c, const std::string& slice, double keep_fraction) {
    if (!(keep_fraction > 0.0 && keep_fraction < 1.0)) throw ValidationError("extractive: keep_fraction must be in (0,1)");
    const auto query = alnum_tokens(slice);

    // Line inventory: (section, entry index, line index) with its text.
    struct Line {
        int section;
        std::size_t entry;
        std::string text;
        int score;
        std::size_t pos;
    };
    std::vector<Line> lines;
    auto add_text = [&](int section, std::size_t entry, const std::string& text) {
        for (auto& l : split_lines(text)) {
            if (l.empty()) continue;
            int score = 0;
            for (const auto& tok : alnum_tokens(l)) score += query.count(tok) ? 1 : 0;
            lines.push_back({section, entry, std::move(l), score, lines.size()});
        }
    };
    add_text(0, 0, c.initial_input);
    for (std::size_t i = 0; i < c.memory.size(); ++i) add_text(1, i, c.memory[i]);
    for (std::size_t i = 0; i < c.history.size(); ++i) add_text(2, i, c.history[i].text);
    for (std::size_t i = 0; i < c.observations.size(); ++i) add_text(3, i, c.observations[i].text);
    for (std::size_t i = 0; i < c.retrieved.size(); ++i) add_text(4, i, c.retrieved[i].text);

    auto keep_n = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(lines.size())));
    std::vector<std::size_t> order(lines.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (lines[a].score != lines[b].score) return lines[a].score > lines[b].score;
        return a > b;
    });
    std::vector<bool> kept(lines.size(), false);
    for (std::size_t i = 0; i < keep_n && i < order.size(); ++i) kept[order[i]] = true;

    ContextState out = c;
    out.initial_input.clear();
    out.memory.clear();
    out.history.clear();
    out.observations.clear();
    out.retrieved.clear();
    std::vector<std::string> input_lines;
    std::map<std::pair<int, std::size_t>, std::vector<std::string>> grouped;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!kept[i]) continue;
        if (lines[i].section == 0)
            input_lines.push_back(lines[i].text);
        else
            grouped[{lines[i].section, lines[i].entry}].push_back(lines[i].text);
    }
    out.initial_input = join(input_lines, "\n");
    for (auto& [key, ls] : grouped) {
        auto text = join(ls, "\n");
        switch (key.first) {
            case 1: out.memory.push_back(text); break;
            case 2: out.history.push_back({c.history[key.second].step, text}); break;
            case 3: out.observations.push_back({c.observations[key.second].step, text}); break;
            default: out.retrieved.push_back({c.retrieved[key.second].step, text}); break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

class FifoCompressor final : public Compressor {
public:
    explicit FifoCompressor(int turns) : turns_(turns) {}
    std::optional<ContextState> compress(const ContextState& c, const std::string&) override {
        return fifo_compress(c, turns_);
    }

private:
    int turns_;
};

class RetrievalCompressor final : public Compressor {
public:
    RetrievalCompressor(std::shared_ptr<Embedder> e, int m) : embedder_(std::move(e)), m_(m) {}
    std::optional<ContextState> compress(const ContextState& c, const std::string& slice) override {
        return retrieval_compress(c, slice, *embedder_, m_);
    }

private:
    std::shared_ptr<Embedder> embedder_;
    int m_;
};

class PromptingCompressor final : public Compressor {
public:
    PromptingCompressor(std::shared_ptr<CompletionBackend> b, std::string instr)
        : backend_(std::move(b)), instruction_(std::move(instr)) {}
    std::optional<ContextState> compress(const ContextState& c, const std::string&) override {
        return prompting_compress(c, *backend_, instruction_);
    }

private:
    std::shared_ptr<CompletionBackend> backend_;
    std::string instruction_;
};

class ExtractiveCompressor final : public Compressor {
public:
    explicit ExtractiveCompressor(double f) : fraction_(f) {}
    std::optional<ContextState> compress(const ContextState& c, const std::string& slice) override {
        return extractive_compress(c, slice, fraction_);
    }

private:
    double fraction_;
};

}  // namespace

const std::vector<std::string>& strategy_names() {
    static const std::vector<std::string> names = {"none",         "fifo",          "retrieval",    "prompting",
                                                   "extractive",   "paace-oracle",  "paace-teacher", "paace-student"};
    return names;
}

CompressorHandle baseline_handle(const std::string& name, const BaselineConfig& cfg, const Backends& backends, int k) {
    cfg.validate();
    CompressorHandle h;
    h.kind = CompressorKind::baseline;
    h.k = k;
    if (name == "fifo") {
        h.impl = std::make_shared<FifoCompressor>(cfg.fifo_turns);
        h.name = "fifo";
    } else if (name == "retrieval") {
        h.impl = std::make_shared<RetrievalCompressor>(backends.embedder, cfg.retrieval_top_m);
        h.name = "retrieval";
    } else if (name == "prompting") {
        h.impl = std::make_shared<PromptingCompressor>(backends.compressor, cfg.prompting_instruction);
        h.name = "prompting";
    } else if (name == "extractive") {
        h.impl = std::make_shared<ExtractiveCompressor>(cfg.extractive_keep_fraction);
        h.name = "extractive-lite";
    } else {
        throw ConfigError("unknown baseline strategy: " + name);
    }
    h.prompt_id = h.name;
    return h;
}

CompressorHandle strategy_handle(const std::string& name, const BaselineConfig& cfg, const Backends& backends, int k,
                                 const std::string& teacher_prompt_id, const std::string& teacher_prompt) {
    if (name == "paace-oracle") return oracle_handle(k);
    if (name == "paace-teacher") {
        if (teacher_prompt.empty()) throw ConfigError("paace-teacher needs a teacher prompt");
        return teacher_handle(backends.compressor, teacher_prompt_id, teacher_prompt, k);
    }
    if (name == "paace-student") return student_handle(backends.student ? backends.student : backends.compressor, k);
    if (name == "none") throw ConfigError("strategy 'none' has no compressor");
    return baseline_handle(name, cfg, backends, k);
}

}  // namespace paace
