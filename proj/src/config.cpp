#include "gumdrop/config.hpp"

#include <algorithm>
#include <sstream>

#include "gumdrop/featurizer.hpp"

namespace gumdrop {

namespace {

const std::vector<std::string>& valid_modules(Task t) {
    static const std::vector<std::string> kSent = {"dnn", "lr", "wiki", "punct"};
    static const std::vector<std::string> kSeg = {"subtree", "bow"};
    static const std::vector<std::string> kConn = {"freq"};
    switch (t) {
        case Task::sent: return kSent;
        case Task::seg: return kSeg;
        default: return kConn;
    }
}

std::vector<std::string> parse_list(const std::string& value) {
    std::vector<std::string> out;
    for (auto& item : split(value, ',')) {
        std::string s = strip(item);
        if (!s.empty()) out.push_back(std::move(s));
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& value) {
    std::vector<int> out;
    for (const auto& s : parse_list(value)) out.push_back(std::stoi(s));
    return out;
}

std::vector<double> parse_double_list(const std::string& value) {
    std::vector<double> out;
    for (const auto& s : parse_list(value)) out.push_back(std::stod(s));
    return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "on" || value == "true" || value == "1" || value == "yes") return true;
    if (value == "off" || value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("boolean value expected for " + key + ": " + value);
}

std::vector<ModelKind> parse_kinds(const std::string& value) {
    std::vector<ModelKind> out;
    for (const auto& s : parse_list(value)) out.push_back(model_kind_from_name(s));
    return out;
}

void apply_task_key(TaskConfig& tc, const std::string& key, const std::string& value,
                    const std::string& where) {
    if (key == "modules")
        tc.modules = parse_list(value);
    else if (key == "meta_candidates")
        tc.meta_candidates = parse_kinds(value);
    else if (key == "meta_features")
        tc.meta_features = parse_list(value);
    else if (key == "meta_window")
        tc.meta_window = std::stoi(value);
    else if (key == "force_sentence_starts")
        tc.force_sentence_starts = parse_bool(value, where);
    else if (key == "dnn_windows")
        tc.dnn_windows = parse_int_list(value);
    else if (key == "dnn_embed_dim")
        tc.mlp.embed_dim = std::stoi(value);
    else if (key == "dnn_hidden")
        tc.mlp.hidden_dims = parse_int_list(value);
    else if (key == "dnn_epochs")
        tc.mlp.epochs = std::stoi(value);
    else if (key == "dnn_lr")
        tc.mlp.lr = std::stod(value);
    else if (key == "dnn_batch")
        tc.mlp.batch_size = std::stoi(value);
    else if (key == "dnn_max_vocab")
        tc.dnn_max_vocab = std::stoi(value);
    else if (key == "lr_grid")
        tc.lr_grid = parse_double_list(value);
    else if (key == "ridge_grid")
        tc.ridge_grid = parse_double_list(value);
    else if (key == "forest_trees")
        tc.forest.n_trees = std::stoi(value);
    else if (key == "forest_depth")
        tc.forest.max_depth = std::stoi(value);
    else if (key == "min_leaf")
        tc.forest.min_leaf = tc.gbt.min_leaf = std::stoi(value);
    else if (key == "gbt_trees")
        tc.gbt.n_trees = std::stoi(value);
    else if (key == "gbt_depth")
        tc.gbt.max_depth = std::stoi(value);
    else if (key == "gbt_lr")
        tc.gbt.learning_rate = std::stod(value);
    else if (key == "gbt_subsample")
        tc.gbt.subsample = std::stod(value);
    else if (key == "gbt_colsample")
        tc.gbt.colsample = std::stod(value);
    else if (key == "subtree_features")
        tc.subtree_features = parse_list(value);
    else
        throw ConfigError("unknown config key: " + where);
}

}  // namespace

PipelineConfig::PipelineConfig() {
    clausal_relations.assign(default_clausal_relations().begin(), default_clausal_relations().end());

    sent.modules = {"dnn", "lr", "wiki", "punct"};
    sent.meta_features = {"word_top100", "upos_auto", "case"};

    seg.modules = {"subtree", "bow"};
    seg.meta_features = {"word_top100", "upos", "deprel", "depbracket", "sent_len"};
    seg.subtree_features = {"word_top200", "upos",     "xpos",    "case",
                            "tok_len",     "genre",    "in_quote", "in_paren",
                            "sent_pct",    "deprel",   "headdist", "depbracket"};

    conn.modules = {"freq"};
    conn.meta_candidates = {ModelKind::forest};
    conn.meta_features = {"word_top100", "upos", "deprel", "depbracket", "sent_len"};

    for (TaskConfig* tc : {&sent, &seg, &conn}) {
        tc->forest.n_trees = 200;
        tc->forest.max_depth = 12;
        tc->gbt.n_trees = 200;
        tc->gbt.max_depth = 4;
        tc->gbt.learning_rate = 0.1;
    }
}

PipelineConfig PipelineConfig::defaults() { return PipelineConfig(); }

const TaskConfig& PipelineConfig::for_task(Task t) const {
    switch (t) {
        case Task::sent: return sent;
        case Task::seg: return seg;
        default: return conn;
    }
}

TaskConfig& PipelineConfig::for_task(Task t) {
    switch (t) {
        case Task::sent: return sent;
        case Task::seg: return seg;
        default: return conn;
    }
}

PipelineConfig PipelineConfig::load_text(std::string_view text) {
    PipelineConfig cfg;
    std::string section = "global";
    int line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        std::string line = strip(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = strip(line.substr(1, line.size() - 2));
            if (section != "global" && section != "sent" && section != "seg" && section != "conn")
                throw ConfigError("unknown config section: [" + section + "]");
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + " is not key = value: " + line);
        std::string key = strip(line.substr(0, eq));
        std::string value = strip(line.substr(eq + 1));
        std::string where = section + "." + key;
        if (section == "global") {
            if (key == "seed")
                cfg.seed = std::stoull(value);
            else if (key == "jobs")
                cfg.jobs = std::stoi(value);
            else if (key == "language")
                cfg.language = value;
            else if (key == "cache_dir")
                cfg.cache_dir = value;
            else if (key == "genre_rules")
                cfg.genre_rules_path = value;
            else if (key == "clausal_relations")
                cfg.clausal_relations = parse_list(value);
            else if (key == "vowels")
                cfg.vowels = value;
            else if (key == "quote_chars")
                cfg.quote_chars = value;
            else if (key == "top_meta")
                cfg.top_meta = std::stoi(value);
            else if (key == "top_base")
                cfg.top_base = std::stoi(value);
            else
                throw ConfigError("unknown config key: " + where);
        } else {
            apply_task_key(cfg.for_task(task_from_name(section)), key, value, where);
        }
    }
    return cfg;
}

PipelineConfig PipelineConfig::load_file(const std::string& path) {
    PipelineConfig cfg = load_text(read_file(path));
    if (!cfg.genre_rules_path.empty()) cfg.genre_rule = GenreRule::parse(read_file(cfg.genre_rules_path));
    return cfg;
}

void PipelineConfig::validate() const {
    for (Task t : {Task::sent, Task::seg, Task::conn}) {
        const TaskConfig& tc = for_task(t);
        if (tc.modules.empty())
            throw ConfigError(std::string("no base modules enabled for task ") + task_name(t));
        for (const auto& m : tc.modules) {
            const auto& valid = valid_modules(t);
            if (std::find(valid.begin(), valid.end(), m) == valid.end())
                throw ConfigError(std::string("unknown base module for task ") + task_name(t) + ": " +
                                  m);
        }
        for (const auto& f : tc.meta_features)
            if (!TokenFeaturizer::known_feature(f)) throw ConfigError("unknown feature: " + f);
        for (const auto& f : tc.subtree_features)
            if (!TokenFeaturizer::known_feature(f)) throw ConfigError("unknown feature: " + f);
        if (tc.meta_window < 1 || tc.meta_window % 2 == 0)
            throw ConfigError("meta_window must be odd and >= 1");
        for (int w : tc.dnn_windows)
            if (w < 1 || w % 2 == 0) throw ConfigError("dnn_windows must be odd and >= 1");
        if (tc.meta_candidates.empty()) throw ConfigError("meta_candidates must not be empty");
        for (ModelKind k : tc.meta_candidates)
            if (k != ModelKind::forest && k != ModelKind::extratrees && k != ModelKind::gbt)
                throw ConfigError("meta candidates must be tree ensembles");
    }
    if (top_meta <= 0 || top_base <= 0) throw ConfigError("top_meta/top_base must be positive");
}

namespace {

std::string kinds_str(const std::vector<ModelKind>& kinds) {
    std::vector<std::string> names;
    for (ModelKind k : kinds) names.push_back(model_kind_name(k));
    return join(names, ",");
}

template <typename T>
std::string num_list_str(const std::vector<T>& v) {
    std::vector<std::string> parts;
    for (const auto& x : v) {
        if constexpr (std::is_same_v<T, double>)
            parts.push_back(format_double(x));
        else
            parts.push_back(std::to_string(x));
    }
    return join(parts, ",");
}

}  // namespace

std::string PipelineConfig::echo() const {
    std::ostringstream out;
    out << "global.cache_dir = " << cache_dir << '\n';
    out << "global.clausal_relations = " << join(clausal_relations, ",") << '\n';
    out << "global.genre_rules = " << genre_rules_path << '\n';
    out << "global.jobs = " << jobs << '\n';
    out << "global.language = " << language << '\n';
    out << "global.quote_chars = " << quote_chars << '\n';
    out << "global.seed = " << seed << '\n';
    out << "global.top_base = " << top_base << '\n';
    out << "global.top_meta = " << top_meta << '\n';
    out << "global.vowels = " << vowels << '\n';
    for (Task t : {Task::sent, Task::seg, Task::conn}) {
        const TaskConfig& tc = for_task(t);
        std::string p = task_name(t);
        out << p << ".dnn_batch = " << tc.mlp.batch_size << '\n';
        out << p << ".dnn_embed_dim = " << tc.mlp.embed_dim << '\n';
        out << p << ".dnn_epochs = " << tc.mlp.epochs << '\n';
        out << p << ".dnn_hidden = " << num_list_str(tc.mlp.hidden_dims) << '\n';
        out << p << ".dnn_lr = " << format_double(tc.mlp.lr) << '\n';
        out << p << ".dnn_max_vocab = " << tc.dnn_max_vocab << '\n';
        out << p << ".dnn_windows = " << num_list_str(tc.dnn_windows) << '\n';
        out << p << ".force_sentence_starts = " << (tc.force_sentence_starts ? "on" : "off") << '\n';
        out << p << ".forest_depth = " << tc.forest.max_depth << '\n';
        out << p << ".forest_trees = " << tc.forest.n_trees << '\n';
        out << p << ".gbt_colsample = " << format_double(tc.gbt.colsample) << '\n';
        out << p << ".gbt_depth = " << tc.gbt.max_depth << '\n';
        out << p << ".gbt_lr = " << format_double(tc.gbt.learning_rate) << '\n';
        out << p << ".gbt_subsample = " << format_double(tc.gbt.subsample) << '\n';
        out << p << ".gbt_trees = " << tc.gbt.n_trees << '\n';
        out << p << ".lr_grid = " << num_list_str(tc.lr_grid) << '\n';
        out << p << ".meta_candidates = " << kinds_str(tc.meta_candidates) << '\n';
        out << p << ".meta_features = " << join(tc.meta_features, ",") << '\n';
        out << p << ".meta_window = " << tc.meta_window << '\n';
        out << p << ".min_leaf = " << tc.forest.min_leaf << '\n';
        out << p << ".modules = " << join(tc.modules, ",") << '\n';
        out << p << ".ridge_grid = " << num_list_str(tc.ridge_grid) << '\n';
        out << p << ".subtree_features = " << join(tc.subtree_features, ",") << '\n';
    }
    return out.str();
}

}  // namespace gumdrop
