#pragma once

#include <string>
#include <vector>

#include "gumdrop/corpus.hpp"
#include "gumdrop/learners.hpp"

namespace gumdrop {

// Per-task pipeline settings; [global] keys apply to every task.
struct TaskConfig {
    std::vector<std::string> modules;
    std::vector<ModelKind> meta_candidates = {ModelKind::forest, ModelKind::extratrees,
                                              ModelKind::gbt};
    std::vector<std::string> meta_features;
    int meta_window = 3;
    bool force_sentence_starts = true;  // segmentation only
    std::vector<int> dnn_windows = {5, 7, 9};
    MlpParams mlp;
    std::vector<double> lr_grid = {0.01, 0.1, 1.0};
    std::vector<double> ridge_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
    TreeParams forest;       // forest/extratrees metalearner defaults
    TreeParams gbt;          // boosted bases and metalearner
    int dnn_max_vocab = 10000;
    std::vector<std::string> subtree_features;  // segmentation base features
};

struct PipelineConfig {
    uint64_t seed = 42;
    int jobs = 1;
    std::string language = "generic";
    std::string cache_dir;
    std::string genre_rules_path;
    GenreRule genre_rule;
    std::vector<std::string> clausal_relations;
    std::string vowels;       // empty = default set
    std::string quote_chars;  // empty = default set
    int top_meta = 100;
    int top_base = 200;

    TaskConfig sent, seg, conn;

    PipelineConfig();

    const TaskConfig& for_task(Task t) const;
    TaskConfig& for_task(Task t);

    static PipelineConfig defaults();
    static PipelineConfig load_text(std::string_view text);
    static PipelineConfig load_file(const std::string& path);

    // Checks module names, feature names and window sizes; throws ConfigError.
    void validate() const;

    // Resolved key=value echo, stable order, one key per line.
    std::string echo() const;
};

}  // namespace gumdrop
