#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "gumdrop/corpus.hpp"
#include "gumdrop/learners.hpp"

namespace gumdrop {

struct TokenKey {
    int doc = 0;   // document index in the corpus vector
    int sent = 0;  // 0-based sentence offset
    int tok = 0;   // 1-based token index

    auto operator<=>(const TokenKey&) const = default;
};

// One base module's output for one token: an optional label plus a numeric
// vector (class probabilities for classifiers, raw features otherwise).
struct TokenPred {
    std::string label;
    std::vector<double> values;
};

struct PredColumn {
    std::string module_id;
    std::vector<std::string> label_set;    // empty for numeric-only modules
    std::vector<std::string> value_names;
    std::vector<TokenPred> rows;           // corpus enumeration order (doc, sent, tok)
};

// Sentence-granular row selection; folds and trainers share it.
struct SentMask {
    std::vector<std::vector<uint8_t>> keep;  // [doc][sentence]

    bool selected(int doc, int sent) const { return keep[doc][sent] != 0; }
};

struct FoldAssignment {
    int k = 0;
    bool sentence_level = false;
    std::vector<std::vector<int>> fold_of;  // [doc][sentence] -> fold id

    SentMask train_mask(int fold) const;  // complement of the fold
    SentMask pred_mask(int fold) const;
};

// Near-equal folds over documents; corpora with fewer documents than k fall
// back to sentence-level folding.
FoldAssignment make_folds(const std::vector<Document>& docs, int k, uint64_t seed);

class BasePredictor {
public:
    virtual ~BasePredictor() = default;
    virtual std::vector<TokenPred> predict_doc(const Document& doc) const = 0;
};

struct BaseTrainResult {
    std::unique_ptr<BasePredictor> predictor;
    std::vector<TokenKey> used_tokens;  // instrumentation: tokens the trainer consumed
};

struct BaseModule {
    std::string id;
    std::vector<std::string> label_set;
    std::vector<std::string> value_names;
    std::function<BaseTrainResult(const std::vector<Document>&, const SentMask&)> train;
    const PredColumn* external = nullptr;  // stored predictions instead of training
};

struct MultitrainResult {
    PredColumn column;
    std::vector<std::vector<TokenKey>> fold_train_keys;
    std::vector<std::vector<TokenKey>> fold_pred_keys;
};

// Out-of-fold predictions: for each fold, train on its complement and
// predict the fold, so the metalearner sees honest base-module behavior.
MultitrainResult multitrain(const BaseModule& module, const std::vector<Document>& docs,
                            const FoldAssignment& folds);

// Cache layer over multitrain keyed by (corpus hash, module id, fold seed).
PredColumn multitrain_cached(const BaseModule& module, const std::vector<Document>& docs,
                             const FoldAssignment& folds, const std::string& cache_dir,
                             uint64_t seed);

std::vector<TokenKey> corpus_keys(const std::vector<Document>& docs);

// doc<TAB>sent<TAB>tok<TAB>label<TAB>v1,v2,... rows in enumeration order.
std::string serialize_column(const PredColumn& column, const std::vector<Document>& docs);

// Stored third-party predictions; validates complete coverage of the corpus
// and renormalizes probability rows that do not sum to 1 within 1e-6.
PredColumn ingest_external(std::string_view file_text, const std::vector<Document>& docs,
                           const std::string& module_id, std::ostream* warnings = nullptr);

// Internal cache reload: exact values, no renormalization.
PredColumn parse_column_cache(std::string_view file_text, const std::vector<Document>& docs,
                              const PredColumn& spec);

std::vector<std::string> task_classes(Task task);
std::vector<int> task_positive_ids(Task task);
int gold_class_id(const Token& t, Task task);

class TokenFeaturizer;  // featurizer.hpp

// Combined metalearner schema: per-module probability/label entries followed
// by window-expanded token features.
FeatureSchema build_meta_schema(const std::vector<PredColumn>& columns, const TokenFeaturizer& feat,
                                const std::vector<std::string>& token_features, int window,
                                const std::vector<Document>& docs);

// One row per token: module outputs plus token features, labeled with the
// task's gold classes.
Dataset assemble_meta(const std::vector<PredColumn>& columns, const std::vector<Document>& docs,
                      const TokenFeaturizer& feat, const FeatureSchema& schema, Task task);

// Micro-F over the positive classes with exact label match.
double dataset_f1(const TrainedModel& model, const Dataset& ds, const std::vector<int>& positive_ids);

// Trains every candidate kind and keeps the one with the best dev F;
// ties go to the earlier candidate.
std::unique_ptr<TrainedModel> train_meta(const Dataset& train, const std::vector<ModelKind>& candidates,
                                         const Dataset& dev, const TreeParams& params, Task task);

}  // namespace gumdrop
