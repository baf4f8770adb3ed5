#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "gumdrop/featurizer.hpp"
#include "gumdrop/serialize.hpp"

namespace gumdrop {

// ---------------------------------------------------------------------------
// Datasets and one-hot encoding

struct Dataset {
    FeatureSchema schema;
    std::vector<FeatureRecord> records;
    std::vector<int> labels;         // class ids (classification)
    std::vector<double> targets;     // regression targets
    std::vector<std::string> classes;

    bool is_classification() const { return !classes.empty(); }
    size_t size() const { return records.size(); }
};

// Dense layout: one block of |vocab|+1 slots per categorical entry (UNK
// last), one slot per numeric entry.
struct OneHotEncoding {
    struct Part {
        uint8_t is_cat = 0;
        int slot = 0;    // index into FeatureRecord cats/nums
        int offset = 0;  // column in the dense vector
        int width = 1;
    };
    std::vector<Part> parts;
    int width = 0;

    static OneHotEncoding build(const FeatureSchema& schema);
    void save(BinaryWriter& w) const;
    static OneHotEncoding load(BinaryReader& r);
};

std::vector<double> encode(const FeatureRecord& record, const OneHotEncoding& enc);

// ---------------------------------------------------------------------------
// Trained models

enum class ModelKind : uint8_t { logistic, ridge, tree, forest, extratrees, gbt, mlp };
const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(std::string_view name);

class TrainedModel {
public:
    virtual ~TrainedModel() = default;

    ModelKind kind() const { return kind_; }
    uint64_t schema_fingerprint() const { return fingerprint_; }
    const std::vector<std::string>& classes() const { return classes_; }

    // Probabilities per class, summing to 1. Rejects records from a
    // different schema.
    std::vector<double> predict_proba(const FeatureSchema& schema, const FeatureRecord& r) const;
    double predict_value(const FeatureSchema& schema, const FeatureRecord& r) const;

    void save(std::ostream& os) const;
    static std::unique_ptr<TrainedModel> load(std::istream& is);

protected:
    TrainedModel(ModelKind kind, uint64_t fingerprint, std::vector<std::string> classes)
        : kind_(kind), fingerprint_(fingerprint), classes_(std::move(classes)) {}
    virtual std::vector<double> do_predict_proba(const FeatureRecord& r) const;
    virtual double do_predict_value(const FeatureRecord& r) const;
    virtual void save_params(BinaryWriter& w) const = 0;

    ModelKind kind_;
    uint64_t fingerprint_ = 0;
    std::vector<std::string> classes_;

    friend std::unique_ptr<TrainedModel> load_model_params(BinaryReader&, ModelKind, uint64_t,
                                                           std::vector<std::string>);
};

// Multinomial logistic regression over the one-hot expansion, bias
// unregularized, optimized by full-batch descent with backtracking steps.
class LogisticModel final : public TrainedModel {
public:
    OneHotEncoding enc;
    std::vector<double> weights;  // (K) x (width+1), row-major, bias last
    double lambda = 0.0;
    bool constant = false;
    std::vector<double> constant_probs;

    LogisticModel(uint64_t fp, std::vector<std::string> classes)
        : TrainedModel(ModelKind::logistic, fp, std::move(classes)) {}

protected:
    std::vector<double> do_predict_proba(const FeatureRecord& r) const override;
    void save_params(BinaryWriter& w) const override;
};

class RidgeModel final : public TrainedModel {
public:
    OneHotEncoding enc;
    std::vector<double> w;
    double intercept = 0.0;
    bool has_intercept = true;
    double lambda = 0.0;

    explicit RidgeModel(uint64_t fp) : TrainedModel(ModelKind::ridge, fp, {}) {}

protected:
    double do_predict_value(const FeatureRecord& r) const override;
    void save_params(BinaryWriter& w) const override;
};

struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;  // leaf when left < 0
    std::vector<double> dist;   // classification leaves
    double value = 0.0;         // regression leaves
};

struct Tree {
    std::vector<TreeNode> nodes;
    const TreeNode& leaf_for(const std::vector<double>& x) const;
};

// Single CART tree, bagged random forest, or extremely randomized trees;
// leaves hold class distributions and prediction averages them.
class ForestModel final : public TrainedModel {
public:
    OneHotEncoding enc;
    std::vector<Tree> trees;

    ForestModel(ModelKind kind, uint64_t fp, std::vector<std::string> classes)
        : TrainedModel(kind, fp, std::move(classes)) {}

protected:
    std::vector<double> do_predict_proba(const FeatureRecord& r) const override;
    void save_params(BinaryWriter& w) const override;
};

// Stage-wise boosted one-vs-rest margins with shrinkage; leaf values carry
// an L2-regularized Newton step and are pre-scaled by the learning rate.
class GbtModel final : public TrainedModel {
public:
    OneHotEncoding enc;
    int n_stacks = 1;  // 1 for binary, K for multiclass
    std::vector<double> base_margin;
    std::vector<std::vector<Tree>> stages;  // stages[s][stack]
    std::vector<double> train_loss;         // per stage, non-increasing
    bool constant = false;
    std::vector<double> constant_probs;

    GbtModel(uint64_t fp, std::vector<std::string> classes)
        : TrainedModel(ModelKind::gbt, fp, std::move(classes)) {}

protected:
    std::vector<double> do_predict_proba(const FeatureRecord& r) const override;
    void save_params(BinaryWriter& w) const override;
};

// Embedding MLP: one trainable table per categorical slot, concatenated with
// numeric features into ReLU layers and a softmax output.
class MlpModel final : public TrainedModel {
public:
    std::vector<int> cat_vocab;  // vocabulary size per categorical slot (UNK adds one row)
    int n_num = 0;
    int embed_dim = 0;
    std::vector<int> hidden;
    std::vector<double> params;  // embeddings, then W/b per layer

    MlpModel(uint64_t fp, std::vector<std::string> classes)
        : TrainedModel(ModelKind::mlp, fp, std::move(classes)) {}

    size_t param_count() const;
    // Mean cross-entropy over the given rows plus its gradient; exposed so
    // the analytic gradient can be checked against finite differences.
    double loss_and_grad(const std::vector<FeatureRecord>& records, const std::vector<int>& labels,
                         std::vector<double>& grad) const;

protected:
    std::vector<double> do_predict_proba(const FeatureRecord& r) const override;
    void save_params(BinaryWriter& w) const override;
};

// ---------------------------------------------------------------------------
// Training

struct LinearParams {
    int max_epochs = 500;
    double tol = 1e-6;
    int cv_folds = 5;
    uint64_t seed = 1;
    bool fit_intercept = true;
};

// task must be logistic (labels) or ridge (targets); the regularization
// strength is picked by internal cross-validation over reg_grid.
std::unique_ptr<TrainedModel> train_linear(const Dataset& ds, ModelKind task,
                                           const std::vector<double>& reg_grid,
                                           const LinearParams& params = {});

struct TreeParams {
    int n_trees = 200;
    int max_depth = 12;
    int min_leaf = 1;
    double learning_rate = 0.1;
    double subsample = 1.0;
    double colsample = 1.0;
    double leaf_l2 = 1.0;
    uint64_t seed = 1;
    int jobs = 1;
};

std::unique_ptr<TrainedModel> train_tree_ensemble(const Dataset& ds, ModelKind kind,
                                                  const TreeParams& params);

struct MlpParams {
    int embed_dim = 16;
    std::vector<int> hidden_dims = {32};
    int window = 5;
    int epochs = 10;
    double lr = 0.05;
    int batch_size = 32;
    uint64_t seed = 1;
};

std::unique_ptr<TrainedModel> train_mlp(const Dataset& ds, const MlpParams& params);

// Loss/gradient of the regularized multinomial logistic objective; the
// finite-difference oracle in the tests drives this directly.
double logistic_loss_grad(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                          int n_classes, const std::vector<double>& W, double lambda,
                          std::vector<double>* grad);

}  // namespace gumdrop
