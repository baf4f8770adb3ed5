#include <cmath>
#include <istream>
#include <ostream>

#include "gumdrop/learners.hpp"

namespace gumdrop {

namespace {
constexpr uint32_t kModelMagic = 0x444D4447;  // "GDMD"
constexpr uint32_t kModelVersion = 1;
}  // namespace

OneHotEncoding OneHotEncoding::build(const FeatureSchema& schema) {
    OneHotEncoding enc;
    for (int i = 0; i < schema.size(); ++i) {
        const auto& e = schema.entry(i);
        Part p;
        p.is_cat = e.kind == FeatureKind::categorical;
        p.slot = schema.slot(i);
        p.offset = enc.width;
        p.width = p.is_cat ? static_cast<int>(e.vocab.size()) + 1 : 1;
        enc.width += p.width;
        enc.parts.push_back(p);
    }
    return enc;
}

void OneHotEncoding::save(BinaryWriter& w) const {
    w.u64(parts.size());
    for (const auto& p : parts) {
        w.u8(p.is_cat);
        w.i32(p.slot);
        w.i32(p.offset);
        w.i32(p.width);
    }
    w.i32(width);
}

OneHotEncoding OneHotEncoding::load(BinaryReader& r) {
    OneHotEncoding enc;
    uint64_t n = r.u64();
    enc.parts.resize(n);
    for (auto& p : enc.parts) {
        p.is_cat = r.u8();
        p.slot = r.i32();
        p.offset = r.i32();
        p.width = r.i32();
    }
    enc.width = r.i32();
    return enc;
}

std::vector<double> encode(const FeatureRecord& record, const OneHotEncoding& enc) {
    std::vector<double> out(enc.width, 0.0);
    for (const auto& p : enc.parts) {
        if (p.is_cat) {
            int id = record.cats[p.slot];
            if (id < 0 || id >= p.width) id = p.width - 1;  // UNK slot
            out[p.offset + id] = 1.0;
        } else {
            out[p.offset] = record.nums[p.slot];
        }
    }
    return out;
}

const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::logistic: return "logistic";
        case ModelKind::ridge: return "ridge";
        case ModelKind::tree: return "tree";
        case ModelKind::forest: return "forest";
        case ModelKind::extratrees: return "extratrees";
        case ModelKind::gbt: return "gbt";
        case ModelKind::mlp: return "mlp";
    }
    return "?";
}

ModelKind model_kind_from_name(std::string_view name) {
    for (ModelKind k : {ModelKind::logistic, ModelKind::ridge, ModelKind::tree, ModelKind::forest,
                        ModelKind::extratrees, ModelKind::gbt, ModelKind::mlp})
        if (name == model_kind_name(k)) return k;
    throw ConfigError("unknown model kind: " + std::string(name));
}

std::vector<double> TrainedModel::predict_proba(const FeatureSchema& schema,
                                                const FeatureRecord& r) const {
    if (schema.fingerprint() != fingerprint_)
        throw ModelIoError("schema fingerprint mismatch: record does not belong to this model");
    return do_predict_proba(r);
}

double TrainedModel::predict_value(const FeatureSchema& schema, const FeatureRecord& r) const {
    if (schema.fingerprint() != fingerprint_)
        throw ModelIoError("schema fingerprint mismatch: record does not belong to this model");
    return do_predict_value(r);
}

std::vector<double> TrainedModel::do_predict_proba(const FeatureRecord&) const {
    throw ModelIoError("model does not produce class probabilities");
}

double TrainedModel::do_predict_value(const FeatureRecord&) const {
    throw ModelIoError("model does not produce regression values");
}

void TrainedModel::save(std::ostream& os) const {
    BinaryWriter w(os);
    w.u32(kModelMagic);
    w.u32(kModelVersion);
    w.u8(static_cast<uint8_t>(kind_));
    w.u64(fingerprint_);
    w.vec_str(classes_);
    save_params(w);
}

// --------------------------------------------------------------------------
// Per-kind parameter blocks

const TreeNode& Tree::leaf_for(const std::vector<double>& x) const {
    int i = 0;
    while (nodes[i].left >= 0) i = x[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i];
}

namespace {

std::vector<double> softmax(std::vector<double> z) {
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double sum = 0;
    for (double& v : z) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return z;
}

void save_tree(BinaryWriter& w, const Tree& t) {
    w.u64(t.nodes.size());
    for (const auto& n : t.nodes) {
        w.i32(n.feature);
        w.f64(n.threshold);
        w.i32(n.left);
        w.i32(n.right);
        w.vec_f64(n.dist);
        w.f64(n.value);
    }
}

Tree load_tree(BinaryReader& r) {
    Tree t;
    t.nodes.resize(r.u64());
    for (auto& n : t.nodes) {
        n.feature = r.i32();
        n.threshold = r.f64();
        n.left = r.i32();
        n.right = r.i32();
        n.dist = r.vec_f64();
        n.value = r.f64();
    }
    return t;
}

}  // namespace

std::vector<double> LogisticModel::do_predict_proba(const FeatureRecord& r) const {
    if (constant) return constant_probs;
    auto x = encode(r, enc);
    const int K = static_cast<int>(classes_.size());
    const int D = enc.width;
    std::vector<double> z(K, 0.0);
    for (int k = 0; k < K; ++k) {
        const double* row = &weights[size_t(k) * (D + 1)];
        double dot = row[D];  // bias
        for (int j = 0; j < D; ++j) dot += row[j] * x[j];
        z[k] = dot;
    }
    return softmax(std::move(z));
}

void LogisticModel::save_params(BinaryWriter& w) const {
    enc.save(w);
    w.vec_f64(weights);
    w.f64(lambda);
    w.u8(constant);
    w.vec_f64(constant_probs);
}

double RidgeModel::do_predict_value(const FeatureRecord& r) const {
    auto x = encode(r, enc);
    double out = has_intercept ? intercept : 0.0;
    for (size_t j = 0; j < w.size(); ++j) out += w[j] * x[j];
    return out;
}

void RidgeModel::save_params(BinaryWriter& w_) const {
    enc.save(w_);
    w_.vec_f64(w);
    w_.f64(intercept);
    w_.u8(has_intercept);
    w_.f64(lambda);
}

std::vector<double> ForestModel::do_predict_proba(const FeatureRecord& r) const {
    auto x = encode(r, enc);
    std::vector<double> probs(classes_.size(), 0.0);
    for (const auto& t : trees) {
        const auto& leaf = t.leaf_for(x);
        for (size_t k = 0; k < probs.size(); ++k) probs[k] += leaf.dist[k];
    }
    double inv = 1.0 / double(trees.size());
    double sum = 0;
    for (double& p : probs) {
        p *= inv;
        sum += p;
    }
    if (sum > 0)
        for (double& p : probs) p /= sum;
    return probs;
}

void ForestModel::save_params(BinaryWriter& w) const {
    enc.save(w);
    w.u64(trees.size());
    for (const auto& t : trees) save_tree(w, t);
}

std::vector<double> GbtModel::do_predict_proba(const FeatureRecord& r) const {
    if (constant) return constant_probs;
    auto x = encode(r, enc);
    std::vector<double> margin = base_margin;
    for (const auto& stage : stages)
        for (int s = 0; s < n_stacks; ++s) margin[s] += stage[s].leaf_for(x).value;
    const int K = static_cast<int>(classes_.size());
    std::vector<double> probs(K, 0.0);
    if (n_stacks == 1) {
        double p1 = 1.0 / (1.0 + std::exp(-margin[0]));
        probs[0] = 1.0 - p1;
        probs[1] = p1;
    } else {
        double sum = 0;
        for (int k = 0; k < K; ++k) {
            probs[k] = 1.0 / (1.0 + std::exp(-margin[k]));
            sum += probs[k];
        }
        if (sum <= 0) {
            for (double& p : probs) p = 1.0 / K;
        } else {
            for (double& p : probs) p /= sum;
        }
    }
    return probs;
}

void GbtModel::save_params(BinaryWriter& w) const {
    enc.save(w);
    w.i32(n_stacks);
    w.vec_f64(base_margin);
    w.u64(stages.size());
    for (const auto& stage : stages)
        for (const auto& t : stage) save_tree(w, t);
    w.vec_f64(train_loss);
    w.u8(constant);
    w.vec_f64(constant_probs);
}

void MlpModel::save_params(BinaryWriter& w) const {
    w.vec_i32(cat_vocab);
    w.i32(n_num);
    w.i32(embed_dim);
    w.vec_i32(hidden);
    w.vec_f64(params);
}

// --------------------------------------------------------------------------
// Load dispatch

std::unique_ptr<TrainedModel> load_model_params(BinaryReader& r, ModelKind kind, uint64_t fp,
                                                std::vector<std::string> classes) {
    switch (kind) {
        case ModelKind::logistic: {
            auto m = std::make_unique<LogisticModel>(fp, std::move(classes));
            m->enc = OneHotEncoding::load(r);
            m->weights = r.vec_f64();
            m->lambda = r.f64();
            m->constant = r.u8();
            m->constant_probs = r.vec_f64();
            return m;
        }
        case ModelKind::ridge: {
            auto m = std::make_unique<RidgeModel>(fp);
            m->enc = OneHotEncoding::load(r);
            m->w = r.vec_f64();
            m->intercept = r.f64();
            m->has_intercept = r.u8();
            m->lambda = r.f64();
            return m;
        }
        case ModelKind::tree:
        case ModelKind::forest:
        case ModelKind::extratrees: {
            auto m = std::make_unique<ForestModel>(kind, fp, std::move(classes));
            m->enc = OneHotEncoding::load(r);
            m->trees.resize(r.u64());
            for (auto& t : m->trees) t = load_tree(r);
            return m;
        }
        case ModelKind::gbt: {
            auto m = std::make_unique<GbtModel>(fp, std::move(classes));
            m->enc = OneHotEncoding::load(r);
            m->n_stacks = r.i32();
            m->base_margin = r.vec_f64();
            m->stages.resize(r.u64());
            for (auto& stage : m->stages) {
                stage.resize(m->n_stacks);
                for (auto& t : stage) t = load_tree(r);
            }
            m->train_loss = r.vec_f64();
            m->constant = r.u8();
            m->constant_probs = r.vec_f64();
            return m;
        }
        case ModelKind::mlp: {
            auto m = std::make_unique<MlpModel>(fp, std::move(classes));
            m->cat_vocab = r.vec_i32();
            m->n_num = r.i32();
            m->embed_dim = r.i32();
            m->hidden = r.vec_i32();
            m->params = r.vec_f64();
            return m;
        }
    }
    throw ModelIoError("unknown model kind in file");
}

std::unique_ptr<TrainedModel> TrainedModel::load(std::istream& is) {
    BinaryReader r(is);
    if (r.u32() != kModelMagic) throw ModelIoError("not a model file");
    uint32_t version = r.u32();
    if (version != kModelVersion)
        throw ModelIoError("unsupported model container version " + std::to_string(version));
    ModelKind kind = static_cast<ModelKind>(r.u8());
    uint64_t fp = r.u64();
    auto classes = r.vec_str();
    return load_model_params(r, kind, fp, std::move(classes));
}

}  // namespace gumdrop
