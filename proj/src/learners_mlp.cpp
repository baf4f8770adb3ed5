#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "gumdrop/learners.hpp"

namespace gumdrop {

namespace {

struct XorRng {
    uint64_t state;
    explicit XorRng(uint64_t seed) : state(seed ? seed : 0x2545F4914F6CDD1Dull) {}
    uint64_t next() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return state;
    }
    double unit() { return double(next() >> 11) * 0x1.0p-53; }
    size_t index(size_t n) { return n ? next() % n : 0; }
};

struct Layout {
    std::vector<size_t> embed_off;  // per categorical slot
    struct Layer {
        size_t w_off = 0, b_off = 0;
        int in = 0, out = 0;
    };
    std::vector<Layer> layers;
    size_t total = 0;
    int input_dim = 0;
};

Layout make_layout(const std::vector<int>& cat_vocab, int embed_dim, int n_num,
                   const std::vector<int>& hidden, int n_classes) {
    Layout lt;
    size_t off = 0;
    for (int v : cat_vocab) {
        lt.embed_off.push_back(off);
        off += size_t(v + 1) * embed_dim;  // +1 row for UNK
    }
    lt.input_dim = static_cast<int>(cat_vocab.size()) * embed_dim + n_num;
    int in = lt.input_dim;
    std::vector<int> dims = hidden;
    dims.push_back(n_classes);
    for (int out : dims) {
        Layout::Layer l;
        l.in = in;
        l.out = out;
        l.w_off = off;
        off += size_t(out) * in;
        l.b_off = off;
        off += out;
        lt.layers.push_back(l);
        in = out;
    }
    lt.total = off;
    return lt;
}

// Gathers embeddings and numeric features into one input row.
void fill_input(const MlpModel& m, const Layout& lt, const double* params, const FeatureRecord& r,
                double* out) {
    int col = 0;
    for (size_t c = 0; c < m.cat_vocab.size(); ++c) {
        int id = r.cats[c];
        if (id < 0 || id > m.cat_vocab[c]) id = m.cat_vocab[c];
        const double* row = params + lt.embed_off[c] + size_t(id) * m.embed_dim;
        for (int k = 0; k < m.embed_dim; ++k) out[col++] = row[k];
    }
    for (int k = 0; k < m.n_num; ++k) out[col++] = r.nums[k];
}

struct ForwardState {
    std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts.back() = probabilities
    std::vector<Eigen::MatrixXd> zs;    // pre-activations per layer
};

double forward_batch(const MlpModel& m, const Layout& lt, const double* params,
                     const std::vector<FeatureRecord>& records, const std::vector<int>& rows,
                     const std::vector<int>* labels, ForwardState* st) {
    const int b = static_cast<int>(rows.size());
    Eigen::MatrixXd in(b, lt.input_dim);
    std::vector<double> buf(lt.input_dim);
    for (int i = 0; i < b; ++i) {
        fill_input(m, lt, params, records[rows[i]], buf.data());
        for (int j = 0; j < lt.input_dim; ++j) in(i, j) = buf[j];
    }
    ForwardState local;
    ForwardState& s = st ? *st : local;
    s.acts.clear();
    s.zs.clear();
    s.acts.push_back(std::move(in));
    for (size_t l = 0; l < lt.layers.size(); ++l) {
        const auto& L = lt.layers[l];
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(
            params + L.w_off, L.out, L.in);
        Eigen::Map<const Eigen::VectorXd> bias(params + L.b_off, L.out);
        Eigen::MatrixXd z = s.acts.back() * W.transpose();
        z.rowwise() += bias.transpose();
        if (l + 1 < lt.layers.size()) {
            s.zs.push_back(z);
            s.acts.push_back(z.cwiseMax(0.0));
        } else {
            s.zs.push_back(z);
            // softmax rows
            for (int i = 0; i < b; ++i) {
                double mx = z.row(i).maxCoeff();
                z.row(i) = (z.row(i).array() - mx).exp();
                z.row(i) /= z.row(i).sum();
            }
            s.acts.push_back(std::move(z));
        }
    }
    if (!labels) return 0.0;
    double loss = 0;
    const Eigen::MatrixXd& P = s.acts.back();
    for (int i = 0; i < b; ++i) loss -= std::log(std::max(P(i, (*labels)[rows[i]]), 1e-300));
    return loss / b;
}

void backward_batch(const MlpModel& m, const Layout& lt, const double* params,
                    const std::vector<FeatureRecord>& records, const std::vector<int>& rows,
                    const std::vector<int>& labels, const ForwardState& s, double* grad) {
    const int b = static_cast<int>(rows.size());
    Eigen::MatrixXd dz = s.acts.back();
    for (int i = 0; i < b; ++i) dz(i, labels[rows[i]]) -= 1.0;
    dz /= double(b);
    for (int l = static_cast<int>(lt.layers.size()) - 1; l >= 0; --l) {
        const auto& L = lt.layers[l];
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(
            params + L.w_off, L.out, L.in);
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gW(
            grad + L.w_off, L.out, L.in);
        Eigen::Map<Eigen::VectorXd> gb(grad + L.b_off, L.out);
        gW += dz.transpose() * s.acts[l];
        gb += dz.colwise().sum().transpose();
        if (l == 0) {
            Eigen::MatrixXd din = dz * W;
            // Scatter the embedding part back into the tables.
            for (int i = 0; i < b; ++i) {
                const FeatureRecord& r = records[rows[i]];
                for (size_t c = 0; c < m.cat_vocab.size(); ++c) {
                    int id = r.cats[c];
                    if (id < 0 || id > m.cat_vocab[c]) id = m.cat_vocab[c];
                    double* gr = grad + lt.embed_off[c] + size_t(id) * m.embed_dim;
                    for (int k = 0; k < m.embed_dim; ++k)
                        gr[k] += din(i, static_cast<int>(c) * m.embed_dim + k);
                }
            }
        } else {
            Eigen::MatrixXd din = dz * W;
            dz = din.cwiseProduct((s.zs[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
}

}  // namespace

size_t MlpModel::param_count() const {
    return make_layout(cat_vocab, embed_dim, n_num, hidden, static_cast<int>(classes_.size())).total;
}

double MlpModel::loss_and_grad(const std::vector<FeatureRecord>& records, const std::vector<int>& labels,
                               std::vector<double>& grad) const {
    Layout lt = make_layout(cat_vocab, embed_dim, n_num, hidden, static_cast<int>(classes_.size()));
    grad.assign(lt.total, 0.0);
    std::vector<int> rows(records.size());
    std::iota(rows.begin(), rows.end(), 0);
    ForwardState st;
    double loss = forward_batch(*this, lt, params.data(), records, rows, &labels, &st);
    backward_batch(*this, lt, params.data(), records, rows, labels, st, grad.data());
    return loss;
}

std::vector<double> MlpModel::do_predict_proba(const FeatureRecord& r) const {
    Layout lt = make_layout(cat_vocab, embed_dim, n_num, hidden, static_cast<int>(classes_.size()));
    std::vector<FeatureRecord> one = {r};
    std::vector<int> rows = {0};
    ForwardState st;
    forward_batch(*this, lt, params.data(), one, rows, nullptr, &st);
    const Eigen::MatrixXd& P = st.acts.back();
    std::vector<double> probs(classes_.size());
    double sum = 0;
    for (size_t k = 0; k < probs.size(); ++k) {
        probs[k] = P(0, static_cast<int>(k));
        sum += probs[k];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

std::unique_ptr<TrainedModel> train_mlp(const Dataset& ds, const MlpParams& params) {
    if (ds.records.empty()) throw TrainError("train_mlp: empty dataset");
    if (ds.labels.size() != ds.size()) throw TrainError("train_mlp: labels missing");
    if (params.embed_dim < 1) throw TrainError("train_mlp: embed_dim must be >= 1");

    auto model = std::make_unique<MlpModel>(ds.schema.fingerprint(), ds.classes);
    model->embed_dim = params.embed_dim;
    model->hidden = params.hidden_dims;
    for (int i = 0; i < ds.schema.size(); ++i) {
        const auto& e = ds.schema.entry(i);
        if (e.kind == FeatureKind::categorical)
            model->cat_vocab.push_back(static_cast<int>(e.vocab.size()));
        else
            model->n_num++;
    }
    Layout lt = make_layout(model->cat_vocab, model->embed_dim, model->n_num, model->hidden,
                            static_cast<int>(ds.classes.size()));
    XorRng rng(params.seed);
    model->params.resize(lt.total);
    for (auto& p : model->params) p = rng.unit() * 0.2 - 0.1;

    std::vector<int> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad(lt.total);
    const int batch = std::max(1, params.batch_size);
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        for (size_t i = 0; i + 1 < order.size(); ++i) {
            size_t j = i + rng.index(order.size() - i);
            std::swap(order[i], order[j]);
        }
        for (size_t start = 0; start < order.size(); start += batch) {
            size_t stop = std::min(order.size(), start + batch);
            std::vector<int> rows(order.begin() + start, order.begin() + stop);
            std::fill(grad.begin(), grad.end(), 0.0);
            ForwardState st;
            forward_batch(*model, lt, model->params.data(), ds.records, rows, &ds.labels, &st);
            backward_batch(*model, lt, model->params.data(), ds.records, rows, ds.labels, st,
                           grad.data());
            for (size_t p = 0; p < lt.total; ++p) model->params[p] -= params.lr * grad[p];
        }
    }
    return model;
}

}  // namespace gumdrop
