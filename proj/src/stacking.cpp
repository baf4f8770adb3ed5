#include "gumdrop/stacking.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "gumdrop/featurizer.hpp"

namespace gumdrop {

namespace {

struct ShuffleRng {
    uint64_t state;
    explicit ShuffleRng(uint64_t seed) : state(seed ? seed : 0x9E3779B97F4A7C15ull) {}
    uint64_t next() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return state;
    }
    size_t index(size_t n) { return n ? next() % n : 0; }
};

template <typename T>
void shuffle_vec(std::vector<T>& v, ShuffleRng& rng) {
    for (size_t i = 0; i + 1 < v.size(); ++i) {
        size_t j = i + rng.index(v.size() - i);
        std::swap(v[i], v[j]);
    }
}

}  // namespace

SentMask FoldAssignment::train_mask(int fold) const {
    SentMask m;
    m.keep.resize(fold_of.size());
    for (size_t d = 0; d < fold_of.size(); ++d) {
        m.keep[d].resize(fold_of[d].size());
        for (size_t s = 0; s < fold_of[d].size(); ++s) m.keep[d][s] = fold_of[d][s] != fold;
    }
    return m;
}

SentMask FoldAssignment::pred_mask(int fold) const {
    SentMask m;
    m.keep.resize(fold_of.size());
    for (size_t d = 0; d < fold_of.size(); ++d) {
        m.keep[d].resize(fold_of[d].size());
        for (size_t s = 0; s < fold_of[d].size(); ++s) m.keep[d][s] = fold_of[d][s] == fold;
    }
    return m;
}

FoldAssignment make_folds(const std::vector<Document>& docs, int k, uint64_t seed) {
    if (docs.empty()) throw TrainError("make_folds: empty corpus");
    if (k < 2) throw TrainError("make_folds: k must be >= 2");
    FoldAssignment fa;
    fa.k = k;
    fa.fold_of.resize(docs.size());
    for (size_t d = 0; d < docs.size(); ++d) fa.fold_of[d].resize(docs[d].sentences.size(), 0);

    ShuffleRng rng(seed);
    if (docs.size() >= size_t(k)) {
        std::vector<int> order(docs.size());
        std::iota(order.begin(), order.end(), 0);
        shuffle_vec(order, rng);
        for (size_t pos = 0; pos < order.size(); ++pos) {
            int fold = static_cast<int>(pos) % k;
            for (auto& f : fa.fold_of[order[pos]]) f = fold;
        }
    } else {
        fa.sentence_level = true;
        std::vector<std::pair<int, int>> sents;
        for (size_t d = 0; d < docs.size(); ++d)
            for (size_t s = 0; s < docs[d].sentences.size(); ++s)
                sents.emplace_back(static_cast<int>(d), static_cast<int>(s));
        shuffle_vec(sents, rng);
        for (size_t pos = 0; pos < sents.size(); ++pos)
            fa.fold_of[sents[pos].first][sents[pos].second] = static_cast<int>(pos) % k;
    }
    return fa;
}

std::vector<TokenKey> corpus_keys(const std::vector<Document>& docs) {
    std::vector<TokenKey> keys;
    for (size_t d = 0; d < docs.size(); ++d)
        for (size_t s = 0; s < docs[d].sentences.size(); ++s)
            for (const auto& t : docs[d].sentences[s].tokens)
                keys.push_back({static_cast<int>(d), static_cast<int>(s), t.index});
    return keys;
}

namespace {

// Flat offsets of each (doc, sentence) block in enumeration order.
std::vector<std::vector<size_t>> sentence_offsets(const std::vector<Document>& docs) {
    std::vector<std::vector<size_t>> off(docs.size());
    size_t pos = 0;
    for (size_t d = 0; d < docs.size(); ++d) {
        off[d].resize(docs[d].sentences.size());
        for (size_t s = 0; s < docs[d].sentences.size(); ++s) {
            off[d][s] = pos;
            pos += docs[d].sentences[s].tokens.size();
        }
    }
    return off;
}

size_t total_tokens(const std::vector<Document>& docs) {
    size_t n = 0;
    for (const auto& d : docs) n += d.token_count();
    return n;
}

}  // namespace

MultitrainResult multitrain(const BaseModule& module, const std::vector<Document>& docs,
                            const FoldAssignment& folds) {
    MultitrainResult result;
    result.column.module_id = module.id;
    result.column.label_set = module.label_set;
    result.column.value_names = module.value_names;
    result.column.rows.resize(total_tokens(docs));
    result.fold_train_keys.resize(folds.k);
    result.fold_pred_keys.resize(folds.k);

    if (module.external) {
        result.column = *module.external;
        result.column.module_id = module.id;
        return result;
    }

    auto offsets = sentence_offsets(docs);
    for (int fold = 0; fold < folds.k; ++fold) {
        SentMask train = folds.train_mask(fold);
        BaseTrainResult trained;
        try {
            trained = module.train(docs, train);
        } catch (const std::exception& e) {
            throw TrainError("multitrain: module '" + module.id + "' failed on fold " +
                             std::to_string(fold) + ": " + e.what());
        }
        result.fold_train_keys[fold] = std::move(trained.used_tokens);
        for (size_t d = 0; d < docs.size(); ++d) {
            bool any = false;
            for (size_t s = 0; s < docs[d].sentences.size(); ++s)
                any |= folds.fold_of[d][s] == fold;
            if (!any) continue;
            auto preds = trained.predictor->predict_doc(docs[d]);
            size_t flat = 0;
            for (size_t s = 0; s < docs[d].sentences.size(); ++s) {
                const auto& sent = docs[d].sentences[s];
                for (const auto& t : sent.tokens) {
                    if (folds.fold_of[d][s] == fold) {
                        result.column.rows[offsets[d][s] + size_t(t.index - 1)] = preds.at(flat);
                        result.fold_pred_keys[fold].push_back(
                            {static_cast<int>(d), static_cast<int>(s), t.index});
                    }
                    ++flat;
                }
            }
        }
    }
    return result;
}

std::string serialize_column(const PredColumn& column, const std::vector<Document>& docs) {
    std::ostringstream out;
    size_t i = 0;
    for (const auto& doc : docs) {
        for (size_t s = 0; s < doc.sentences.size(); ++s) {
            for (const auto& t : doc.sentences[s].tokens) {
                const TokenPred& p = column.rows.at(i++);
                out << doc.name << '\t' << s << '\t' << t.index << '\t'
                    << (p.label.empty() ? "_" : p.label) << '\t';
                for (size_t v = 0; v < p.values.size(); ++v) {
                    if (v) out << ',';
                    out << format_double(p.values[v]);
                }
                out << '\n';
            }
        }
    }
    return out.str();
}

namespace {

struct FileRow {
    std::string label;
    std::vector<double> values;
};

std::map<std::tuple<std::string, int, int>, FileRow> parse_rows(std::string_view text) {
    std::map<std::tuple<std::string, int, int>, FileRow> rows;
    int line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        std::string line = strip(raw);
        if (line.empty() || line[0] == '#') continue;
        auto cols = split(line, '\t');
        if (cols.size() != 5)
            throw ParseError("prediction row " + std::to_string(line_no) + ": expected 5 columns");
        auto key = std::make_tuple(cols[0], std::stoi(cols[1]), std::stoi(cols[2]));
        if (rows.count(key))
            throw ParseError("duplicate prediction for token " + cols[0] + ":" + cols[1] + ":" + cols[2]);
        FileRow row;
        row.label = cols[3] == "_" ? "" : cols[3];
        if (!cols[4].empty())
            for (const auto& v : split(cols[4], ',')) row.values.push_back(std::stod(v));
        rows.emplace(std::move(key), std::move(row));
    }
    return rows;
}

PredColumn align_rows(const std::map<std::tuple<std::string, int, int>, FileRow>& rows,
                      const std::vector<Document>& docs, const std::string& module_id,
                      bool renormalize, std::ostream* warnings) {
    PredColumn col;
    col.module_id = module_id;
    size_t arity = 0;
    bool arity_set = false;
    std::set<std::string> labels;
    for (const auto& doc : docs) {
        for (size_t s = 0; s < doc.sentences.size(); ++s) {
            for (const auto& t : doc.sentences[s].tokens) {
                auto it = rows.find(std::make_tuple(doc.name, static_cast<int>(s), t.index));
                if (it == rows.end())
                    throw ParseError("missing prediction for token " + doc.name + ":" +
                                     std::to_string(s) + ":" + std::to_string(t.index));
                TokenPred p;
                p.label = it->second.label;
                p.values = it->second.values;
                if (!arity_set) {
                    arity = p.values.size();
                    arity_set = true;
                } else if (p.values.size() != arity) {
                    throw ParseError("inconsistent value arity for token " + doc.name + ":" +
                                     std::to_string(s) + ":" + std::to_string(t.index));
                }
                if (!p.label.empty()) labels.insert(p.label);
                if (renormalize && !p.values.empty()) {
                    double sum = 0;
                    for (double v : p.values) sum += v;
                    if (std::abs(sum - 1.0) > 1e-6) {
                        if (warnings)
                            *warnings << "warning: renormalizing probabilities for " << doc.name << ":"
                                      << s << ":" << t.index << " (sum " << format_double(sum) << ")\n";
                        if (sum > 0) {
                            for (double& v : p.values) v /= sum;
                        } else {
                            for (double& v : p.values) v = 1.0 / double(p.values.size());
                        }
                    }
                }
                col.rows.push_back(std::move(p));
            }
        }
    }
    col.label_set.assign(labels.begin(), labels.end());
    for (size_t v = 0; v < arity; ++v) col.value_names.push_back("p" + std::to_string(v));
    return col;
}

}  // namespace

PredColumn ingest_external(std::string_view file_text, const std::vector<Document>& docs,
                           const std::string& module_id, std::ostream* warnings) {
    return align_rows(parse_rows(file_text), docs, module_id, /*renormalize=*/true, warnings);
}

PredColumn parse_column_cache(std::string_view file_text, const std::vector<Document>& docs,
                              const PredColumn& spec) {
    PredColumn col = align_rows(parse_rows(file_text), docs, spec.module_id,
                                /*renormalize=*/false, nullptr);
    col.label_set = spec.label_set;
    col.value_names = spec.value_names;
    return col;
}

PredColumn multitrain_cached(const BaseModule& module, const std::vector<Document>& docs,
                             const FoldAssignment& folds, const std::string& cache_dir,
                             uint64_t seed) {
    PredColumn spec;
    spec.module_id = module.id;
    spec.label_set = module.label_set;
    spec.value_names = module.value_names;

    std::string path;
    if (!cache_dir.empty()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%016llx_%llu",
                      static_cast<unsigned long long>(corpus_hash(docs)),
                      static_cast<unsigned long long>(seed));
        path = cache_dir + "/" + module.id + "_" + buf + ".col";
        if (file_exists(path)) return parse_column_cache(read_file(path), docs, spec);
    }
    MultitrainResult result = multitrain(module, docs, folds);
    if (!path.empty()) {
        std::filesystem::create_directories(cache_dir);
        write_file(path, serialize_column(result.column, docs));
    }
    return std::move(result.column);
}

std::vector<std::string> task_classes(Task task) {
    switch (task) {
        case Task::sent: return {"NoStart", "SentStart"};
        case Task::seg: return {"NoSeg", "BeginSeg"};
        case Task::conn: return {"O", "B-Conn", "I-Conn"};
    }
    return {};
}

std::vector<int> task_positive_ids(Task task) {
    return task == Task::conn ? std::vector<int>{1, 2} : std::vector<int>{1};
}

int gold_class_id(const Token& t, Task task) {
    switch (task) {
        case Task::sent: return t.sent_initial ? 1 : 0;
        case Task::seg: return t.seg_label == SegLabel::BeginSeg ? 1 : 0;
        case Task::conn:
            return t.conn_label == ConnLabel::O ? 0 : (t.conn_label == ConnLabel::BConn ? 1 : 2);
    }
    return 0;
}

FeatureSchema build_meta_schema(const std::vector<PredColumn>& columns, const TokenFeaturizer& feat,
                                const std::vector<std::string>& token_features, int window,
                                const std::vector<Document>& docs) {
    FeatureSchema schema;
    for (const auto& col : columns) {
        for (const auto& v : col.value_names) schema.add_numeric(col.module_id + "::" + v);
        if (!col.label_set.empty())
            schema.add_categorical(col.module_id + "::label", col.label_set);
    }
    if (!token_features.empty()) {
        FeatureSchema tok = feat.build_window_schema(token_features, window, docs);
        for (int i = 0; i < tok.size(); ++i) {
            const auto& e = tok.entry(i);
            if (e.kind == FeatureKind::categorical)
                schema.add_categorical(e.name, e.vocab);
            else
                schema.add_numeric(e.name);
        }
    }
    return schema;
}

Dataset assemble_meta(const std::vector<PredColumn>& columns, const std::vector<Document>& docs,
                      const TokenFeaturizer& feat, const FeatureSchema& schema, Task task) {
    std::map<std::string, const PredColumn*> by_id;
    std::map<std::string, std::map<std::string, int>> value_slot;
    for (const auto& col : columns) {
        by_id[col.module_id] = &col;
        for (size_t v = 0; v < col.value_names.size(); ++v)
            value_slot[col.module_id][col.value_names[v]] = static_cast<int>(v);
        if (col.rows.size() != total_tokens(docs))
            throw AlignmentError("module column '" + col.module_id + "' does not cover the corpus");
    }

    Dataset ds;
    ds.schema = schema;
    ds.classes = task_classes(task);

    size_t flat_base = 0;
    for (const auto& doc : docs) {
        DocDerived derived = feat.derive(doc);
        const int doc_n = static_cast<int>(derived.flat.size());
        for (int p = 0; p < doc_n; ++p) {
            FeatureRecord rec;
            for (int e = 0; e < schema.size(); ++e) {
                const auto& entry = schema.entry(e);
                size_t sep = entry.name.find("::");
                if (sep != std::string::npos) {
                    std::string mod = entry.name.substr(0, sep);
                    std::string what = entry.name.substr(sep + 2);
                    auto it = by_id.find(mod);
                    if (it == by_id.end()) throw AlignmentError("missing module column: " + mod);
                    const TokenPred& tp = it->second->rows[flat_base + p];
                    if (what == "label") {
                        rec.cats.push_back(schema.cat_id(e, tp.label));
                    } else {
                        int slot = value_slot[mod].at(what);
                        rec.nums.push_back(slot < static_cast<int>(tp.values.size()) ? tp.values[slot]
                                                                                     : 0.0);
                    }
                    continue;
                }
                // Window token feature "base@offset".
                size_t at = entry.name.rfind('@');
                std::string base = entry.name.substr(0, at);
                int off = std::stoi(entry.name.substr(at + 1));
                int q = p + off;
                if (entry.kind == FeatureKind::categorical) {
                    std::string value = q < 0 ? "<s>"
                                       : q >= doc_n ? "</s>"
                                                    : feat.cat_value(doc, derived, q, base);
                    rec.cats.push_back(schema.cat_id(e, value));
                } else {
                    rec.nums.push_back(q < 0 || q >= doc_n ? 0.0 : feat.num_value(doc, derived, q, base));
                }
            }
            ds.records.push_back(std::move(rec));
            ds.labels.push_back(gold_class_id(*derived.flat[p], task));
        }
        flat_base += doc_n;
    }
    return ds;
}

double dataset_f1(const TrainedModel& model, const Dataset& ds, const std::vector<int>& positive_ids) {
    auto is_pos = [&](int id) {
        return std::find(positive_ids.begin(), positive_ids.end(), id) != positive_ids.end();
    };
    int64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < ds.size(); ++i) {
        auto probs = model.predict_proba(ds.schema, ds.records[i]);
        int pred = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
        int gold = ds.labels[i];
        if (is_pos(pred) && pred == gold)
            ++tp;
        else {
            if (is_pos(pred)) ++fp;
            if (is_pos(gold)) ++fn;
        }
    }
    double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

std::unique_ptr<TrainedModel> train_meta(const Dataset& train, const std::vector<ModelKind>& candidates,
                                         const Dataset& dev, const TreeParams& params, Task task) {
    if (dev.records.empty()) throw TrainError("train_meta: empty dev set");
    if (candidates.empty()) throw TrainError("train_meta: no candidates");
    auto positives = task_positive_ids(task);
    std::unique_ptr<TrainedModel> best;
    double best_f = -1.0;
    std::string failures;
    for (ModelKind kind : candidates) {
        std::unique_ptr<TrainedModel> model;
        try {
            model = train_tree_ensemble(train, kind, params);
        } catch (const std::exception& e) {
            failures += std::string(model_kind_name(kind)) + ": " + e.what() + "; ";
            continue;
        }
        double f = dataset_f1(*model, dev, positives);
        if (f > best_f) {
            best_f = f;
            best = std::move(model);
        }
    }
    if (!best) throw TrainError("train_meta: all candidates failed: " + failures);
    return best;
}

}  // namespace gumdrop
