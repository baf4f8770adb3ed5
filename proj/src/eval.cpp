#include "gumdrop/eval.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace gumdrop {

void Score::finalize() {
    p_defined = tp + fp > 0;
    r_defined = tp + fn > 0;
    precision = p_defined ? double(tp) / double(tp + fp) : 0.0;
    recall = r_defined ? double(tp) / double(tp + fn) : 0.0;
    f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

namespace {

struct FlatToken {
    const Token* tok;
    bool sent_initial;
    bool doc_initial;
};

std::vector<FlatToken> flatten_docs(const std::vector<Document>& docs) {
    std::vector<FlatToken> out;
    for (const auto& doc : docs) {
        bool first_in_doc = true;
        for (const auto& sent : doc.sentences) {
            for (size_t i = 0; i < sent.tokens.size(); ++i) {
                out.push_back({&sent.tokens[i], i == 0, first_in_doc});
                first_in_doc = false;
            }
        }
    }
    return out;
}

void check_alignment(const std::vector<FlatToken>& g, const std::vector<FlatToken>& p) {
    if (g.size() != p.size())
        throw AlignmentError("token counts differ: gold " + std::to_string(g.size()) + " vs predicted " +
                             std::to_string(p.size()));
    for (size_t i = 0; i < g.size(); ++i)
        if (g[i].tok->form != p[i].tok->form)
            throw AlignmentError("token mismatch at offset " + std::to_string(i) + ": gold '" +
                                 g[i].tok->form + "' vs predicted '" + p[i].tok->form + "'");
}

}  // namespace

Score score_boundaries(const std::vector<Document>& gold, const std::vector<Document>& pred,
                       Task task) {
    if (task == Task::conn) throw ConfigError("score_boundaries handles sent and seg tasks");
    auto g = flatten_docs(gold);
    auto p = flatten_docs(pred);
    check_alignment(g, p);
    Score s;
    for (size_t i = 0; i < g.size(); ++i) {
        bool gold_pos, pred_pos;
        if (task == Task::sent) {
            if (g[i].doc_initial) continue;  // trivially a boundary
            gold_pos = g[i].sent_initial;
            pred_pos = p[i].sent_initial;
        } else {
            gold_pos = g[i].tok->seg_label == SegLabel::BeginSeg;
            pred_pos = p[i].tok->seg_label == SegLabel::BeginSeg;
        }
        if (gold_pos && pred_pos)
            ++s.tp;
        else if (pred_pos)
            ++s.fp;
        else if (gold_pos)
            ++s.fn;
    }
    s.finalize();
    return s;
}

Score score_connectives(const std::vector<Document>& gold, const std::vector<Document>& pred,
                        bool merge_bi) {
    auto g = flatten_docs(gold);
    auto p = flatten_docs(pred);
    check_alignment(g, p);
    Score s;
    for (size_t i = 0; i < g.size(); ++i) {
        ConnLabel gl = g[i].tok->conn_label;
        ConnLabel pl = p[i].tok->conn_label;
        bool gold_pos = gl != ConnLabel::O;
        bool pred_pos = pl != ConnLabel::O;
        bool match = merge_bi ? gold_pos && pred_pos : gold_pos && pred_pos && gl == pl;
        if (match)
            ++s.tp;
        else {
            if (pred_pos) ++s.fp;
            if (gold_pos) ++s.fn;
        }
    }
    s.finalize();
    return s;
}

namespace {

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

std::string report(const std::vector<CorpusScore>& scores) {
    if (scores.empty()) throw ConfigError("report: no scores");
    size_t name_w = 6;  // "corpus"
    for (const auto& cs : scores) name_w = std::max(name_w, cs.name.size());

    std::ostringstream out;
    auto row = [&](const std::string& name, const std::string& p, const std::string& r,
                   const std::string& f) {
        out << name;
        out << std::string(name_w - name.size(), ' ');
        out << "  " << p << "  " << r << "  " << f << '\n';
    };
    row("corpus", "    P", "    R", "    F");
    bool flagged = false;
    double sp = 0, sr = 0, sf = 0;
    for (const auto& cs : scores) {
        const Score& s = cs.score;
        std::string p = fixed3(s.precision), r = fixed3(s.recall), f = fixed3(s.f1);
        if (!s.p_defined) p += "*", flagged = true;
        if (!s.r_defined) r += "*", flagged = true;
        while (p.size() < 5) p = " " + p;
        while (r.size() < 5) r = " " + r;
        while (f.size() < 5) f = " " + f;
        row(cs.name, p, r, f);
        sp += s.precision;
        sr += s.recall;
        sf += s.f1;
    }
    const double n = double(scores.size());
    double mp = sp / n, mr = sr / n, mf = sf / n;
    double vp = 0, vr = 0, vf = 0;
    for (const auto& cs : scores) {
        vp += (cs.score.precision - mp) * (cs.score.precision - mp);
        vr += (cs.score.recall - mr) * (cs.score.recall - mr);
        vf += (cs.score.f1 - mf) * (cs.score.f1 - mf);
    }
    row("mean", fixed3(mp), fixed3(mr), fixed3(mf));
    row("std", fixed3(std::sqrt(vp / n)), fixed3(std::sqrt(vr / n)), fixed3(std::sqrt(vf / n)));
    if (flagged) out << "* undefined (zero denominator), reported as 0\n";

    for (const auto& cs : scores) {
        out << cs.name << "\tprecision\t" << format_double(cs.score.precision) << '\n';
        out << cs.name << "\trecall\t" << format_double(cs.score.recall) << '\n';
        out << cs.name << "\tf1\t" << format_double(cs.score.f1) << '\n';
    }
    return out.str();
}

}  // namespace gumdrop
