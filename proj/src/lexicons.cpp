#include "gumdrop/lexicons.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace gumdrop {

const InitialTokenLexicon::Entry* InitialTokenLexicon::find(const std::string& form) const {
    auto it = entries.find(form);
    return it == entries.end() ? nullptr : &it->second;
}

std::string InitialTokenLexicon::serialize() const {
    std::ostringstream out;
    for (const auto& [form, e] : entries)
        out << form << '\t' << e.initial_count << '\t' << e.total_count << '\n';
    return out.str();
}

InitialTokenLexicon InitialTokenLexicon::parse(std::string_view text) {
    InitialTokenLexicon lex;
    for (const auto& raw : split(text, '\n')) {
        std::string line = strip(raw);
        if (line.empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 3) throw ParseError("lexicon line needs 3 columns: " + line);
        Entry e;
        e.initial_count = std::stoll(cols[1]);
        e.total_count = std::stoll(cols[2]);
        e.ratio = e.total_count ? double(e.initial_count) / double(e.total_count) : 0.0;
        lex.entries[cols[0]] = e;
    }
    return lex;
}

namespace {

std::vector<std::string> whitespace_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace

InitialTokenLexicon build_initial_lexicon(const std::vector<std::string>& paragraphs,
                                          int64_t min_freq, double min_ratio) {
    std::map<std::string, InitialTokenLexicon::Entry> counts;
    for (const auto& para : paragraphs) {
        // The first "sentence" is the text up to the first terminal character.
        size_t end = para.find_first_of(".?!");
        std::string first_sent = end == std::string::npos ? para : para.substr(0, end);
        auto first_tokens = whitespace_tokens(first_sent);
        if (!first_tokens.empty()) counts[first_tokens.front()].initial_count++;
        for (const auto& tok : whitespace_tokens(para)) counts[tok].total_count++;
    }
    InitialTokenLexicon lex;
    for (auto& [form, e] : counts) {
        if (e.total_count == 0) continue;
        e.ratio = double(e.initial_count) / double(e.total_count);
        if (e.initial_count > min_freq && e.ratio > min_ratio) lex.entries[form] = e;
    }
    return lex;
}

std::string ConnectiveTable::serialize() const {
    std::ostringstream out;
    for (const auto& [seq, e] : entries)
        out << join(seq, " ") << '\t' << e.conn_count << '\t' << e.total_count << '\n';
    return out.str();
}

ConnectiveTable ConnectiveTable::parse(std::string_view text) {
    ConnectiveTable table;
    for (const auto& raw : split(text, '\n')) {
        std::string line = strip(raw);
        if (line.empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 3) throw ParseError("connective table line needs 3 columns: " + line);
        auto seq = whitespace_tokens(cols[0]);
        Entry e;
        e.conn_count = std::stoll(cols[1]);
        e.total_count = std::stoll(cols[2]);
        table.entries[seq] = e;
        table.max_len = std::max(table.max_len, static_cast<int>(seq.size()));
    }
    return table;
}

namespace {

constexpr int kMaxConnLen = 5;

std::vector<std::vector<std::string>> doc_form_rows(const Document& doc) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& sent : doc.sentences) {
        std::vector<std::string> forms;
        forms.reserve(sent.tokens.size());
        for (const auto& t : sent.tokens) forms.push_back(t.form);
        rows.push_back(std::move(forms));
    }
    return rows;
}

}  // namespace

ConnectiveTable build_connective_table(const std::vector<Document>& train_docs) {
    ConnectiveTable table;
    // Collect gold span sequences first.
    for (const auto& doc : train_docs) {
        for (const auto& sent : doc.sentences) {
            const auto& toks = sent.tokens;
            for (size_t i = 0; i < toks.size(); ++i) {
                if (toks[i].conn_label != ConnLabel::BConn) continue;
                size_t j = i + 1;
                while (j < toks.size() && toks[j].conn_label == ConnLabel::IConn) ++j;
                size_t len = j - i;
                if (len > kMaxConnLen) len = kMaxConnLen;  // overlong spans contribute their head
                std::vector<std::string> seq;
                for (size_t k = i; k < i + len; ++k) seq.push_back(toks[k].form);
                table.entries[seq].conn_count++;
                table.max_len = std::max(table.max_len, static_cast<int>(len));
            }
        }
    }
    // Total occurrences of each attested sequence anywhere, overlaps allowed.
    for (const auto& doc : train_docs) {
        for (const auto& forms : doc_form_rows(doc)) {
            for (size_t i = 0; i < forms.size(); ++i) {
                std::vector<std::string> seq;
                for (size_t len = 1; len <= kMaxConnLen && i + len <= forms.size(); ++len) {
                    seq.push_back(forms[i + len - 1]);
                    auto it = table.entries.find(seq);
                    if (it != table.entries.end()) it->second.total_count++;
                }
            }
        }
    }
    return table;
}

std::vector<FreqConnPrediction> freq_conn_predict(const Document& doc, const ConnectiveTable& table) {
    std::vector<FreqConnPrediction> out(doc.token_count());
    size_t base = 0;
    for (const auto& forms : doc_form_rows(doc)) {
        const size_t n = forms.size();
        // For each match window, update every covered token with the
        // longest-match preference.
        for (size_t start = 0; start < n; ++start) {
            std::vector<std::string> seq;
            for (size_t len = 1; len <= size_t(std::max(table.max_len, 1)) && start + len <= n; ++len) {
                seq.push_back(forms[start + len - 1]);
                auto it = table.entries.find(seq);
                if (it == table.entries.end()) continue;
                double ratio = it->second.ratio();
                for (size_t k = 0; k < len; ++k) {
                    FreqConnPrediction& slot = out[base + start + k];
                    FreqConnPrediction cand;
                    cand.ratio = ratio;
                    cand.freq = double(it->second.total_count);
                    cand.span_position = k == 0 ? SpanPos::B : SpanPos::I;
                    cand.match_len = static_cast<int>(len);
                    cand.match_start = static_cast<int>(start);
                    bool better = false;
                    if (slot.match_len < cand.match_len)
                        better = true;
                    else if (slot.match_len == cand.match_len) {
                        if (cand.ratio > slot.ratio)
                            better = true;
                        else if (cand.ratio == slot.ratio && cand.match_start > slot.match_start)
                            better = true;
                    }
                    if (better) slot = cand;
                }
            }
        }
        base += n;
    }
    return out;
}

std::vector<ConnLabel> freq_conn_classify(const Document& doc, const ConnectiveTable& table,
                                          double threshold) {
    auto preds = freq_conn_predict(doc, table);
    std::vector<ConnLabel> labels(preds.size(), ConnLabel::O);
    for (size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].span_position == SpanPos::O || preds[i].ratio <= threshold) continue;
        labels[i] = preds[i].span_position == SpanPos::B ? ConnLabel::BConn : ConnLabel::IConn;
    }
    // A kept I whose predecessor was filtered out starts its own span.
    for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == ConnLabel::IConn && (i == 0 || labels[i - 1] == ConnLabel::O))
            labels[i] = ConnLabel::BConn;
    return labels;
}

std::vector<bool> punct_split(const std::vector<Token>& tokens) {
    static const std::vector<std::string> kTerminals = {".", "!", "?", "。", "！", "？"};
    std::vector<bool> starts(tokens.size(), false);
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i == 0) {
            starts[i] = true;
            continue;
        }
        const std::string& prev = tokens[i - 1].form;
        for (const auto& term : kTerminals) {
            if (prev.size() >= term.size() && prev.compare(prev.size() - term.size(), term.size(), term) == 0) {
                starts[i] = true;
                break;
            }
        }
    }
    return starts;
}

std::vector<ConnLabel> exclusive_conn_baseline(const std::vector<Document>& train_docs,
                                               const Document& test_doc) {
    std::set<std::string> seen, seen_outside;
    for (const auto& doc : train_docs) {
        for (const auto& sent : doc.sentences) {
            for (const auto& t : sent.tokens) {
                seen.insert(t.form);
                if (t.conn_label == ConnLabel::O) seen_outside.insert(t.form);
            }
        }
    }
    std::vector<ConnLabel> out;
    out.reserve(test_doc.token_count());
    for (const auto& sent : test_doc.sentences)
        for (const auto& t : sent.tokens)
            out.push_back(seen.count(t.form) && !seen_outside.count(t.form) ? ConnLabel::BConn
                                                                            : ConnLabel::O);
    return out;
}

std::string UnigramTagger::tag(const std::string& form) const {
    auto it = tag_of.find(form);
    return it == tag_of.end() ? default_tag : it->second;
}

std::string UnigramTagger::serialize() const {
    std::ostringstream out;
    out << "__default__\t" << default_tag << '\n';
    for (const auto& [form, tag] : tag_of) out << form << '\t' << tag << '\n';
    return out.str();
}

UnigramTagger UnigramTagger::parse(std::string_view text) {
    UnigramTagger tagger;
    for (const auto& raw : split(text, '\n')) {
        std::string line = strip(raw);
        if (line.empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 2) throw ParseError("tagger line needs 2 columns: " + line);
        if (cols[0] == "__default__")
            tagger.default_tag = cols[1];
        else
            tagger.tag_of[cols[0]] = cols[1];
    }
    return tagger;
}

UnigramTagger build_unigram_tagger(const std::vector<Document>& docs) {
    std::map<std::string, std::map<std::string, int64_t>> counts;
    std::map<std::string, int64_t> tag_totals;
    for (const auto& doc : docs) {
        for (const auto& sent : doc.sentences) {
            for (const auto& t : sent.tokens) {
                if (t.upos == "_") continue;
                counts[t.form][t.upos]++;
                tag_totals[t.upos]++;
            }
        }
    }
    UnigramTagger tagger;
    for (const auto& [form, tags] : counts) {
        const std::string* best = nullptr;
        int64_t best_n = -1;
        for (const auto& [tag, n] : tags)
            if (n > best_n) best = &tag, best_n = n;
        tagger.tag_of[form] = *best;
    }
    const std::string* best = nullptr;
    int64_t best_n = -1;
    for (const auto& [tag, n] : tag_totals)
        if (n > best_n) best = &tag, best_n = n;
    if (best) tagger.default_tag = *best;
    return tagger;
}

}  // namespace gumdrop
