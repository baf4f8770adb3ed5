#pragma once

#include <map>
#include <string>
#include <vector>

#include "gumdrop/corpus.hpp"

namespace gumdrop {

// Paragraph-initial token statistics, the signal behind the wiki-style
// sentencer. Entries survive only if initial_count > min_freq and
// initial/total > min_ratio.
struct InitialTokenLexicon {
    struct Entry {
        int64_t initial_count = 0;
        int64_t total_count = 0;
        double ratio = 0.0;
    };
    std::map<std::string, Entry> entries;

    const Entry* find(const std::string& form) const;
    std::string serialize() const;  // form<TAB>initial<TAB>total lines
    static InitialTokenLexicon parse(std::string_view text);
};

InitialTokenLexicon build_initial_lexicon(const std::vector<std::string>& paragraphs,
                                          int64_t min_freq = 10, double min_ratio = 0.5);

// Attested connective sequences (length 1..5) with how often each sequence
// occurs at all vs. labeled as a connective.
struct ConnectiveTable {
    struct Entry {
        int64_t conn_count = 0;
        int64_t total_count = 0;
        double ratio() const { return total_count ? double(conn_count) / double(total_count) : 0.0; }
    };
    std::map<std::vector<std::string>, Entry> entries;
    int max_len = 0;

    std::string serialize() const;  // sequence<TAB>conn_count<TAB>total_count, tokens space-joined
    static ConnectiveTable parse(std::string_view text);
};

ConnectiveTable build_connective_table(const std::vector<Document>& train_docs);

enum class SpanPos : uint8_t { O, B, I };

struct FreqConnPrediction {
    double ratio = 0.0;
    double freq = 0.0;  // training total_count of the matched sequence
    SpanPos span_position = SpanPos::O;
    int match_len = 0;    // 0 when no table entry covers the token
    int match_start = -1;  // document-sentence-local start of the winning match
};

// Longest-match lookup per token; ties on length resolved by higher ratio,
// then by the match whose span starts later (token closer to B).
std::vector<FreqConnPrediction> freq_conn_predict(const Document& doc, const ConnectiveTable& table);

// Ratio-threshold classification on top of freq_conn_predict.
std::vector<ConnLabel> freq_conn_classify(const Document& doc, const ConnectiveTable& table,
                                          double threshold = 0.5);

// Sentence-start flags from terminal punctuation on the previous token.
std::vector<bool> punct_split(const std::vector<Token>& tokens);

// B-Conn for forms attested in training only inside connective spans.
std::vector<ConnLabel> exclusive_conn_baseline(const std::vector<Document>& train_docs,
                                               const Document& test_doc);

// Most-frequent-tag unigram tagger; stands in for an external POS tagger
// when input carries no annotation.
struct UnigramTagger {
    std::map<std::string, std::string> tag_of;
    std::string default_tag = "X";

    std::string tag(const std::string& form) const;
    std::string serialize() const;
    static UnigramTagger parse(std::string_view text);
};

UnigramTagger build_unigram_tagger(const std::vector<Document>& docs);

}  // namespace gumdrop
