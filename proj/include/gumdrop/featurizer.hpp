#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gumdrop/corpus.hpp"
#include "gumdrop/lexicons.hpp"

namespace gumdrop {

// ---------------------------------------------------------------------------
// Character-shape features

struct CharTypeCounts {
    int digits = 0, consonants = 0, vowels = 0, other = 0;
};

const std::set<uint32_t>& default_vowel_set();
std::set<uint32_t> vowel_set_from_utf8(std::string_view vowels);

CharTypeCounts char_type_counts(std::string_view form,
                                const std::set<uint32_t>& vowels = default_vowel_set());

// First/last codepoint of the form; for language "zho", first/last byte
// rendered as two hex digits.
std::pair<std::string, std::string> first_last_chars(std::string_view form,
                                                     std::string_view language = "generic");

// ---------------------------------------------------------------------------
// Dependency-tree features

const std::set<std::string>& default_clausal_relations();

// BIEO tags of the smallest clause span covering each token. A clause span is
// the contiguous hull of the subtree of a token attached by a clausal
// relation; tags carry the relation name (B-advcl, ...). Single-token spans
// collapse to B.
std::vector<std::string> dep_brackets(const Sentence& sentence,
                                      const std::set<std::string>& clausal = default_clausal_relations());

// Signed offset to the governing head; 0 for roots and headless tokens.
int head_distance(const Sentence& sentence, int index);  // index is 1-based

enum class DistBin : uint8_t { zero, next_left, next_right, close_left, close_right, far_left, far_right };
DistBin bin_head_distance(int d);
const char* dist_bin_name(DistBin b);

// Dependency context around one node: the two neighbors on each side, the
// parent and grandparent, plus child-span geometry of the node itself.
// Window order is {-2, -1, node, +1, +2, parent, grandparent}.
struct SubtreeFeatures {
    std::array<std::string, 7> deprel;  // "NONE" sentinel outside the sentence
    std::array<int, 7> depth;           // root = 0; -1 sentinel
    int lspan = 0, rspan = 0;           // descendants strictly left/right of the node
    std::string lchild_near = "NONE", lchild_far = "NONE";
    std::string rchild_near = "NONE", rchild_far = "NONE";
    std::array<bool, 5> same_parent_left{};   // {-2,-1,node,+1,+2}
    std::array<bool, 5> same_parent_right{};
};

SubtreeFeatures subtree_features(const Sentence& sentence, int index);  // index is 1-based

// ---------------------------------------------------------------------------
// Document-scan features

const std::vector<uint32_t>& default_quote_chars();

// A token is inside quotes/parentheses when the state is open both strictly
// before and strictly after it, so delimiters themselves are outside.
struct QuoteParenState {
    std::vector<uint8_t> in_quote, in_paren;  // per flat token
};
QuoteParenState quote_paren_state(const Document& doc,
                                  const std::vector<uint32_t>& quotes = default_quote_chars());

std::vector<double> sent_percentiles(const Document& doc);

// ---------------------------------------------------------------------------
// Frequency lexicon with POS backoff

struct Lexicon {
    int n = 0;
    std::map<std::string, int> ranks;        // kept items, rank 1..k
    std::map<std::string, int64_t> counts;   // every observed form
    enum class Backoff : uint8_t { pos_category, unk } backoff = Backoff::pos_category;

    bool contains(const std::string& form) const { return ranks.count(form) != 0; }
    // The form itself if kept, otherwise the POS category (or "<unk>").
    std::string lookup(const std::string& form, const std::string& pos) const;
    double log_freq(const std::string& form) const;  // ln(1 + count)
    std::string serialize() const;
    static Lexicon parse(std::string_view text);
};

Lexicon build_lexicon(const std::vector<std::string>& forms, int n);
Lexicon build_lexicon(const std::vector<Document>& docs, int n);

// ---------------------------------------------------------------------------
// Feature schema / records

enum class FeatureKind : uint8_t { categorical, numeric };

struct SchemaEntry {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<std::string> vocab;  // sorted unique values; categorical only
};

// Values are stored compactly: category ids in `cats`, reals in `nums`,
// each in schema-entry order of their kind.
struct FeatureRecord {
    std::vector<int> cats;
    std::vector<double> nums;
};

class FeatureSchema {
public:
    void add_categorical(std::string name, std::vector<std::string> vocab);
    void add_numeric(std::string name);

    int size() const { return static_cast<int>(entries_.size()); }
    const SchemaEntry& entry(int i) const { return entries_[i]; }
    int index_of(const std::string& name) const;  // -1 when absent
    int n_cat() const { return n_cat_; }
    int n_num() const { return n_num_; }
    int slot(int entry) const { return slots_[entry]; }  // index into cats or nums

    int cat_id(int entry, const std::string& value) const;  // unk_id when unseen
    int unk_id(int entry) const { return static_cast<int>(entries_[entry].vocab.size()); }
    const std::string& cat_name(int entry, int id) const;  // "<unk>" for the unk id

    int cat_value(const FeatureRecord& r, int entry) const { return r.cats[slots_[entry]]; }
    double num_value(const FeatureRecord& r, int entry) const { return r.nums[slots_[entry]]; }

    uint64_t fingerprint() const;
    std::string serialize() const;  // name<TAB>kind<TAB>vocab... lines
    static FeatureSchema parse(std::string_view text);

    // Schema restricted to the given entry indices, in the given order.
    FeatureSchema project(const std::vector<int>& kept) const;
    FeatureRecord project_record(const FeatureRecord& r, const std::vector<int>& kept) const;

private:
    std::vector<SchemaEntry> entries_;
    std::vector<int> slots_;
    std::map<std::string, int> by_name_;
    int n_cat_ = 0, n_num_ = 0;
};

// ---------------------------------------------------------------------------
// Redundancy filtering

// Uncertainty coefficient U(y|x): how predictable y is from x, in [0,1].
// Natural-log entropies; U = 1 when H(y) = 0.
double theils_u(const std::vector<int>& x, const std::vector<int>& y);
double theils_u(const std::vector<std::string>& x, const std::vector<std::string>& y);

// Pearson r; constants correlate perfectly with constants and not at all
// with anything else.
double pearson_r(const std::vector<double>& x, const std::vector<double>& y);

struct FilterResult {
    FeatureSchema schema;
    std::vector<int> kept;  // surviving entry indices of the input schema
};

// Drops categorical entries predictable from another kept entry
// (U > u_threshold) and numeric entries correlated with an earlier kept one
// (|r| > r_threshold). Scans in schema order; dropped entries are final.
FilterResult filter_redundant(const std::vector<FeatureRecord>& matrix, const FeatureSchema& schema,
                              double u_threshold = 0.98, double r_threshold = 0.95);

// ---------------------------------------------------------------------------
// Token featurization over documents

struct FeatureResources {
    Lexicon top_meta;   // most frequent forms for metalearner word identity
    Lexicon top_base;   // larger list for base modules; also backs tok_frq
    UnigramTagger tagger;
    std::set<std::string> clausal_relations = default_clausal_relations();
    std::set<uint32_t> vowel_set = default_vowel_set();
    std::vector<uint32_t> quote_chars = default_quote_chars();
    std::string language = "generic";

    std::string serialize() const;
    static FeatureResources parse(std::string_view text);
};

// Per-document derived state shared by all token features.
struct DocDerived {
    std::vector<const Token*> flat;
    std::vector<int> sent_of;      // flat index -> sentence index
    std::vector<std::string> depbracket;
    std::vector<SubtreeFeatures> subtree;
    QuoteParenState qp;
    std::vector<double> sent_pct;  // per sentence
};

class TokenFeaturizer {
public:
    explicit TokenFeaturizer(const FeatureResources* res) : res_(res) {}

    static bool known_feature(const std::string& name);
    static FeatureKind feature_kind(const std::string& name);  // throws ConfigError when unknown
    static std::vector<std::string> known_features();

    DocDerived derive(const Document& doc) const;

    std::string cat_value(const Document& doc, const DocDerived& d, int pos,
                          const std::string& name) const;
    double num_value(const Document& doc, const DocDerived& d, int pos, const std::string& name) const;

    // Window-expanded schema over the named features; categorical vocabularies
    // are harvested from the training documents (capped to the most frequent
    // max_vocab values when nonzero) and always include the edge sentinels.
    FeatureSchema build_window_schema(const std::vector<std::string>& names, int window,
                                      const std::vector<Document>& train_docs,
                                      int max_vocab = 0) const;

    // One record against a schema produced by build_window_schema.
    FeatureRecord window_features(const Document& doc, const DocDerived& d, int pos,
                                  const FeatureSchema& schema) const;

private:
    const FeatureResources* res_;
};

}  // namespace gumdrop
