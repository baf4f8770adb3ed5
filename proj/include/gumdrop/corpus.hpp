#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gumdrop/common.hpp"

namespace gumdrop {

enum class Task : uint8_t { sent, seg, conn };
enum class SegLabel : uint8_t { NoSeg, BeginSeg };
enum class ConnLabel : uint8_t { O, BConn, IConn };

const char* task_name(Task t);
Task task_from_name(std::string_view name);  // throws ConfigError on unknown name
const char* seg_label_name(SegLabel l);
const char* conn_label_name(ConnLabel l);

struct Token {
    int index = 0;  // 1-based within sentence
    std::string form = "_";
    std::string lemma = "_";
    std::string upos = "_";
    std::string xpos = "_";
    std::string feats = "_";
    bool has_head = false;
    int head = 0;  // 0 = root, valid only when has_head
    std::string deprel = "_";
    std::string deps = "_";
    std::vector<std::string> misc;  // misc flags minus the task labels
    SegLabel seg_label = SegLabel::NoSeg;
    ConnLabel conn_label = ConnLabel::O;
    bool sent_initial = false;

    bool operator==(const Token&) const = default;
};

// Multiword-token ranges (id "3-4") and empty nodes (id "8.1") carry no
// syntactic-word payload; they are kept verbatim for round-trip output.
struct RawLine {
    int before_index = 0;  // emitted just before the token with this index
    std::string text;

    bool operator==(const RawLine&) const = default;
};

struct Sentence {
    std::vector<Token> tokens;
    int doc_offset = 0;  // 0-based index of sentence in document
    std::vector<std::string> comments;
    std::vector<RawLine> raw_lines;

    int size() const { return static_cast<int>(tokens.size()); }
};

struct Document {
    std::string name = "doc";
    std::string genre = "other";
    std::vector<Sentence> sentences;

    size_t token_count() const;
};

// Ordered substring rules; the first match wins, '*' sets the default tag.
struct GenreRule {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string default_tag = "other";

    static GenreRule parse(std::string_view text);  // substring<TAB>tag lines
};

std::string extract_genre(const std::string& doc_name, const GenreRule& rule);

enum class ParseMode : uint8_t { gold_sentences, flat };

// Parses 10-column CoNLL-U-like content. `# newdoc id = X` starts a new
// document; without markers the whole input is one document named
// `fallback_name`. In flat mode each document collapses to a single token
// sequence and sent_initial records the original splits.
std::vector<Document> parse_conllu(std::string_view text, ParseMode mode,
                                   const GenreRule& genre = {},
                                   const std::string& fallback_name = "doc");

// Emits the documents with the given task's labels in the misc column.
// task=sent re-draws sentence breaks instead of writing labels.
std::string write_conllu(const std::vector<Document>& docs, Task task);

// Canonical full-state serialization used for corpus hashing only.
uint64_t corpus_hash(const std::vector<Document>& docs);

// True when no token carries a dependency head (e.g. `.tok` input).
bool lacks_syntax(const std::vector<Document>& docs);

}  // namespace gumdrop
