#include "gumdrop/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace gumdrop {

const char* task_name(Task t) {
    switch (t) {
        case Task::sent: return "sent";
        case Task::seg: return "seg";
        case Task::conn: return "conn";
    }
    return "?";
}

Task task_from_name(std::string_view name) {
    if (name == "sent") return Task::sent;
    if (name == "seg") return Task::seg;
    if (name == "conn") return Task::conn;
    throw ConfigError("unknown task: " + std::string(name));
}

const char* seg_label_name(SegLabel l) {
    return l == SegLabel::BeginSeg ? "BeginSeg" : "NoSeg";
}

const char* conn_label_name(ConnLabel l) {
    switch (l) {
        case ConnLabel::BConn: return "B-Conn";
        case ConnLabel::IConn: return "I-Conn";
        default: return "O";
    }
}

size_t Document::token_count() const {
    size_t n = 0;
    for (const auto& s : sentences) n += s.tokens.size();
    return n;
}

GenreRule GenreRule::parse(std::string_view text) {
    GenreRule rule;
    for (const auto& raw : split(text, '\n')) {
        std::string line = strip(raw);
        if (line.empty() || line[0] == '#') continue;
        auto cols = split(line, '\t');
        if (cols.size() != 2) throw ParseError("genre rule line needs substring<TAB>tag: " + line);
        if (cols[0] == "*")
            rule.default_tag = cols[1];
        else
            rule.pairs.emplace_back(cols[0], cols[1]);
    }
    return rule;
}

std::string extract_genre(const std::string& doc_name, const GenreRule& rule) {
    for (const auto& [substr, tag] : rule.pairs)
        if (doc_name.find(substr) != std::string::npos) return tag;
    return rule.default_tag;
}

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

[[noreturn]] void fail(int line_no, const std::string& msg) {
    throw ParseError("line " + std::to_string(line_no) + ": " + msg);
}

struct SentenceBuilder {
    Sentence sent;
    std::vector<int> token_lines;  // source line per token, for head checks

    void finish(int end_line) {
        const int n = sent.size();
        for (int i = 0; i < n; ++i) {
            const Token& t = sent.tokens[i];
            if (t.index != i + 1) {
                bool dup = false;
                for (int j = 0; j < i; ++j) dup |= sent.tokens[j].index == t.index;
                fail(token_lines[i], dup ? "duplicate token index " + std::to_string(t.index)
                                         : "non-contiguous token index " + std::to_string(t.index));
            }
        }
        for (int i = 0; i < n; ++i) {
            const Token& t = sent.tokens[i];
            if (!t.has_head) continue;
            if (t.head < 0 || t.head > n)
                fail(token_lines[i], "head " + std::to_string(t.head) + " out of range for sentence of length " +
                                         std::to_string(n));
            if (t.head == t.index) fail(token_lines[i], "token is its own head");
        }
        (void)end_line;
    }
};

Token parse_token_line(const std::vector<std::string>& cols, int line_no) {
    Token t;
    try {
        t.index = std::stoi(cols[0]);
    } catch (const std::exception&) {
        fail(line_no, "malformed token id: " + cols[0]);
    }
    t.form = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    t.xpos = cols[4];
    t.feats = cols[5];
    if (cols[6] == "_") {
        t.has_head = false;
        t.head = 0;
    } else {
        try {
            size_t used = 0;
            t.head = std::stoi(cols[6], &used);
            if (used != cols[6].size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            fail(line_no, "malformed head column: " + cols[6]);
        }
        t.has_head = true;
    }
    t.deprel = cols[7];
    t.deps = cols[8];
    if (cols[9] != "_") {
        for (auto& item : split(cols[9], '|')) {
            if (item == "BeginSeg=Yes")
                t.seg_label = SegLabel::BeginSeg;
            else if (item == "Seg=B-Conn")
                t.conn_label = ConnLabel::BConn;
            else if (item == "Seg=I-Conn")
                t.conn_label = ConnLabel::IConn;
            else
                t.misc.push_back(std::move(item));
        }
    }
    return t;
}

Document flatten(Document doc) {
    Document flat;
    flat.name = std::move(doc.name);
    flat.genre = std::move(doc.genre);
    Sentence all;
    int next = 1;
    for (auto& s : doc.sentences) {
        for (auto& t : s.tokens) {
            t.sent_initial = t.index == 1;
            t.index = next++;
            t.has_head = false;
            t.head = 0;
            t.deprel = "_";
            t.deps = "_";
            all.tokens.push_back(std::move(t));
        }
    }
    flat.sentences.push_back(std::move(all));
    return flat;
}

}  // namespace

std::vector<Document> parse_conllu(std::string_view text, ParseMode mode, const GenreRule& genre,
                                   const std::string& fallback_name) {
    std::vector<Document> docs;
    Document cur_doc;
    cur_doc.name = fallback_name;
    bool doc_has_content = false;
    SentenceBuilder sb;
    int line_no = 0;

    auto end_sentence = [&](int at_line) {
        if (sb.sent.tokens.empty()) {
            // Stray raw lines or comments with no tokens are dropped.
            sb = SentenceBuilder{};
            return;
        }
        sb.finish(at_line);
        sb.sent.doc_offset = static_cast<int>(cur_doc.sentences.size());
        for (auto& t : sb.sent.tokens) t.sent_initial = t.index == 1;
        cur_doc.sentences.push_back(std::move(sb.sent));
        sb = SentenceBuilder{};
        doc_has_content = true;
    };
    auto end_document = [&]() {
        if (!doc_has_content) return;
        cur_doc.genre = extract_genre(cur_doc.name, genre);
        docs.push_back(std::move(cur_doc));
        cur_doc = Document{};
        doc_has_content = false;
    };

    std::string_view rest = text;
    while (!rest.empty()) {
        size_t nl = rest.find('\n');
        std::string_view raw = nl == std::string_view::npos ? rest : rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        ++line_no;
        std::string line = strip(raw);

        if (line.empty()) {
            end_sentence(line_no);
            continue;
        }
        if (line[0] == '#') {
            std::string body = strip(line.substr(1));
            if (body.rfind("newdoc id =", 0) == 0 || body.rfind("newdoc id=", 0) == 0) {
                end_sentence(line_no);
                end_document();
                cur_doc.name = strip(body.substr(body.find('=') + 1));
                continue;
            }
            sb.sent.comments.push_back(line);
            continue;
        }
        auto cols = split(line, '\t');
        if (cols.size() != 10)
            fail(line_no, "expected 10 tab-separated columns, got " + std::to_string(cols.size()));
        if (!all_digits(cols[0])) {
            if (cols[0].find('-') != std::string::npos || cols[0].find('.') != std::string::npos) {
                int anchor = 0;
                try {
                    anchor = std::stoi(cols[0]);
                } catch (const std::exception&) {
                    fail(line_no, "malformed token id: " + cols[0]);
                }
                // "3-4" anchors before token 3; "8.1" after token 8.
                if (cols[0].find('.') != std::string::npos) ++anchor;
                sb.sent.raw_lines.push_back({anchor, line});
                continue;
            }
            fail(line_no, "malformed token id: " + cols[0]);
        }
        sb.sent.tokens.push_back(parse_token_line(cols, line_no));
        sb.token_lines.push_back(line_no);
    }
    end_sentence(line_no);
    end_document();

    if (mode == ParseMode::flat)
        for (auto& d : docs) d = flatten(std::move(d));
    return docs;
}

namespace {

void write_token(std::ostringstream& out, const Token& t, Task task) {
    std::vector<std::string> misc = t.misc;
    if (task == Task::seg && t.seg_label == SegLabel::BeginSeg) misc.push_back("BeginSeg=Yes");
    if (task == Task::conn && t.conn_label != ConnLabel::O)
        misc.push_back(std::string("Seg=") + conn_label_name(t.conn_label));
    out << t.index << '\t' << t.form << '\t' << t.lemma << '\t' << t.upos << '\t' << t.xpos << '\t'
        << t.feats << '\t' << (t.has_head ? std::to_string(t.head) : "_") << '\t' << t.deprel << '\t'
        << t.deps << '\t' << (misc.empty() ? "_" : join(misc, "|")) << '\n';
}

}  // namespace

std::string write_conllu(const std::vector<Document>& docs, Task task) {
    std::ostringstream out;
    for (const auto& doc : docs) {
        out << "# newdoc id = " << doc.name << '\n';
        for (const auto& sent : doc.sentences) {
            for (const auto& c : sent.comments) out << c << '\n';
            size_t raw_i = 0;
            for (const auto& t : sent.tokens) {
                while (raw_i < sent.raw_lines.size() && sent.raw_lines[raw_i].before_index <= t.index)
                    out << sent.raw_lines[raw_i++].text << '\n';
                write_token(out, t, task);
            }
            while (raw_i < sent.raw_lines.size()) out << sent.raw_lines[raw_i++].text << '\n';
            out << '\n';
        }
    }
    return out.str();
}

uint64_t corpus_hash(const std::vector<Document>& docs) {
    uint64_t h = fnv1a64("gumdrop-corpus");
    for (const auto& doc : docs) {
        h = fnv1a64(doc.name, h);
        h = fnv1a64(doc.genre, h);
        for (const auto& sent : doc.sentences) {
            for (const auto& t : sent.tokens) {
                h = fnv1a64(t.form, h);
                h = fnv1a64(t.lemma, h);
                h = fnv1a64(t.upos, h);
                h = fnv1a64(t.xpos, h);
                h = fnv1a64(t.deprel, h);
                h = fnv1a64(std::to_string(t.has_head ? t.head : -1), h);
                h = fnv1a64(seg_label_name(t.seg_label), h);
                h = fnv1a64(conn_label_name(t.conn_label), h);
                h = fnv1a64(t.sent_initial ? "1" : "0", h);
            }
            h = fnv1a64("\x1e", h);
        }
    }
    return h;
}

bool lacks_syntax(const std::vector<Document>& docs) {
    for (const auto& doc : docs)
        for (const auto& sent : doc.sentences)
            for (const auto& t : sent.tokens)
                if (t.has_head) return false;
    return true;
}

}  // namespace gumdrop
