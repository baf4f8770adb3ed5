#include "gumdrop/featurizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace gumdrop {

// ---------------------------------------------------------------------------
// Character classification

namespace {

bool is_digit_cp(uint32_t cp) { return cp >= '0' && cp <= '9'; }

bool is_letter_cp(uint32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return true;
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0xC0 && cp <= 0x24F) return true;    // Latin-1 supplement + extended
    if (cp >= 0x370 && cp <= 0x3FF) return true;   // Greek
    if (cp >= 0x400 && cp <= 0x52F) return true;   // Cyrillic
    if (cp >= 0x590 && cp <= 0x6FF) return true;   // Hebrew, Arabic
    if (cp >= 0x3040 && cp <= 0x30FF) return true; // kana
    if (cp >= 0x3400 && cp <= 0x9FFF) return true; // CJK
    if (cp >= 0xAC00 && cp <= 0xD7AF) return true; // hangul
    return false;
}

bool is_upper_cp(uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return true;
    return cp >= 0xC0 && cp <= 0xDE && cp != 0xD7;
}

bool is_lower_cp(uint32_t cp) {
    if (cp >= 'a' && cp <= 'z') return true;
    return cp >= 0xDF && cp <= 0xFF && cp != 0xF7;
}

}  // namespace

const std::set<uint32_t>& default_vowel_set() {
    static const std::set<uint32_t> kVowels = [] {
        std::set<uint32_t> v;
        for (uint32_t cp : utf8_codepoints(
                 "aeiouAEIOU"
                 "áàâäãåāăéèêëēĕíìîïīĭóòôöõōŏúùûüūŭýÿ"
                 "ÁÀÂÄÃÅĀĂÉÈÊËĒĔÍÌÎÏĪĬÓÒÔÖÕŌŎÚÙÛÜŪŬÝ"))
            v.insert(cp);
        return v;
    }();
    return kVowels;
}

std::set<uint32_t> vowel_set_from_utf8(std::string_view vowels) {
    std::set<uint32_t> v;
    for (uint32_t cp : utf8_codepoints(vowels)) v.insert(cp);
    return v;
}

CharTypeCounts char_type_counts(std::string_view form, const std::set<uint32_t>& vowels) {
    CharTypeCounts c;
    for (uint32_t cp : utf8_codepoints(form)) {
        if (is_digit_cp(cp))
            ++c.digits;
        else if (vowels.count(cp))
            ++c.vowels;
        else if (is_letter_cp(cp))
            ++c.consonants;
        else
            ++c.other;
    }
    return c;
}

std::pair<std::string, std::string> first_last_chars(std::string_view form, std::string_view language) {
    if (form.empty()) return {"", ""};
    if (language == "zho") {
        char buf[3];
        std::snprintf(buf, sizeof buf, "%02x", static_cast<unsigned char>(form.front()));
        std::string first = buf;
        std::snprintf(buf, sizeof buf, "%02x", static_cast<unsigned char>(form.back()));
        return {first, buf};
    }
    auto cps = utf8_codepoints(form);
    return {utf8_encode(cps.front()), utf8_encode(cps.back())};
}

// ---------------------------------------------------------------------------
// Dependency features

const std::set<std::string>& default_clausal_relations() {
    static const std::set<std::string> kClausal = {"advcl", "acl",   "acl:relcl", "xcomp",
                                                   "ccomp", "csubj", "parataxis"};
    return kClausal;
}

namespace {

// children[i] holds 1-based child indices of token i (0 = root), in position order.
std::vector<std::vector<int>> child_lists(const Sentence& s) {
    std::vector<std::vector<int>> children(s.size() + 1);
    for (const auto& t : s.tokens)
        if (t.has_head && t.head >= 0 && t.head <= s.size() && t.head != t.index)
            children[t.head].push_back(t.index);
    return children;
}

// Contiguous hull of the subtree rooted at `root` (inclusive).
std::pair<int, int> subtree_hull(const std::vector<std::vector<int>>& children, int root, int n) {
    int lo = root, hi = root;
    std::vector<int> stack = {root};
    std::vector<char> seen(n + 1, 0);
    seen[root] = 1;
    while (!stack.empty()) {
        int node = stack.back();
        stack.pop_back();
        lo = std::min(lo, node);
        hi = std::max(hi, node);
        for (int c : children[node]) {
            if (seen[c]) continue;
            seen[c] = 1;
            stack.push_back(c);
        }
    }
    return {lo, hi};
}

}  // namespace

std::vector<std::string> dep_brackets(const Sentence& sentence, const std::set<std::string>& clausal) {
    const int n = sentence.size();
    std::vector<std::string> tags(n, "O");
    auto children = child_lists(sentence);

    struct Span {
        int lo, hi;
        std::string rel;
    };
    std::vector<Span> spans;
    for (const auto& t : sentence.tokens) {
        if (!clausal.count(t.deprel)) continue;
        auto [lo, hi] = subtree_hull(children, t.index, n);
        spans.push_back({lo, hi, t.deprel});
    }
    // Paint larger spans first so the innermost clause wins on overlap.
    std::stable_sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
        int sa = a.hi - a.lo, sb = b.hi - b.lo;
        if (sa != sb) return sa > sb;
        return a.lo < b.lo;
    });
    for (const auto& sp : spans) {
        for (int p = sp.lo; p <= sp.hi; ++p) {
            const char* mark = p == sp.lo ? "B-" : (p == sp.hi ? "E-" : "I-");
            tags[p - 1] = mark + sp.rel;
        }
    }
    return tags;
}

int head_distance(const Sentence& sentence, int index) {
    const Token& t = sentence.tokens.at(index - 1);
    if (!t.has_head || t.head == 0) return 0;
    return t.head - t.index;
}

DistBin bin_head_distance(int d) {
    if (d == 0) return DistBin::zero;
    int a = d < 0 ? -d : d;
    if (a == 1) return d < 0 ? DistBin::next_left : DistBin::next_right;
    if (a <= 3) return d < 0 ? DistBin::close_left : DistBin::close_right;
    return d < 0 ? DistBin::far_left : DistBin::far_right;
}

const char* dist_bin_name(DistBin b) {
    switch (b) {
        case DistBin::zero: return "zero";
        case DistBin::next_left: return "next-left";
        case DistBin::next_right: return "next-right";
        case DistBin::close_left: return "close-left";
        case DistBin::close_right: return "close-right";
        case DistBin::far_left: return "far-left";
        case DistBin::far_right: return "far-right";
    }
    return "?";
}

namespace {

std::vector<int> tree_depths(const Sentence& s) {
    const int n = s.size();
    std::vector<int> depth(n + 1, -1);
    depth[0] = -1;  // virtual root's parent slot; real roots get 0
    for (int i = 1; i <= n; ++i) {
        int cur = i, steps = 0;
        // Walk to the root; bail out on malformed cycles.
        std::vector<int> path;
        while (steps <= n) {
            const Token& t = s.tokens[cur - 1];
            if (!t.has_head || t.head == 0 || t.head == cur || t.head > n) {
                break;
            }
            path.push_back(cur);
            cur = t.head;
            if (depth[cur] >= 0) break;
            ++steps;
        }
        int base = depth[cur] >= 0 ? depth[cur] : 0;
        for (auto it = path.rbegin(); it != path.rend(); ++it) depth[*it] = ++base;
        if (depth[i] < 0) depth[i] = 0;
    }
    return depth;
}

}  // namespace

SubtreeFeatures subtree_features(const Sentence& sentence, int index) {
    const int n = sentence.size();
    SubtreeFeatures f;
    auto children = child_lists(sentence);
    auto depth = tree_depths(sentence);

    auto head_of = [&](int pos) -> int {
        const Token& t = sentence.tokens[pos - 1];
        return t.has_head ? t.head : -1;
    };
    int par = 0, gpar = 0;
    {
        int h = head_of(index);
        par = h > 0 && h <= n ? h : 0;
        if (par) {
            int g = head_of(par);
            gpar = g > 0 && g <= n ? g : 0;
        }
    }
    const std::array<int, 7> window = {index - 2, index - 1, index, index + 1, index + 2, par, gpar};
    for (int w = 0; w < 7; ++w) {
        int p = window[w];
        if (p < 1 || p > n) {
            f.deprel[w] = "NONE";
            f.depth[w] = -1;
        } else {
            f.deprel[w] = sentence.tokens[p - 1].deprel;
            f.depth[w] = depth[p];
        }
    }
    for (int w = 0; w < 5; ++w) {
        int p = window[w];
        if (p >= 1 && p <= n) {
            if (p - 1 >= 1) f.same_parent_left[w] = head_of(p) == head_of(p - 1);
            if (p + 1 <= n) f.same_parent_right[w] = head_of(p) == head_of(p + 1);
        }
    }
    // Descendant geometry of the node itself.
    std::vector<int> stack = {index};
    std::vector<char> seen(n + 1, 0);
    seen[index] = 1;
    std::vector<int> desc;
    while (!stack.empty()) {
        int node = stack.back();
        stack.pop_back();
        if (node != index) desc.push_back(node);
        for (int c : children[node])
            if (!seen[c]) {
                seen[c] = 1;
                stack.push_back(c);
            }
    }
    std::sort(desc.begin(), desc.end());
    int near_l = 0, far_l = 0, near_r = 0, far_r = 0;
    for (int p : desc) {
        if (p < index) {
            ++f.lspan;
            far_l = far_l ? far_l : p;  // smallest left position
            near_l = p;                 // largest left position
        } else {
            ++f.rspan;
            near_r = near_r ? near_r : p;
            far_r = p;
        }
    }
    auto rel_at = [&](int p) { return p ? sentence.tokens[p - 1].deprel : std::string("NONE"); };
    f.lchild_near = rel_at(near_l);
    f.lchild_far = rel_at(far_l);
    f.rchild_near = rel_at(near_r);
    f.rchild_far = rel_at(far_r);
    return f;
}

// ---------------------------------------------------------------------------
// Document scans

const std::vector<uint32_t>& default_quote_chars() {
    static const std::vector<uint32_t> kQuotes = utf8_codepoints("\"“”«»");
    return kQuotes;
}

QuoteParenState quote_paren_state(const Document& doc, const std::vector<uint32_t>& quotes) {
    QuoteParenState st;
    bool quote_open = false;
    int paren_depth = 0;
    for (const auto& sent : doc.sentences) {
        for (const auto& t : sent.tokens) {
            bool q_before = quote_open;
            int p_before = paren_depth;
            for (uint32_t cp : utf8_codepoints(t.form)) {
                if (std::find(quotes.begin(), quotes.end(), cp) != quotes.end())
                    quote_open = !quote_open;
                else if (cp == '(')
                    ++paren_depth;
                else if (cp == ')')
                    paren_depth = std::max(0, paren_depth - 1);
            }
            st.in_quote.push_back(q_before && quote_open);
            st.in_paren.push_back(p_before > 0 && paren_depth > 0);
        }
    }
    return st;
}

std::vector<double> sent_percentiles(const Document& doc) {
    const int n = static_cast<int>(doc.sentences.size());
    std::vector<double> pct(n, 0.0);
    for (int i = 0; i < n; ++i) pct[i] = double(i) / double(std::max(n - 1, 1));
    return pct;
}

// ---------------------------------------------------------------------------
// Lexicon

std::string Lexicon::lookup(const std::string& form, const std::string& pos) const {
    if (ranks.count(form)) return form;
    return backoff == Backoff::pos_category ? pos : std::string("<unk>");
}

double Lexicon::log_freq(const std::string& form) const {
    auto it = counts.find(form);
    return std::log(1.0 + (it == counts.end() ? 0.0 : double(it->second)));
}

std::string Lexicon::serialize() const {
    std::ostringstream out;
    out << "#n\t" << n << '\t' << (backoff == Backoff::pos_category ? "pos" : "unk") << '\n';
    for (const auto& [form, count] : counts) {
        auto it = ranks.find(form);
        out << form << '\t' << (it == ranks.end() ? 0 : it->second) << '\t' << count << '\n';
    }
    return out.str();
}

Lexicon Lexicon::parse(std::string_view text) {
    Lexicon lex;
    bool first = true;
    for (const auto& raw : split(text, '\n')) {
        if (raw.empty()) continue;
        auto cols = split(raw, '\t');
        if (first && cols.size() == 3 && cols[0] == "#n") {
            lex.n = std::stoi(cols[1]);
            lex.backoff = cols[2] == "unk" ? Backoff::unk : Backoff::pos_category;
            first = false;
            continue;
        }
        first = false;
        if (cols.size() != 3) throw ParseError("lexicon line needs 3 columns: " + raw);
        int rank = std::stoi(cols[1]);
        if (rank > 0) lex.ranks[cols[0]] = rank;
        lex.counts[cols[0]] = std::stoll(cols[2]);
    }
    return lex;
}

Lexicon build_lexicon(const std::vector<std::string>& forms, int n) {
    Lexicon lex;
    lex.n = n;
    for (const auto& f : forms) lex.counts[f]++;
    std::vector<std::pair<std::string, int64_t>> by_freq(lex.counts.begin(), lex.counts.end());
    std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    const int keep = std::min<int>(n, static_cast<int>(by_freq.size()));
    for (int i = 0; i < keep; ++i) lex.ranks[by_freq[i].first] = i + 1;
    return lex;
}

Lexicon build_lexicon(const std::vector<Document>& docs, int n) {
    std::vector<std::string> forms;
    for (const auto& doc : docs)
        for (const auto& sent : doc.sentences)
            for (const auto& t : sent.tokens) forms.push_back(t.form);
    return build_lexicon(forms, n);
}

// ---------------------------------------------------------------------------
// FeatureSchema

void FeatureSchema::add_categorical(std::string name, std::vector<std::string> vocab) {
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    if (by_name_.count(name)) throw ConfigError("duplicate schema entry: " + name);
    by_name_[name] = size();
    entries_.push_back({name, FeatureKind::categorical, std::move(vocab)});
    slots_.push_back(n_cat_++);
}

void FeatureSchema::add_numeric(std::string name) {
    if (by_name_.count(name)) throw ConfigError("duplicate schema entry: " + name);
    by_name_[name] = size();
    entries_.push_back({name, FeatureKind::numeric, {}});
    slots_.push_back(n_num_++);
}

int FeatureSchema::index_of(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
}

int FeatureSchema::cat_id(int entry, const std::string& value) const {
    const auto& vocab = entries_[entry].vocab;
    auto it = std::lower_bound(vocab.begin(), vocab.end(), value);
    if (it != vocab.end() && *it == value) return static_cast<int>(it - vocab.begin());
    return static_cast<int>(vocab.size());
}

const std::string& FeatureSchema::cat_name(int entry, int id) const {
    static const std::string kUnk = "<unk>";
    const auto& vocab = entries_[entry].vocab;
    if (id < 0 || id >= static_cast<int>(vocab.size())) return kUnk;
    return vocab[id];
}

uint64_t FeatureSchema::fingerprint() const { return fnv1a64(serialize()); }

std::string FeatureSchema::serialize() const {
    std::ostringstream out;
    for (const auto& e : entries_) {
        out << e.name << '\t' << (e.kind == FeatureKind::categorical ? "cat" : "num");
        for (const auto& v : e.vocab) out << '\t' << v;
        out << '\n';
    }
    return out.str();
}

FeatureSchema FeatureSchema::parse(std::string_view text) {
    FeatureSchema schema;
    for (const auto& raw : split(text, '\n')) {
        if (raw.empty()) continue;
        auto cols = split(raw, '\t');
        if (cols.size() < 2) throw ParseError("schema line needs name and kind: " + raw);
        if (cols[1] == "num") {
            schema.add_numeric(cols[0]);
        } else if (cols[1] == "cat") {
            schema.add_categorical(cols[0], {cols.begin() + 2, cols.end()});
        } else {
            throw ParseError("unknown schema kind: " + cols[1]);
        }
    }
    return schema;
}

FeatureSchema FeatureSchema::project(const std::vector<int>& kept) const {
    FeatureSchema out;
    for (int i : kept) {
        const auto& e = entries_[i];
        if (e.kind == FeatureKind::categorical)
            out.add_categorical(e.name, e.vocab);
        else
            out.add_numeric(e.name);
    }
    return out;
}

FeatureRecord FeatureSchema::project_record(const FeatureRecord& r, const std::vector<int>& kept) const {
    FeatureRecord out;
    for (int i : kept) {
        if (entries_[i].kind == FeatureKind::categorical)
            out.cats.push_back(r.cats[slots_[i]]);
        else
            out.nums.push_back(r.nums[slots_[i]]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Association measures and filtering

namespace {

double entropy(const std::map<int, int64_t>& counts, double total) {
    double h = 0;
    for (const auto& [_, c] : counts) {
        double p = double(c) / total;
        if (p > 0) h -= p * std::log(p);
    }
    return h;
}

}  // namespace

double theils_u(const std::vector<int>& x, const std::vector<int>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("theils_u: length mismatch");
    if (x.empty()) throw std::invalid_argument("theils_u: empty input");
    const double n = double(x.size());
    std::map<int, int64_t> cy;
    std::map<int, std::map<int, int64_t>> joint;  // x value -> y counts
    std::map<int, int64_t> cx;
    for (size_t i = 0; i < x.size(); ++i) {
        cy[y[i]]++;
        cx[x[i]]++;
        joint[x[i]][y[i]]++;
    }
    const double hy = entropy(cy, n);
    if (hy == 0.0) return 1.0;
    double hyx = 0;
    for (const auto& [xv, ymap] : joint) {
        double nx = double(cx[xv]);
        hyx += (nx / n) * entropy(ymap, nx);
    }
    double u = (hy - hyx) / hy;
    return std::clamp(u, 0.0, 1.0);
}

double theils_u(const std::vector<std::string>& x, const std::vector<std::string>& y) {
    std::map<std::string, int> ids;
    auto encode_series = [&ids](const std::vector<std::string>& s) {
        std::vector<int> out;
        out.reserve(s.size());
        for (const auto& v : s) out.push_back(ids.emplace(v, static_cast<int>(ids.size())).first->second);
        return out;
    };
    return theils_u(encode_series(x), encode_series(y));
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson_r: length mismatch");
    if (x.empty()) throw std::invalid_argument("pearson_r: empty input");
    const double n = double(x.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    const bool cx = sxx == 0, cy2 = syy == 0;
    if (cx || cy2) return cx && cy2 ? 1.0 : 0.0;
    return sxy / std::sqrt(sxx * syy);
}

FilterResult filter_redundant(const std::vector<FeatureRecord>& matrix, const FeatureSchema& schema,
                              double u_threshold, double r_threshold) {
    if (matrix.empty()) throw TrainError("filter_redundant: empty feature matrix");
    const int n = schema.size();
    std::vector<char> alive(n, 1);

    std::vector<std::vector<int>> cat_cols(n);
    std::vector<std::vector<double>> num_cols(n);
    for (int i = 0; i < n; ++i) {
        if (schema.entry(i).kind == FeatureKind::categorical) {
            cat_cols[i].reserve(matrix.size());
            for (const auto& r : matrix) cat_cols[i].push_back(schema.cat_value(r, i));
        } else {
            num_cols[i].reserve(matrix.size());
            for (const auto& r : matrix) num_cols[i].push_back(schema.num_value(r, i));
        }
    }
    // A categorical entry predictable from any other surviving one is dropped.
    for (int i = 0; i < n; ++i) {
        if (schema.entry(i).kind != FeatureKind::categorical) continue;
        for (int j = 0; j < n; ++j) {
            if (j == i || !alive[j] || schema.entry(j).kind != FeatureKind::categorical) continue;
            if (theils_u(cat_cols[j], cat_cols[i]) > u_threshold) {
                alive[i] = 0;
                break;
            }
        }
    }
    // Correlated numeric pairs keep the earlier-listed entry.
    for (int i = 0; i < n; ++i) {
        if (!alive[i] || schema.entry(i).kind != FeatureKind::numeric) continue;
        for (int j = i + 1; j < n; ++j) {
            if (!alive[j] || schema.entry(j).kind != FeatureKind::numeric) continue;
            if (std::abs(pearson_r(num_cols[i], num_cols[j])) > r_threshold) alive[j] = 0;
        }
    }
    FilterResult out;
    for (int i = 0; i < n; ++i)
        if (alive[i]) out.kept.push_back(i);
    out.schema = schema.project(out.kept);
    return out;
}

// ---------------------------------------------------------------------------
// FeatureResources

std::string FeatureResources::serialize() const {
    std::ostringstream out;
    out << "## language\n" << language << '\n';
    out << "## clausal\n";
    for (const auto& r : clausal_relations) out << r << '\n';
    out << "## vowels\n";
    for (uint32_t cp : vowel_set) out << utf8_encode(cp);
    out << '\n';
    out << "## quotes\n";
    for (uint32_t cp : quote_chars) out << utf8_encode(cp);
    out << '\n';
    out << "## top_meta\n" << top_meta.serialize();
    out << "## top_base\n" << top_base.serialize();
    out << "## tagger\n" << tagger.serialize();
    return out.str();
}

FeatureResources FeatureResources::parse(std::string_view text) {
    FeatureResources res;
    res.clausal_relations.clear();
    std::map<std::string, std::string> sections;
    std::string cur;
    for (const auto& line : split(text, '\n')) {
        if (line.rfind("## ", 0) == 0) {
            cur = line.substr(3);
            continue;
        }
        if (cur.empty()) continue;
        sections[cur] += line;
        sections[cur] += '\n';
    }
    res.language = strip(sections["language"]);
    for (const auto& r : split(sections["clausal"], '\n'))
        if (!r.empty()) res.clausal_relations.insert(r);
    res.vowel_set = vowel_set_from_utf8(strip(sections["vowels"]));
    res.quote_chars = utf8_codepoints(strip(sections["quotes"]));
    res.top_meta = Lexicon::parse(sections["top_meta"]);
    res.top_base = Lexicon::parse(sections["top_base"]);
    res.tagger = UnigramTagger::parse(sections["tagger"]);
    return res;
}

// ---------------------------------------------------------------------------
// TokenFeaturizer

namespace {

const std::map<std::string, FeatureKind>& feature_registry() {
    static const std::map<std::string, FeatureKind> kRegistry = [] {
        std::map<std::string, FeatureKind> r;
        auto cat = [&r](const char* n) { r[n] = FeatureKind::categorical; };
        auto num = [&r](const char* n) { r[n] = FeatureKind::numeric; };
        cat("word");
        cat("word_top100");
        cat("word_top200");
        cat("first_char");
        cat("last_char");
        cat("upos");
        cat("xpos");
        cat("upos_auto");
        cat("case");
        cat("genre");
        cat("deprel");
        cat("headdist_bin");
        cat("depbracket");
        num("digits");
        num("consonants");
        num("vowels");
        num("others");
        num("tok_len");
        num("tok_frq");
        num("in_quote");
        num("in_paren");
        num("sent_pct");
        num("sent_len");
        num("headdist");
        static const char* kPos[7] = {"m2", "m1", "0", "p1", "p2", "par", "gpar"};
        for (const char* p : kPos) {
            r[std::string("st_deprel_") + p] = FeatureKind::categorical;
            r[std::string("st_depth_") + p] = FeatureKind::numeric;
        }
        cat("st_lchild_near");
        cat("st_lchild_far");
        cat("st_rchild_near");
        cat("st_rchild_far");
        num("st_lspan");
        num("st_rspan");
        static const char* kWin[5] = {"m2", "m1", "0", "p1", "p2"};
        for (const char* p : kWin) {
            r[std::string("st_samepar_l_") + p] = FeatureKind::numeric;
            r[std::string("st_samepar_r_") + p] = FeatureKind::numeric;
        }
        return r;
    }();
    return kRegistry;
}

int subtree_slot(std::string_view suffix) {
    static const std::map<std::string, int, std::less<>> kSlots = {
        {"m2", 0}, {"m1", 1}, {"0", 2}, {"p1", 3}, {"p2", 4}, {"par", 5}, {"gpar", 6}};
    auto it = kSlots.find(suffix);
    return it == kSlots.end() ? -1 : it->second;
}

std::string case_category(const std::string& form) {
    auto cps = utf8_codepoints(form);
    if (cps.empty()) return "other";
    bool any_letter = false, any_digit = false, any_other = false;
    int uppers = 0, lowers = 0;
    for (uint32_t cp : cps) {
        if (is_digit_cp(cp))
            any_digit = true;
        else if (is_letter_cp(cp)) {
            any_letter = true;
            if (is_upper_cp(cp)) ++uppers;
            if (is_lower_cp(cp)) ++lowers;
        } else
            any_other = true;
    }
    if (!any_letter) return any_digit ? "num" : (any_other ? "punct" : "other");
    if (uppers == 0) return "lower";
    if (lowers == 0 && uppers > 1) return "upper";
    if (is_upper_cp(cps.front()) && uppers == 1) return "title";
    return "mixed";
}

}  // namespace

bool TokenFeaturizer::known_feature(const std::string& name) {
    return feature_registry().count(name) != 0;
}

FeatureKind TokenFeaturizer::feature_kind(const std::string& name) {
    auto it = feature_registry().find(name);
    if (it == feature_registry().end()) throw ConfigError("unknown feature: " + name);
    return it->second;
}

std::vector<std::string> TokenFeaturizer::known_features() {
    std::vector<std::string> out;
    for (const auto& [name, _] : feature_registry()) out.push_back(name);
    return out;
}

DocDerived TokenFeaturizer::derive(const Document& doc) const {
    DocDerived d;
    for (size_t si = 0; si < doc.sentences.size(); ++si) {
        const auto& sent = doc.sentences[si];
        auto tags = dep_brackets(sent, res_->clausal_relations);
        for (size_t ti = 0; ti < sent.tokens.size(); ++ti) {
            d.flat.push_back(&sent.tokens[ti]);
            d.sent_of.push_back(static_cast<int>(si));
            d.depbracket.push_back(std::move(tags[ti]));
            d.subtree.push_back(subtree_features(sent, static_cast<int>(ti) + 1));
        }
    }
    d.qp = quote_paren_state(doc, res_->quote_chars);
    d.sent_pct = sent_percentiles(doc);
    return d;
}

std::string TokenFeaturizer::cat_value(const Document& doc, const DocDerived& d, int pos,
                                       const std::string& name) const {
    const Token& t = *d.flat[pos];
    const Sentence& sent = doc.sentences[d.sent_of[pos]];
    auto pos_backoff = [&]() -> std::string {
        return t.upos != "_" ? t.upos : res_->tagger.tag(t.form);
    };
    if (name == "word") return t.form;
    if (name == "word_top100") return res_->top_meta.lookup(t.form, pos_backoff());
    if (name == "word_top200") return res_->top_base.lookup(t.form, pos_backoff());
    if (name == "first_char") return first_last_chars(t.form, res_->language).first;
    if (name == "last_char") return first_last_chars(t.form, res_->language).second;
    if (name == "upos") return t.upos;
    if (name == "xpos") return t.xpos;
    if (name == "upos_auto") return res_->tagger.tag(t.form);
    if (name == "case") return case_category(t.form);
    if (name == "genre") return doc.genre;
    if (name == "deprel") return t.deprel;
    if (name == "headdist_bin") return dist_bin_name(bin_head_distance(head_distance(sent, t.index)));
    if (name == "depbracket") return d.depbracket[pos];
    if (name.rfind("st_", 0) == 0) {
        const SubtreeFeatures& f = d.subtree[pos];
        if (name.rfind("st_deprel_", 0) == 0) {
            int slot = subtree_slot(name.substr(10));
            if (slot >= 0) return f.deprel[slot];
        }
        if (name == "st_lchild_near") return f.lchild_near;
        if (name == "st_lchild_far") return f.lchild_far;
        if (name == "st_rchild_near") return f.rchild_near;
        if (name == "st_rchild_far") return f.rchild_far;
    }
    throw ConfigError("unknown categorical feature: " + name);
}

double TokenFeaturizer::num_value(const Document& doc, const DocDerived& d, int pos,
                                  const std::string& name) const {
    const Token& t = *d.flat[pos];
    const Sentence& sent = doc.sentences[d.sent_of[pos]];
    if (name == "digits" || name == "consonants" || name == "vowels" || name == "others") {
        CharTypeCounts c = char_type_counts(t.form, res_->vowel_set);
        if (name == "digits") return c.digits;
        if (name == "consonants") return c.consonants;
        if (name == "vowels") return c.vowels;
        return c.other;
    }
    if (name == "tok_len") return double(utf8_codepoints(t.form).size());
    if (name == "tok_frq") return res_->top_base.log_freq(t.form);
    if (name == "in_quote") return d.qp.in_quote[pos];
    if (name == "in_paren") return d.qp.in_paren[pos];
    if (name == "sent_pct") return d.sent_pct[d.sent_of[pos]];
    if (name == "sent_len") return double(sent.size());
    if (name == "headdist") return double(head_distance(sent, t.index));
    if (name.rfind("st_", 0) == 0) {
        const SubtreeFeatures& f = d.subtree[pos];
        if (name.rfind("st_depth_", 0) == 0) {
            int slot = subtree_slot(name.substr(9));
            if (slot >= 0) return f.depth[slot];
        }
        if (name == "st_lspan") return f.lspan;
        if (name == "st_rspan") return f.rspan;
        if (name.rfind("st_samepar_l_", 0) == 0) {
            int slot = subtree_slot(name.substr(13));
            if (slot >= 0 && slot < 5) return f.same_parent_left[slot];
        }
        if (name.rfind("st_samepar_r_", 0) == 0) {
            int slot = subtree_slot(name.substr(13));
            if (slot >= 0 && slot < 5) return f.same_parent_right[slot];
        }
    }
    throw ConfigError("unknown numeric feature: " + name);
}

FeatureSchema TokenFeaturizer::build_window_schema(const std::vector<std::string>& names, int window,
                                                   const std::vector<Document>& train_docs,
                                                   int max_vocab) const {
    if (window < 1 || window % 2 == 0) throw ConfigError("window size must be odd and >= 1");
    for (const auto& name : names) feature_kind(name);  // validates

    // Harvest categorical vocabularies with counts.
    std::map<std::string, std::map<std::string, int64_t>> harvest;
    for (const auto& doc : train_docs) {
        DocDerived d = derive(doc);
        for (int p = 0; p < static_cast<int>(d.flat.size()); ++p)
            for (const auto& name : names)
                if (feature_kind(name) == FeatureKind::categorical)
                    harvest[name][cat_value(doc, d, p, name)]++;
    }
    std::map<std::string, std::vector<std::string>> vocabs;
    for (auto& [name, counts] : harvest) {
        std::vector<std::pair<std::string, int64_t>> items(counts.begin(), counts.end());
        if (max_vocab > 0 && static_cast<int>(items.size()) > max_vocab) {
            std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
            });
            items.resize(max_vocab);
        }
        std::vector<std::string> vocab;
        vocab.reserve(items.size() + 2);
        for (const auto& [v, _] : items) vocab.push_back(v);
        vocab.push_back("<s>");
        vocab.push_back("</s>");
        vocabs[name] = std::move(vocab);
    }

    FeatureSchema schema;
    const int k = (window - 1) / 2;
    for (int off = -k; off <= k; ++off) {
        for (const auto& name : names) {
            std::string full = name + "@" + std::to_string(off);
            if (feature_kind(name) == FeatureKind::categorical)
                schema.add_categorical(full, vocabs[name]);
            else
                schema.add_numeric(full);
        }
    }
    return schema;
}

FeatureRecord TokenFeaturizer::window_features(const Document& doc, const DocDerived& d, int pos,
                                               const FeatureSchema& schema) const {
    FeatureRecord rec;
    const int n = static_cast<int>(d.flat.size());
    for (int i = 0; i < schema.size(); ++i) {
        const auto& e = schema.entry(i);
        size_t at = e.name.rfind('@');
        if (at == std::string::npos) throw ConfigError("window schema entry lacks offset: " + e.name);
        std::string base = e.name.substr(0, at);
        int off = std::stoi(e.name.substr(at + 1));
        int p = pos + off;
        if (e.kind == FeatureKind::categorical) {
            std::string value;
            if (p < 0)
                value = "<s>";
            else if (p >= n)
                value = "</s>";
            else
                value = cat_value(doc, d, p, base);
            rec.cats.push_back(schema.cat_id(i, value));
        } else {
            rec.nums.push_back(p < 0 || p >= n ? 0.0 : num_value(doc, d, p, base));
        }
    }
    return rec;
}

}  // namespace gumdrop
