#include "glyphid/ids.hpp"

#include "glyphid/utf8.hpp"

#include <algorithm>
#include <array>
#include <fstream>

namespace glyphid {

namespace {

constexpr std::array<StructOp, 12> kOps = {{
    {0x2FF0, 2}, // left-right
    {0x2FF1, 2}, // top-bottom
    {0x2FF2, 3}, // left-middle-right
    {0x2FF3, 3}, // top-middle-bottom
    {0x2FF4, 2}, // full surround
    {0x2FF5, 2}, // surround from above
    {0x2FF6, 2}, // surround from below
    {0x2FF7, 2}, // surround from left
    {0x2FF8, 2}, // surround from upper left
    {0x2FF9, 2}, // surround from upper right
    {0x2FFA, 2}, // surround from lower left
    {0x2FFB, 2}, // overlaid
}};

} // namespace

bool is_struct_op(char32_t cp) { return cp >= kIdcFirst && cp <= kIdcLast; }

const StructOp& struct_op(char32_t cp) {
    if (!is_struct_op(cp))
        fail(Errc::InvalidArgument, utf8::codepoint_ref(cp) + " is not a structure operator");
    return kOps[cp - kIdcFirst];
}

std::span<const StructOp> all_struct_ops() { return kOps; }

int IdsTree::leaf_count() const {
    if (is_leaf()) return 1;
    int n = 0;
    for (const auto& c : children) n += c.leaf_count();
    return n;
}

IdsTree IdsTree::leaf(std::string label) {
    IdsTree t;
    t.label = std::move(label);
    return t;
}

IdsTree IdsTree::node(char32_t op, std::vector<IdsTree> children) {
    const StructOp& so = struct_op(op);
    if (static_cast<int>(children.size()) != so.arity)
        fail(Errc::ArityError, "operator " + utf8::encode(op) + " takes " +
                                   std::to_string(so.arity) + " children, got " +
                                   std::to_string(children.size()));
    IdsTree t;
    t.op = op;
    t.children = std::move(children);
    return t;
}

Token Token::op(char32_t cp) {
    struct_op(cp);
    return {TokenKind::Op, utf8::encode(cp)};
}

Token Token::radical(std::string label) {
    if (label.empty()) fail(Errc::InvalidArgument, "empty radical label");
    return {TokenKind::Radical, std::move(label)};
}

Token Token::eos() { return {TokenKind::Eos, kEosText}; }

std::vector<Token> tokenize_ids(std::string_view text) {
    std::vector<Token> tokens;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t start = pos;
        char32_t cp = utf8::decode_one(text, pos);
        if (is_struct_op(cp)) {
            tokens.push_back(Token::op(cp));
        } else if (cp == U'{') {
            // bracketed multi-codepoint atom; token keeps the braces
            size_t depth = 1;
            while (pos < text.size() && depth > 0) {
                char32_t c = utf8::decode_one(text, pos);
                if (c == U'{') ++depth;
                if (c == U'}') --depth;
            }
            if (depth != 0) fail(Errc::ParseError, "unterminated '{' atom in IDS string");
            std::string atom(text.substr(start, pos - start));
            if (atom == "{}") fail(Errc::ParseError, "empty '{}' atom in IDS string");
            tokens.push_back(Token::radical(std::move(atom)));
        } else if (cp == U'}') {
            fail(Errc::ParseError, "unmatched '}' in IDS string");
        } else {
            tokens.push_back(Token::radical(std::string(text.substr(start, pos - start))));
        }
    }
    return tokens;
}

namespace {

IdsTree parse_prefix(std::span<const Token> tokens, size_t& pos) {
    if (pos >= tokens.size())
        fail(Errc::ArityError, "operator is missing children at token " + std::to_string(pos));
    const Token& t = tokens[pos++];
    switch (t.kind) {
    case TokenKind::Radical:
        return IdsTree::leaf(t.text);
    case TokenKind::Op: {
        char32_t cp = utf8::decode(t.text)[0];
        const StructOp& so = struct_op(cp);
        std::vector<IdsTree> children;
        children.reserve(static_cast<size_t>(so.arity));
        for (int i = 0; i < so.arity; ++i) children.push_back(parse_prefix(tokens, pos));
        IdsTree node;
        node.op = cp;
        node.children = std::move(children);
        return node;
    }
    case TokenKind::Eos:
        fail(Errc::ParseError, "unexpected EOS token inside IDS sequence");
    }
    fail(Errc::ParseError, "unreachable token kind");
}

} // namespace

IdsTree parse_tokens(std::span<const Token> tokens) {
    if (tokens.empty()) fail(Errc::EmptyInput, "empty IDS token sequence");
    size_t pos = 0;
    IdsTree tree = parse_prefix(tokens, pos);
    if (pos != tokens.size())
        fail(Errc::TrailingInput, std::to_string(tokens.size() - pos) +
                                      " token(s) remain after a complete tree");
    return tree;
}

IdsTree parse_ids(std::string_view text) {
    if (text.empty()) fail(Errc::EmptyInput, "empty IDS string");
    return parse_tokens(tokenize_ids(text));
}

std::string serialize_ids(const IdsTree& tree) {
    if (tree.is_leaf()) return tree.label;
    std::string out = utf8::encode(tree.op);
    for (const auto& c : tree.children) out += serialize_ids(c);
    return out;
}

std::vector<Token> tree_tokens(const IdsTree& tree) {
    std::vector<Token> out;
    auto walk = [&](auto&& self, const IdsTree& t) -> void {
        if (t.is_leaf()) {
            out.push_back(Token::radical(t.label));
            return;
        }
        out.push_back(Token::op(t.op));
        for (const auto& c : t.children) self(self, c);
    };
    walk(walk, tree);
    return out;
}

std::map<std::string, int> radical_multiset(const IdsTree& tree) {
    std::map<std::string, int> out;
    auto walk = [&](auto&& self, const IdsTree& t) -> void {
        if (t.is_leaf()) {
            ++out[t.label];
            return;
        }
        for (const auto& c : t.children) self(self, c);
    };
    walk(walk, tree);
    return out;
}

CharEntry make_entry(char32_t ch, IdsTree ids, std::vector<IdsTree> variants) {
    if (ids.is_leaf())
        fail(Errc::SchemaError, "entry for " + utf8::encode(ch) + " has no decomposition");
    for (const auto& v : variants)
        if (v.is_leaf())
            fail(Errc::SchemaError,
                 "variant for " + utf8::encode(ch) + " has no decomposition");
    CharEntry e;
    e.ch = ch;
    e.ids = std::move(ids);
    e.variants = std::move(variants);
    e.radicals = radical_multiset(e.ids);
    e.n = e.ids.leaf_count();
    return e;
}

void CharDict::add(CharEntry entry) {
    if (entries_.count(entry.ch))
        fail(Errc::DuplicateId, "duplicate dictionary entry for " + utf8::encode(entry.ch));
    std::string canon = serialize_ids(entry.ids);
    inverted_[canon].push_back(entry.ch);
    for (const auto& v : entry.variants) alias_inverted_[serialize_ids(v)].push_back(entry.ch);
    entries_.emplace(entry.ch, std::move(entry));
}

const CharEntry* CharDict::find(char32_t ch) const {
    auto it = entries_.find(ch);
    return it == entries_.end() ? nullptr : &it->second;
}

const CharEntry& CharDict::at(char32_t ch) const {
    const CharEntry* e = find(ch);
    if (!e) fail(Errc::UnknownTarget, utf8::encode(ch) + " is not in the dictionary");
    return *e;
}

std::vector<char32_t> CharDict::chars_for_ids(const std::string& ids_text) const {
    std::vector<char32_t> out;
    if (auto it = inverted_.find(ids_text); it != inverted_.end())
        out.insert(out.end(), it->second.begin(), it->second.end());
    if (auto it = alias_inverted_.find(ids_text); it != alias_inverted_.end())
        out.insert(out.end(), it->second.begin(), it->second.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

const std::vector<char32_t>* CharDict::canonical_chars(const std::string& ids_text) const {
    auto it = inverted_.find(ids_text);
    return it == inverted_.end() ? nullptr : &it->second;
}

std::set<std::string> CharDict::radical_vocabulary() const {
    std::set<std::string> vocab;
    for (const auto& [ch, entry] : entries_)
        for (const auto& [label, count] : entry.radicals) vocab.insert(label);
    return vocab;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

} // namespace

DictLoadResult load_dict(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open dictionary " + path.string());

    DictLoadResult result;
    std::string line;
    int line_no = 0;
    int data_lines = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        ++data_lines;
        try {
            auto fields = split_tabs(line);
            if (fields.size() < 3)
                fail(Errc::ParseError, "expected at least 3 tab-separated fields");
            char32_t cp = utf8::parse_codepoint_ref(fields[0]);
            auto char_cps = utf8::decode(fields[1]);
            if (char_cps.size() != 1)
                fail(Errc::ParseError, "character field must be a single codepoint");
            if (char_cps[0] != cp)
                fail(Errc::ParseError, "codepoint field " + fields[0] +
                                           " does not match character '" + fields[1] + "'");
            IdsTree ids = parse_ids(fields[2]);
            std::vector<IdsTree> variants;
            for (size_t i = 3; i < fields.size(); ++i) {
                if (fields[i].empty()) continue;
                variants.push_back(parse_ids(fields[i]));
            }
            result.dict.add(make_entry(cp, std::move(ids), std::move(variants)));
        } catch (const Error& e) {
            result.rejects.push_back({line_no, e.what()});
        }
    }
    if (result.dict.size() == 0) {
        if (data_lines == 0)
            fail(Errc::EmptyDictError, "dictionary " + path.string() + " has no entries");
        fail(Errc::EmptyDictError,
             "all " + std::to_string(data_lines) + " lines of " + path.string() + " were rejected");
    }
    return result;
}

} // namespace glyphid
