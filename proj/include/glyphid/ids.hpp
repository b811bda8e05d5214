#pragma once

#include "glyphid/errors.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace glyphid {

/// The 12 ideographic description operators, U+2FF0..U+2FFB.
inline constexpr char32_t kIdcFirst = 0x2FF0;
inline constexpr char32_t kIdcLast = 0x2FFB;

struct StructOp {
    char32_t code;
    int arity; // 2, except U+2FF2 / U+2FF3 which take 3
};

bool is_struct_op(char32_t cp);
const StructOp& struct_op(char32_t cp); // InvalidArgument for non-operators
std::span<const StructOp> all_struct_ops();

/// Parse tree of a character: operator nodes over radical leaves.
/// Leaves hold op == 0 and a nonempty UTF-8 label; a label is either a single
/// codepoint or a bracketed atom "{...}".
struct IdsTree {
    char32_t op = 0;
    std::string label;
    std::vector<IdsTree> children;

    bool is_leaf() const { return op == 0; }
    int leaf_count() const;

    static IdsTree leaf(std::string label);
    static IdsTree node(char32_t op, std::vector<IdsTree> children);

    bool operator==(const IdsTree&) const = default;
};

enum class TokenKind { Op, Radical, Eos };

struct Token {
    TokenKind kind;
    std::string text; // operator or radical label; "<EOS>" for Eos

    static Token op(char32_t cp);
    static Token radical(std::string label);
    static Token eos();

    bool operator==(const Token&) const = default;
    bool operator<(const Token& other) const {
        return kind != other.kind ? kind < other.kind : text < other.text;
    }
};

inline const std::string kEosText = "<EOS>";

/// Split an IDS string into operator and radical tokens.
/// Radical atoms in braces become single tokens including the braces.
std::vector<Token> tokenize_ids(std::string_view text);

/// Prefix parse. Errors: EmptyInput, ArityError, TrailingInput.
IdsTree parse_ids(std::string_view text);
IdsTree parse_tokens(std::span<const Token> tokens);

std::string serialize_ids(const IdsTree& tree);
std::vector<Token> tree_tokens(const IdsTree& tree);

/// Multiset of leaf labels (label -> multiplicity).
std::map<std::string, int> radical_multiset(const IdsTree& tree);

struct CharEntry {
    char32_t ch = 0;
    IdsTree ids;                     // canonical decomposition
    std::vector<IdsTree> variants;   // alias decompositions, matched by the reconstructor
    std::map<std::string, int> radicals; // derived from ids
    int n = 0;                       // derived leaf count, the 1/n initializer
};

CharEntry make_entry(char32_t ch, IdsTree ids, std::vector<IdsTree> variants = {});

struct DictReject {
    int line = 0;
    std::string message;
};

/// Immutable after load; all queries are const.
class CharDict {
public:
    void add(CharEntry entry); // DuplicateId if the codepoint is present

    const CharEntry* find(char32_t ch) const;
    const CharEntry& at(char32_t ch) const; // UnknownTarget
    size_t size() const { return entries_.size(); }
    const std::map<char32_t, CharEntry>& entries() const { return entries_; }

    /// Characters whose canonical or alias serialization equals `ids_text`,
    /// sorted by codepoint.
    std::vector<char32_t> chars_for_ids(const std::string& ids_text) const;

    /// Characters whose canonical serialization equals `ids_text` (exact
    /// inverse of the canonical trees).
    const std::vector<char32_t>* canonical_chars(const std::string& ids_text) const;

    /// All distinct leaf labels across canonical trees.
    std::set<std::string> radical_vocabulary() const;

private:
    std::map<char32_t, CharEntry> entries_;
    std::map<std::string, std::vector<char32_t>> inverted_;
    std::map<std::string, std::vector<char32_t>> alias_inverted_;
};

struct DictLoadResult {
    CharDict dict;
    std::vector<DictReject> rejects;
};

/// Load a TSV dictionary: `U+XXXX<TAB>char<TAB>ids[<TAB>ids-variant...]`.
/// '#' lines are comments. Malformed lines are collected in `rejects`;
/// EmptyDictError if no line yields an entry.
DictLoadResult load_dict(const std::filesystem::path& path);

} // namespace glyphid
