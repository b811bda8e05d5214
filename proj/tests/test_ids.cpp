#include "glyphid/errors.hpp"
#include "glyphid/ids.hpp"
#include "glyphid/rng.hpp"
#include "glyphid/utf8.hpp"

#include <doctest.h>

#include "support.hpp"

#include <fstream>
#include <set>
#include <string>
#include <vector>

using namespace glyphid;

namespace {

/// Independent generator: builds trees directly, never through the parser.
IdsTree random_tree(Rng& rng, int max_depth) {
    if (max_depth == 0 || rng.unit() < 0.4) {
        if (rng.unit() < 0.25) return IdsTree::leaf("{r" + std::to_string(rng.range(0, 99)) + "}");
        static const std::vector<std::string> leaves = {"宀", "女", "子", "木", "日",
                                                        "月", "口", "人", "山", "火"};
        return IdsTree::leaf(leaves[static_cast<size_t>(rng.range(0, 9))]);
    }
    auto ops = all_struct_ops();
    char32_t op = ops[static_cast<size_t>(rng.range(0, static_cast<int>(ops.size()) - 1))].code;
    int arity = struct_op(op).arity;
    std::vector<IdsTree> children;
    for (int i = 0; i < arity; ++i) children.push_back(random_tree(rng, max_depth - 1));
    return IdsTree::node(op, std::move(children));
}

} // namespace

TEST_CASE("utf8 round trip") {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        std::u32string cps;
        int len = rng.range(1, 8);
        for (int j = 0; j < len; ++j) {
            char32_t cp;
            do {
                cp = static_cast<char32_t>(rng.range(1, 0x10FFFF));
            } while (cp >= 0xD800 && cp <= 0xDFFF);
            cps.push_back(cp);
        }
        std::string bytes;
        for (char32_t cp : cps) bytes += utf8::encode(cp);
        auto decoded = utf8::decode(bytes);
        REQUIRE(decoded.size() == cps.size());
        for (size_t j = 0; j < cps.size(); ++j) CHECK(decoded[j] == cps[j]);
    }
}

TEST_CASE("utf8 rejects malformed input") {
    CHECK_THROWS_AS(utf8::decode(std::string("\x80")), Error);
    CHECK_THROWS_AS(utf8::decode(std::string("\xC3")), Error);          // truncated
    CHECK_THROWS_AS(utf8::decode(std::string("\xC0\xAF")), Error);      // overlong
    CHECK_THROWS_AS(utf8::decode(std::string("\xED\xA0\x80")), Error);  // surrogate
}

TEST_CASE("codepoint references") {
    CHECK(utf8::parse_codepoint_ref("U+5B89") == U'安');
    CHECK(utf8::codepoint_ref(U'安') == "U+5B89");
    CHECK_THROWS_AS(utf8::parse_codepoint_ref("5B89"), Error);
    CHECK_THROWS_AS(utf8::parse_codepoint_ref("U+GGGG"), Error);
}

TEST_CASE("structure operators") {
    CHECK(all_struct_ops().size() == 12);
    CHECK(is_struct_op(U'⿰'));
    CHECK(is_struct_op(static_cast<char32_t>(0x2FFB)));
    CHECK(!is_struct_op(U'木'));
    CHECK(struct_op(U'⿲').arity == 3);
    CHECK(struct_op(U'⿳').arity == 3);
    for (const StructOp& op : all_struct_ops()) {
        bool ternary =
            op.code == static_cast<char32_t>(0x2FF2) || op.code == static_cast<char32_t>(0x2FF3);
        CHECK(op.arity == (ternary ? 3 : 2));
    }
}

TEST_CASE("tokenizer splits operators, radicals and braced atoms") {
    auto tokens = tokenize_ids("⿱宀{rad07}");
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[0] == Token::op(U'⿱'));
    CHECK(tokens[1] == Token::radical("宀"));
    CHECK(tokens[2] == Token::radical("{rad07}"));

    CHECK_THROWS_AS(tokenize_ids("⿱宀{unterminated"), Error);
    CHECK_THROWS_AS(tokenize_ids("⿱宀{}"), Error);
}

TEST_CASE("parser arity and trailing input errors") {
    CHECK_THROWS_AS(parse_ids(""), Error);
    CHECK_THROWS_AS(parse_ids("⿰木"), Error);       // missing child
    CHECK_THROWS_AS(parse_ids("⿲木木"), Error);     // ternary op, two children
    CHECK_THROWS_AS(parse_ids("木木"), Error);       // trailing input
    CHECK_THROWS_AS(parse_ids("⿰木木木"), Error);   // trailing input
}

TEST_CASE("parse round trip on random trees") {
    // Acceptance-style property at unit scale; the acceptance binary runs the
    // full 10k-tree version with timing.
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        IdsTree tree = random_tree(rng, 4);
        std::string text = serialize_ids(tree);
        CHECK(parse_ids(text) == tree);

        auto tokens = tree_tokens(tree);
        CHECK(parse_tokens(tokens) == tree);
    }
}

TEST_CASE("radical multiset counts leaves") {
    auto ms = radical_multiset(parse_ids("⿱木⿰木木"));
    REQUIRE(ms.size() == 1);
    CHECK(ms.at("木") == 3);

    ms = radical_multiset(parse_ids("⿲彳圭亍"));
    CHECK(ms.size() == 3);
    CHECK(ms.at("彳") == 1);
}

TEST_CASE("entry construction rejects bad shapes") {
    CHECK_THROWS_AS(make_entry(U'安', IdsTree::leaf("安"), {}), Error); // no decomposition
    auto entry = make_entry(U'安', parse_ids("⿱宀女"), {});
    CHECK(entry.n == 2);
    CHECK(entry.radicals.at("宀") == 1);
}

TEST_CASE("dictionary lookup and vocabulary") {
    CharDict dict;
    dict.add(make_entry(U'安', parse_ids("⿱宀女"), {}));
    dict.add(make_entry(U'好', parse_ids("⿰女子"), {}));
    CHECK(dict.size() == 2);
    CHECK(dict.find(U'安') != nullptr);
    CHECK(dict.find(U'木') == nullptr);
    CHECK_THROWS_AS(dict.at(U'木'), Error);
    CHECK(dict.at(U'好').n == 2);

    auto vocab = dict.radical_vocabulary();
    CHECK(vocab == std::set<std::string>{"宀", "女", "子"});

    auto owners = dict.chars_for_ids("⿱宀女");
    REQUIRE(owners.size() == 1);
    CHECK(owners[0] == U'安');

    CHECK_THROWS_AS(dict.add(make_entry(U'安', parse_ids("⿱宀女"), {})), Error); // duplicate
}

TEST_CASE("dictionary file loads real entries and reports rejects") {
    auto loaded = load_dict(testsupport::data_dir() / "chardict_small.tsv");
    CHECK(loaded.rejects.empty());
    CHECK(loaded.dict.size() == 31);
    CHECK(loaded.dict.at(U'安').n == 2);
    CHECK(loaded.dict.at(U'峰').variants.size() == 1);

    // Variants participate in exact-IDS lookup.
    auto owners = loaded.dict.chars_for_ids("⿱山夆");
    REQUIRE(owners.size() == 1);
    CHECK(owners[0] == U'峰');
}

TEST_CASE("dictionary file with broken lines keeps the good ones") {
    testsupport::TempDir tmp("dict");
    auto path = tmp / "d.tsv";
    {
        std::ofstream out(path);
        out << "U+5B89\t安\t⿱宀女\n";
        out << "U+597D\t好\t⿰女子女\n";      // trailing input
        out << "U+6797\t林\n";                // too few fields
        out << "U+660E\t暗\t⿰日月\n";        // codepoint mismatch
        out << "U+6797\t林\t⿰木木\n";
    }
    auto loaded = load_dict(path);
    CHECK(loaded.dict.size() == 2);
    REQUIRE(loaded.rejects.size() == 3);
    CHECK(loaded.rejects[0].line == 2);
}
