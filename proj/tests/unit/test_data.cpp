#include <doctest.h>

#include <fstream>
#include <set>

#include "pbsa/data.hpp"
#include "pbsa/errors.hpp"
#include "support.hpp"

using namespace pbsa;

namespace {

void write(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::set<std::uint64_t> ids_of(const std::vector<TokenizedSample>& xs) {
    std::set<std::uint64_t> out;
    for (const auto& s : xs) out.insert(s.id);
    return out;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("tokenize maps known words and falls back to unknown") {
    Vocabulary v;
    const auto a = v.add("a");
    const auto nice = v.add("nice");
    const auto day = v.add("day");
    CHECK(tokenize("A nice day", v) == std::vector<TokenId>{a, nice, day});
    CHECK(tokenize("xyzzy day", v) == std::vector<TokenId>{Vocabulary::kUnkId, day});
    CHECK_THROWS_AS(tokenize("", v), InvalidInput);
    CHECK_THROWS_AS(tokenize("  \t ", v), InvalidInput);
}

TEST_CASE("vocabulary reserves pad and unknown ids") {
    Vocabulary v;
    CHECK(v.size() == 2);
    CHECK(v.lookup("<pad>") == Vocabulary::kPadId);
    CHECK(v.lookup("<unk>") == Vocabulary::kUnkId);
    CHECK(v.add("x") == 2);
    CHECK(v.add("x") == 2);
    CHECK(v.token(2) == "x");
}

TEST_CASE("vocabulary build orders by frequency then text, and ids stay in range") {
    const auto v = Vocabulary::build({"b a a", "c b a"});
    CHECK(v.lookup("a") == 2);
    CHECK(v.lookup("b") == 3);
    CHECK(v.lookup("c") == 4);
    for (const auto* text : {"a b c d", "zz top", "A C"}) {
        for (TokenId id : tokenize(text, v)) CHECK(static_cast<std::size_t>(id) < v.size());
    }
}

TEST_CASE("vocabulary save and load round-trip") {
    const auto dir = testing::scratch_dir("vocab");
    const auto v = Vocabulary::build({"the cat sat", "the dog"});
    v.save(dir / "vocab.txt");
    CHECK(Vocabulary::load(dir / "vocab.txt") == v);
}

TEST_CASE("load_tsv reads one sample per line") {
    const auto dir = testing::scratch_dir("tsv");
    write(dir / "ok.tsv", "1\tgood movie\n0\tbad plot\n1\tfine\n");
    Vocabulary v;
    const auto samples = load_tsv(dir / "ok.tsv", v, VocabPolicy::build);
    REQUIRE(samples.size() == 3);
    CHECK(samples[1].label == 0);
    CHECK(samples[1].tokens == std::vector<TokenId>{v.lookup("bad"), v.lookup("plot")});

    Vocabulary fixed;
    fixed.add("good");
    const auto again = load_tsv(dir / "ok.tsv", fixed, VocabPolicy::fixed);
    CHECK(fixed.size() == 3);
    CHECK(again[1].tokens == std::vector<TokenId>{Vocabulary::kUnkId, Vocabulary::kUnkId});
}

TEST_CASE("load_tsv reports the offending line") {
    const auto dir = testing::scratch_dir("tsv-bad");
    write(dir / "empty_text.tsv", "1\tfine\n1\t\n");
    Vocabulary v;
    try {
        load_tsv(dir / "empty_text.tsv", v, VocabPolicy::build);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
    write(dir / "no_tab.tsv", "1 fine\n");
    CHECK_THROWS_AS(load_tsv(dir / "no_tab.tsv", v, VocabPolicy::build), ParseError);
    write(dir / "bad_label.tsv", "x\tfine\n");
    CHECK_THROWS_AS(load_tsv(dir / "bad_label.tsv", v, VocabPolicy::build), ParseError);
}

TEST_CASE("synthetic generation is a pure function of the seed") {
    const auto a = generate_synthetic(1000, 100, 12, 7);
    const auto b = generate_synthetic(1000, 100, 12, 7);
    CHECK(a == b);
    CHECK(generate_synthetic(1000, 100, 12, 8) != a);
}

TEST_CASE("synthetic samples carry exactly one causal keyword that determines the label") {
    const auto samples = generate_synthetic(1000, 100, 12, 7);
    std::size_t ones = 0;
    for (const auto& s : samples) {
        REQUIRE(s.causal_positions.size() == 1);
        const TokenId kw = s.tokens[s.causal_positions[0]];
        CHECK((kw == SyntheticLayout::kKeyword0 || kw == SyntheticLayout::kKeyword1));
        int keywords = 0;
        for (TokenId t : s.tokens) keywords += t == SyntheticLayout::kKeyword0 || t == SyntheticLayout::kKeyword1;
        CHECK(keywords == 1);
        // Relabeling by keyword alone reproduces the stored label.
        CHECK(synthetic_label_from_keyword(s) == s.label);
        ones += s.label == 1;
    }
    const double rate = static_cast<double>(ones) / 1000.0;
    CHECK(rate >= 0.45);
    CHECK(rate <= 0.55);
}

TEST_CASE("synthetic confound tokens co-occur with label 1 at the configured rate") {
    const auto samples = generate_synthetic(4000, 100, 12, 11);
    double with1 = 0, n1 = 0, with0 = 0, n0 = 0;
    for (const auto& s : samples) {
        const bool has = std::count(s.tokens.begin(), s.tokens.end(), SyntheticLayout::kConfoundA) > 0;
        (s.label == 1 ? n1 : n0) += 1;
        (s.label == 1 ? with1 : with0) += has;
    }
    CHECK(with1 / n1 == doctest::Approx(0.9).epsilon(0.03));
    CHECK(with0 / n0 == doctest::Approx(0.1).epsilon(0.3));
}

TEST_CASE("synthetic generation rejects out-of-range parameters") {
    CHECK_THROWS_AS(generate_synthetic(10, 19, 12, 1), InvalidConfig);
    CHECK_THROWS_AS(generate_synthetic(10, 100, 3, 1), InvalidConfig);
    CHECK_NOTHROW(generate_synthetic(10, 20, 4, 1));
}

TEST_CASE("synthetic export round-trips through TSV and the causal sidecar") {
    const auto dir = testing::scratch_dir("synth");
    const auto samples = generate_synthetic(50, 30, 8, 2);
    export_synthetic(samples, synthetic_vocabulary(30), dir / "d.tsv", dir / "c.tsv");
    const auto records = read_tsv(dir / "d.tsv");
    REQUIRE(records.size() == 50);
    const auto causal = read_causal_sidecar(dir / "c.tsv");
    for (const auto& s : samples) {
        CHECK(causal.at(s.id) == s.causal_positions);
        CHECK(records[s.id].label == s.label);
        const auto words = split_words(records[s.id].text);
        CHECK(words[s.causal_positions[0]].substr(0, 2) == "kw");
    }
}

TEST_CASE("split sizes follow floor, floor, remainder") {
    std::vector<TokenizedSample> xs;
    for (std::uint64_t i = 0; i < 100; ++i) xs.push_back(make_sample(i, {2}, 0));
    const auto s = split_dataset(xs, {0.7, 0.1, 0.2}, 1);
    CHECK(s.train.size() == 70);
    CHECK(s.validation.size() == 10);
    CHECK(s.test.size() == 20);

    const auto again = split_dataset(xs, {0.7, 0.1, 0.2}, 1);
    CHECK(ids_of(again.train) == ids_of(s.train));
    CHECK(again.test == s.test);

    std::set<std::uint64_t> all = ids_of(s.train);
    for (auto id : ids_of(s.validation)) CHECK(all.insert(id).second);
    for (auto id : ids_of(s.test)) CHECK(all.insert(id).second);
    CHECK(all.size() == 100);
}

TEST_CASE("split of a 10,662-sample corpus at 7:1:2") {
    std::vector<TokenizedSample> xs;
    for (std::uint64_t i = 0; i < 10662; ++i) xs.push_back(make_sample(i, {2}, 0));
    const auto s = split_dataset(xs, {0.7, 0.1, 0.2}, 3);
    CHECK(s.train.size() == 7463);
    CHECK(s.validation.size() == 1066);
    CHECK(s.test.size() == 2133);
}

TEST_CASE("split rejects ratios that do not sum to one") {
    std::vector<TokenizedSample> xs{make_sample(0, {2}, 0)};
    CHECK_THROWS_AS(split_dataset(xs, {0.7, 0.1, 0.1}, 1), InvalidConfig);
    CHECK_THROWS_AS(split_dataset({}, {0.7, 0.1, 0.2}, 1), InvalidInput);
}

TEST_CASE("sample invariants are enforced") {
    TokenizedSample s = make_sample(1, {2, 3}, 1);
    CHECK_NOTHROW(validate_sample(s, 2));
    CHECK_THROWS_AS(validate_sample(s, 1), ContractViolation);
    s.mask = {false, false};
    CHECK_THROWS_AS(validate_sample(s, 2), ContractViolation);
    s.mask = {true};
    CHECK_THROWS_AS(validate_sample(s, 2), ContractViolation);
    s = testing::padded(make_sample(1, {2, 3}, 1), 2);
    s.causal_positions = {3};
    CHECK_THROWS_AS(validate_sample(s, 2), ContractViolation);
}

}
