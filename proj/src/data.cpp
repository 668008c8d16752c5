#include "pbsa/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "pbsa/errors.hpp"

namespace pbsa {

std::size_t TokenizedSample::real_count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

std::vector<int> TokenizedSample::real_positions() const {
    std::vector<int> out;
    out.reserve(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) out.push_back(static_cast<int>(i));
    }
    return out;
}

void validate_sample(const TokenizedSample& sample, int num_classes) {
    const std::string where = "sample " + std::to_string(sample.id) + ": ";
    if (sample.tokens.size() != sample.mask.size()) {
        throw ContractViolation(where + "tokens and mask differ in length");
    }
    if (sample.real_count() == 0) throw ContractViolation(where + "no real tokens");
    if (sample.label < 0 || sample.label >= num_classes) {
        throw ContractViolation(where + "label out of range");
    }
    for (int p : sample.causal_positions) {
        if (p < 0 || static_cast<std::size_t>(p) >= sample.mask.size() || !sample.mask[p]) {
            throw ContractViolation(where + "causal position not on a real token");
        }
    }
}

TokenizedSample make_sample(std::uint64_t id, std::vector<TokenId> tokens, int label) {
    TokenizedSample s;
    s.id = id;
    s.mask.assign(tokens.size(), true);
    s.tokens = std::move(tokens);
    s.label = label;
    return s;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
    add(std::string(kPadToken));
    add(std::string(kUnkToken));
}

TokenId Vocabulary::add(const std::string& token) {
    auto it = ids_.find(token);
    if (it != ids_.end()) return it->second;
    const auto id = static_cast<TokenId>(tokens_.size());
    tokens_.push_back(token);
    ids_.emplace(token, id);
    return id;
}

TokenId Vocabulary::lookup(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(const std::string& token) const { return ids_.count(token) > 0; }

const std::string& Vocabulary::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw LookupError("token id " + std::to_string(id) + " outside vocabulary");
    }
    return tokens_[id];
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts) {
    std::map<std::string, std::size_t> counts;
    for (const auto& text : texts) {
        for (auto& w : split_words(text)) ++counts[w];
    }
    std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(), counts.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary vocab;
    for (const auto& [word, count] : ordered) {
        if (word == kPadToken || word == kUnkToken) continue;
        vocab.add(word);
    }
    return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write vocabulary " + path.string());
    for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read vocabulary " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    if (lines.size() < 2 || lines[0] != kPadToken || lines[1] != kUnkToken) {
        throw ParseError(path.string(), 1, "vocabulary must start with <pad> and <unk>");
    }
    Vocabulary vocab;
    for (std::size_t i = 2; i < lines.size(); ++i) {
        if (vocab.contains(lines[i])) {
            throw ParseError(path.string(), i + 1, "duplicate token '" + lines[i] + "'");
        }
        vocab.add(lines[i]);
    }
    return vocab;
}

// ---------------------------------------------------------------------------
// Tokenization and TSV

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            if (!current.empty()) words.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab) {
    auto words = split_words(text);
    if (words.empty()) throw InvalidInput("cannot tokenize empty text");
    std::vector<TokenId> ids;
    ids.reserve(words.size());
    for (const auto& w : words) ids.push_back(vocab.lookup(w));
    return ids;
}

std::vector<TsvRecord> read_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open dataset " + path.string());
    std::vector<TsvRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(path.string(), lineno, "missing TAB separator");
        const std::string label_text = line.substr(0, tab);
        TsvRecord rec;
        rec.line = lineno;
        rec.text = line.substr(tab + 1);
        if (label_text.empty() ||
            !std::all_of(label_text.begin(), label_text.end(),
                         [](unsigned char c) { return std::isdigit(c); })) {
            throw ParseError(path.string(), lineno, "label '" + label_text + "' is not a class index");
        }
        try {
            rec.label = std::stoi(label_text);
        } catch (const std::exception&) {
            throw ParseError(path.string(), lineno, "label '" + label_text + "' out of range");
        }
        if (split_words(rec.text).empty()) throw ParseError(path.string(), lineno, "empty text");
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<TokenizedSample> tokenize_records(const std::vector<TsvRecord>& records,
                                              const Vocabulary& vocab, std::uint64_t first_id) {
    std::vector<TokenizedSample> samples;
    samples.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        samples.push_back(make_sample(first_id + i, tokenize(records[i].text, vocab), records[i].label));
    }
    return samples;
}

std::vector<TokenizedSample> load_tsv(const std::filesystem::path& path, Vocabulary& vocab,
                                      VocabPolicy policy, std::uint64_t first_id) {
    const auto records = read_tsv(path);
    if (policy == VocabPolicy::build) {
        std::vector<std::string> texts;
        texts.reserve(records.size());
        for (const auto& r : records) texts.push_back(r.text);
        vocab = Vocabulary::build(texts);
    }
    return tokenize_records(records, vocab, first_id);
}

// ---------------------------------------------------------------------------
// Synthetic planted-keyword corpus

Vocabulary synthetic_vocabulary(std::size_t vocab_size) {
    Vocabulary vocab;
    vocab.add("kw0");
    vocab.add("kw1");
    vocab.add("hf0");
    vocab.add("hf1");
    for (std::size_t id = SyntheticLayout::kFirstDistractor; id < vocab_size; ++id) {
        vocab.add("w" + std::to_string(id));
    }
    return vocab;
}

std::vector<TokenizedSample> generate_synthetic(std::size_t num_samples, std::size_t vocab_size,
                                                std::size_t seq_len, std::uint64_t seed,
                                                const SyntheticOptions& options) {
    if (vocab_size < 20) throw InvalidConfig("synthetic vocab_size must be >= 20");
    if (seq_len < 4) throw InvalidConfig("synthetic seq_len must be >= 4");
    if (!(options.confound_rate >= 0.0 && options.confound_rate <= 1.0)) {
        throw InvalidConfig("synthetic confound_rate must lie in [0, 1]");
    }

    const std::size_t num_distractors = vocab_size - SyntheticLayout::kFirstDistractor;
    std::vector<double> zipf(num_distractors);
    for (std::size_t r = 0; r < num_distractors; ++r) {
        zipf[r] = 1.0 / std::pow(static_cast<double>(r + 1), options.zipf_exponent);
    }
    std::discrete_distribution<std::size_t> distractor(zipf.begin(), zipf.end());
    std::bernoulli_distribution coin(0.5);
    std::bernoulli_distribution confound(options.confound_rate);
    std::uniform_int_distribution<std::size_t> position(0, seq_len - 1);

    // Confound tokens fill a quarter of the sequence (at least two slots), alternating A/B.
    const std::size_t confound_slots = std::max<std::size_t>(2, seq_len / 4);

    std::mt19937_64 rng(seed);
    std::vector<TokenizedSample> samples;
    samples.reserve(num_samples);
    for (std::size_t n = 0; n < num_samples; ++n) {
        const int label = coin(rng) ? 1 : 0;
        const std::size_t keyword_pos = position(rng);
        const bool with_confound = label == 1 ? confound(rng) : !confound(rng);

        std::vector<TokenId> tokens(seq_len, -1);
        tokens[keyword_pos] = label == 1 ? SyntheticLayout::kKeyword1 : SyntheticLayout::kKeyword0;
        if (with_confound) {
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < seq_len; ++i) {
                if (i != keyword_pos) free.push_back(i);
            }
            std::shuffle(free.begin(), free.end(), rng);
            for (std::size_t k = 0; k < confound_slots && k < free.size(); ++k) {
                tokens[free[k]] = (k % 2 == 0) ? SyntheticLayout::kConfoundA : SyntheticLayout::kConfoundB;
            }
        }
        for (auto& t : tokens) {
            if (t < 0) t = static_cast<TokenId>(SyntheticLayout::kFirstDistractor + distractor(rng));
        }
        TokenizedSample s = make_sample(n, std::move(tokens), label);
        s.causal_positions = {static_cast<int>(keyword_pos)};
        samples.push_back(std::move(s));
    }
    return samples;
}

std::optional<int> synthetic_label_from_keyword(const TokenizedSample& sample) {
    std::optional<int> label;
    for (std::size_t i = 0; i < sample.tokens.size(); ++i) {
        if (!sample.mask[i]) continue;
        if (sample.tokens[i] == SyntheticLayout::kKeyword0) label = 0;
        if (sample.tokens[i] == SyntheticLayout::kKeyword1) label = 1;
    }
    return label;
}

void export_synthetic(const std::vector<TokenizedSample>& samples, const Vocabulary& vocab,
                      const std::filesystem::path& tsv_path,
                      const std::filesystem::path& sidecar_path) {
    std::ofstream tsv(tsv_path);
    std::ofstream side(sidecar_path);
    if (!tsv || !side) throw Error("cannot write synthetic corpus to " + tsv_path.string());
    for (const auto& s : samples) {
        tsv << s.label << '\t';
        bool first = true;
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            if (!s.mask[i]) continue;
            if (!first) tsv << ' ';
            tsv << vocab.token(s.tokens[i]);
            first = false;
        }
        tsv << '\n';
        for (int p : s.causal_positions) side << s.id << '\t' << p << '\n';
    }
}

std::unordered_map<std::uint64_t, std::vector<int>> read_causal_sidecar(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open ground-truth sidecar " + path.string());
    std::unordered_map<std::uint64_t, std::vector<int>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::uint64_t id = 0;
        int pos = 0;
        if (!(fields >> id >> pos) || pos < 0) {
            throw ParseError(path.string(), lineno, "expected id<TAB>causal_position");
        }
        out[id].push_back(pos);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splits

DatasetSplit split_dataset(const std::vector<TokenizedSample>& samples, const SplitRatio& ratio,
                           std::uint64_t seed) {
    if (samples.empty()) throw InvalidInput("cannot split an empty dataset");
    if (ratio.train < 0 || ratio.validation < 0 || ratio.test < 0 ||
        std::abs(ratio.train + ratio.validation + ratio.test - 1.0) > 1e-9) {
        throw InvalidConfig("split ratio must be non-negative and sum to 1");
    }
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    // The epsilon keeps products such as 1250 * 0.8 from flooring one short.
    const auto n = static_cast<double>(samples.size());
    const auto n_train = static_cast<std::size_t>(std::floor(n * ratio.train + 1e-9));
    const auto n_val = std::min(samples.size() - n_train,
                                static_cast<std::size_t>(std::floor(n * ratio.validation + 1e-9)));

    DatasetSplit split;
    split.split_seed = seed;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& s = samples[order[k]];
        if (k < n_train) {
            split.train.push_back(s);
        } else if (k < n_train + n_val) {
            split.validation.push_back(s);
        } else {
            split.test.push_back(s);
        }
    }
    return split;
}

int infer_num_classes(const std::vector<TokenizedSample>& samples) {
    int max_label = 0;
    for (const auto& s : samples) max_label = std::max(max_label, s.label);
    return std::max(2, max_label + 1);
}

}  // namespace pbsa
