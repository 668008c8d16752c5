#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pbsa {

using TokenId = std::int32_t;

struct TokenizedSample {
    std::uint64_t id = 0;
    std::vector<TokenId> tokens;
    std::vector<bool> mask;  // true = real token
    int label = 0;
    std::vector<int> causal_positions;  // synthetic corpora only

    std::size_t length() const { return tokens.size(); }
    std::size_t real_count() const;
    // Indices i with mask[i] == true, in order.
    std::vector<int> real_positions() const;

    bool operator==(const TokenizedSample&) const = default;
};

// Throws ContractViolation when the sample breaks its invariants.
void validate_sample(const TokenizedSample& sample, int num_classes);

// Builds a sample with every position real.
TokenizedSample make_sample(std::uint64_t id, std::vector<TokenId> tokens, int label);

class Vocabulary {
public:
    static constexpr TokenId kPadId = 0;
    static constexpr TokenId kUnkId = 1;
    static constexpr std::string_view kPadToken = "<pad>";
    static constexpr std::string_view kUnkToken = "<unk>";

    Vocabulary();

    // Adds a token if absent and returns its id.
    TokenId add(const std::string& token);
    TokenId lookup(const std::string& token) const;  // unknown -> kUnkId
    bool contains(const std::string& token) const;
    const std::string& token(TokenId id) const;
    std::size_t size() const { return tokens_.size(); }

    // Ids assigned by descending frequency, ties broken lexicographically.
    static Vocabulary build(const std::vector<std::string>& texts);

    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> ids_;
};

// Lowercase whitespace split.
std::vector<std::string> split_words(std::string_view text);

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab);

struct TsvRecord {
    std::size_t line = 0;  // 1-based
    int label = 0;
    std::string text;
};

std::vector<TsvRecord> read_tsv(const std::filesystem::path& path);

enum class VocabPolicy {
    build,  // vocabulary is (re)built from this file's texts
    fixed,  // the given vocabulary is used as-is
};

// Sample ids are first_id + (line index among data lines).
std::vector<TokenizedSample> load_tsv(const std::filesystem::path& path, Vocabulary& vocab,
                                      VocabPolicy policy, std::uint64_t first_id = 0);

std::vector<TokenizedSample> tokenize_records(const std::vector<TsvRecord>& records,
                                              const Vocabulary& vocab, std::uint64_t first_id = 0);

struct SyntheticOptions {
    // P(confound tokens present | label 1); label-0 samples carry them with 1 - rate.
    double confound_rate = 0.9;
    double zipf_exponent = 1.0;
};

// Reserved ids of the synthetic vocabulary.
struct SyntheticLayout {
    static constexpr TokenId kKeyword0 = 2;   // causal keyword for label 0
    static constexpr TokenId kKeyword1 = 3;   // causal keyword for label 1
    static constexpr TokenId kConfoundA = 4;  // frequent, co-occurs with label 1
    static constexpr TokenId kConfoundB = 5;
    static constexpr TokenId kFirstDistractor = 6;
};

std::vector<TokenizedSample> generate_synthetic(std::size_t num_samples, std::size_t vocab_size,
                                                std::size_t seq_len, std::uint64_t seed,
                                                const SyntheticOptions& options = {});

// Vocabulary whose strings render synthetic ids ("kw0", "hf1", "w17", ...).
Vocabulary synthetic_vocabulary(std::size_t vocab_size);

// Label implied by the causal keyword alone; nullopt when no keyword is present.
std::optional<int> synthetic_label_from_keyword(const TokenizedSample& sample);

// Writes `label<TAB>text` lines plus a sidecar of `id<TAB>causal_position`.
void export_synthetic(const std::vector<TokenizedSample>& samples, const Vocabulary& vocab,
                      const std::filesystem::path& tsv_path,
                      const std::filesystem::path& sidecar_path);

// Reads an `id<TAB>causal_position` sidecar.
std::unordered_map<std::uint64_t, std::vector<int>> read_causal_sidecar(
    const std::filesystem::path& path);

struct SplitRatio {
    double train = 0.7;
    double validation = 0.1;
    double test = 0.2;
};

struct DatasetSplit {
    std::vector<TokenizedSample> train;
    std::vector<TokenizedSample> validation;
    std::vector<TokenizedSample> test;
    std::uint64_t split_seed = 0;
};

// Shuffle by seed, then floor(train), floor(validation), remainder to test.
DatasetSplit split_dataset(const std::vector<TokenizedSample>& samples, const SplitRatio& ratio,
                           std::uint64_t seed);

int infer_num_classes(const std::vector<TokenizedSample>& samples);

}  // namespace pbsa
