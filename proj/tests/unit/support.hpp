#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "pbsa/data.hpp"
#include "pbsa/model.hpp"
#include "pbsa/trainer.hpp"

namespace testing {

inline pbsa::ModelConfig tiny_config(std::uint64_t seed = 3) {
    pbsa::ModelConfig c;
    c.vocab_size = 20;
    c.embed_dim = 4;
    c.hidden_dim = 3;
    c.attention_dim = 3;
    c.num_classes = 2;
    c.seed = seed;
    return c;
}

inline pbsa::TokenizedSample random_sample(std::mt19937_64& rng, std::size_t length, std::size_t vocab,
                                           std::uint64_t id = 0) {
    std::uniform_int_distribution<int> tok(2, static_cast<int>(vocab) - 1);
    std::vector<pbsa::TokenId> tokens;
    for (std::size_t i = 0; i < length; ++i) tokens.push_back(tok(rng));
    return pbsa::make_sample(id, tokens, static_cast<int>(rng() % 2));
}

// Same sample with `extra` padding positions appended.
inline pbsa::TokenizedSample padded(pbsa::TokenizedSample s, std::size_t extra) {
    for (std::size_t i = 0; i < extra; ++i) {
        s.tokens.push_back(pbsa::Vocabulary::kPadId);
        s.mask.push_back(false);
    }
    return s;
}

// Central-difference relative error, guarded for tiny gradients.
inline double rel_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({1e-6, std::abs(analytic), std::abs(numeric)});
}

// The synthetic task at the scale used throughout: 1000 train / 50 validation / 200 test.
inline pbsa::DatasetSplit synthetic_split(std::uint64_t seed) {
    const auto data = pbsa::generate_synthetic(1250, 100, 12, seed);
    return pbsa::split_dataset(data, {0.8, 0.04, 0.16}, seed);
}

inline pbsa::ModelConfig synthetic_model(std::uint64_t seed) {
    pbsa::ModelConfig c;
    c.vocab_size = 100;
    c.embed_dim = 16;
    c.hidden_dim = 16;
    c.attention_dim = 16;
    c.num_classes = 2;
    c.seed = seed;
    return c;
}

inline pbsa::TrainConfig synthetic_train(std::uint64_t seed) {
    pbsa::TrainConfig t;
    t.seed = seed;
    return t;
}

// A baseline pretrained once per process and shared by the tests that need a trained model.
struct TrainedBaseline {
    pbsa::DatasetSplit split;
    pbsa::TrainResult result;
};

inline const TrainedBaseline& trained_baseline() {
    static const TrainedBaseline cached = [] {
        TrainedBaseline b;
        b.split = synthetic_split(1);
        b.result = pbsa::pretrain(pbsa::init_model(synthetic_model(1)), b.split, synthetic_train(1));
        return b;
    }();
    return cached;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("pbsa-test-" + name + "-" +
                                                                 std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
