#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "pbsa/attribution.hpp"

namespace pbsa {

// Target attention for one sample. Vectors span the full sequence; padded positions hold 0.
struct SupervisionDistribution {
    std::uint64_t sample_id = 0;
    int iteration = 0;
    std::vector<double> alpha_tilde;
    std::vector<double> source_sigma;  // one entry per real token
};

// alpha'_i = 1 - sigma_i / max_j sigma_j over real tokens, alpha~ = softmax(alpha' / temperature).
SupervisionDistribution sigma_to_supervision(const AttributionResult& result, const std::vector<bool>& mask,
                                             int iteration = 0, double temperature = 1.0);

class SupervisionStore {
public:
    // Throws IntegrityError on a duplicate id.
    void add(SupervisionDistribution dist);
    // Throws LookupError naming the id.
    const SupervisionDistribution& at(std::uint64_t sample_id) const;
    bool contains(std::uint64_t sample_id) const { return by_id_.count(sample_id) > 0; }
    std::size_t size() const { return by_id_.size(); }

    // Ids in `required` that have no record.
    std::vector<std::uint64_t> missing(const std::vector<std::uint64_t>& required) const;

    const std::map<std::uint64_t, SupervisionDistribution>& records() const { return by_id_; }

    // Line-delimited "pbsa-sup-1" file.
    void save(const std::filesystem::path& path) const;
    static SupervisionStore load(const std::filesystem::path& path);

private:
    std::map<std::uint64_t, SupervisionDistribution> by_id_;
};

}  // namespace pbsa
