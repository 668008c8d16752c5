#include "pbsa/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pbsa/errors.hpp"

namespace pbsa {

namespace {
constexpr const char* kSupVersion = "pbsa-sup-1";
}

SupervisionDistribution sigma_to_supervision(const AttributionResult& result, const std::vector<bool>& mask,
                                             int iteration, double temperature) {
    const auto& sigma = result.scores;
    const auto real = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
    if (sigma.empty() || sigma.size() != real) {
        throw ContractViolation("sample " + std::to_string(result.sample_id) +
                                ": need one sigma per real token");
    }
    if (!(temperature > 0.0)) throw ContractViolation("supervision temperature must be > 0");
    for (double s : sigma) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw ContractViolation("sample " + std::to_string(result.sample_id) +
                                    ": sigma must be positive and finite");
        }
    }
    const double max_sigma = *std::max_element(sigma.begin(), sigma.end());
    std::vector<double> prime(sigma.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) prime[i] = (1.0 - sigma[i] / max_sigma) / temperature;

    const double top = *std::max_element(prime.begin(), prime.end());
    double z = 0.0;
    for (auto& p : prime) {
        p = std::exp(p - top);
        z += p;
    }

    SupervisionDistribution dist;
    dist.sample_id = result.sample_id;
    dist.iteration = iteration;
    dist.source_sigma = sigma;
    dist.alpha_tilde.assign(mask.size(), 0.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) dist.alpha_tilde[i] = prime[k++] / z;
    }
    return dist;
}

void SupervisionStore::add(SupervisionDistribution dist) {
    const auto id = dist.sample_id;
    if (!by_id_.emplace(id, std::move(dist)).second) {
        throw IntegrityError("duplicate supervision record for sample id " + std::to_string(id));
    }
}

const SupervisionDistribution& SupervisionStore::at(std::uint64_t sample_id) const {
    auto it = by_id_.find(sample_id);
    if (it == by_id_.end()) {
        throw LookupError("no supervision record for sample id " + std::to_string(sample_id));
    }
    return it->second;
}

std::vector<std::uint64_t> SupervisionStore::missing(const std::vector<std::uint64_t>& required) const {
    std::vector<std::uint64_t> out;
    for (auto id : required) {
        if (!contains(id)) out.push_back(id);
    }
    return out;
}

void SupervisionStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write supervision file " + path.string());
    out << nlohmann::json{{"format", kSupVersion}, {"count", by_id_.size()}}.dump() << '\n';
    for (const auto& [id, d] : by_id_) {
        out << nlohmann::json{{"id", id},
                              {"iteration", d.iteration},
                              {"alpha", d.alpha_tilde},
                              {"sigma", d.source_sigma}}
                   .dump()
            << '\n';
    }
    if (!out) throw Error("failed writing supervision file " + path.string());
}

SupervisionStore SupervisionStore::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LookupError(std::string(kSupVersion) + " supervision file not found: " + path.string());
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw VersionError(path.string() + ": empty supervision file");
    SupervisionStore store;
    try {
        const auto header = nlohmann::json::parse(line);
        const auto format = header.value("format", std::string{});
        if (format != kSupVersion) {
            throw VersionError(path.string() + ": expected format '" + kSupVersion + "', found '" + format + "'");
        }
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto rec = nlohmann::json::parse(line);
            SupervisionDistribution d;
            d.sample_id = rec.at("id").get<std::uint64_t>();
            d.iteration = rec.at("iteration").get<int>();
            d.alpha_tilde = rec.at("alpha").get<std::vector<double>>();
            d.source_sigma = rec.value("sigma", std::vector<double>{});
            store.add(std::move(d));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string(), lineno, e.what());
    }
    return store;
}

}  // namespace pbsa
