#include "pbsa/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "pbsa/errors.hpp"

namespace pbsa {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_same_v<T, double>) {
            out += fmt(xs[i]);
        } else {
            out += std::to_string(xs[i]);
        }
    }
    return out;
}

struct Field {
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
};

double to_double(const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw InvalidConfig("not a number: '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw InvalidConfig("not a non-negative integer: '" + v + "'");
    }
    return out;
}

int to_int(const std::string& v) {
    int out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw InvalidConfig("not an integer: '" + v + "'");
    return out;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InvalidConfig("not a boolean: '" + v + "'");
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& v, F convert) {
    std::vector<T> out;
    std::stringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(convert(trim(item)));
    return out;
}

std::map<std::string, Field> fields(RunConfig& c) {
    std::map<std::string, Field> f;
    auto num = [&](const std::string& key, double& ref) {
        f[key] = {[&ref](const std::string& v) { ref = to_double(v); }, [&ref] { return fmt(ref); }};
    };
    auto size = [&](const std::string& key, std::size_t& ref) {
        f[key] = {[&ref](const std::string& v) { ref = to_u64(v); },
                  [&ref] { return fmt(static_cast<std::uint64_t>(ref)); }};
    };
    auto integer = [&](const std::string& key, int& ref) {
        f[key] = {[&ref](const std::string& v) { ref = to_int(v); }, [&ref] { return fmt(ref); }};
    };
    auto flag = [&](const std::string& key, bool& ref) {
        f[key] = {[&ref](const std::string& v) { ref = to_bool(v); }, [&ref] { return fmt(ref); }};
    };
    auto path = [&](const std::string& key, std::filesystem::path& ref) {
        f[key] = {[&ref](const std::string& v) { ref = v; }, [&ref] { return ref.string(); }};
    };

    f["dataset.source"] = {
        [&c](const std::string& v) {
            if (v == "synthetic") {
                c.dataset.source = DatasetSource::synthetic;
            } else if (v == "tsv") {
                c.dataset.source = DatasetSource::tsv;
            } else {
                throw InvalidConfig("dataset.source must be 'synthetic' or 'tsv', got '" + v + "'");
            }
        },
        [&c] { return std::string(c.dataset.source == DatasetSource::synthetic ? "synthetic" : "tsv"); }};
    path("dataset.path", c.dataset.path);
    path("dataset.train_path", c.dataset.train_path);
    path("dataset.validation_path", c.dataset.validation_path);
    path("dataset.test_path", c.dataset.test_path);
    f["dataset.split"] = {
        [&c](const std::string& v) {
            const auto xs = to_list<double>(v, to_double);
            if (xs.size() != 3) throw InvalidConfig("dataset.split needs three comma-separated ratios");
            c.dataset.split = {xs[0], xs[1], xs[2]};
        },
        [&c] { return join(std::vector<double>{c.dataset.split.train, c.dataset.split.validation,
                                               c.dataset.split.test}); }};

    size("synthetic.num_samples", c.synthetic.num_samples);
    size("synthetic.vocab_size", c.synthetic.vocab_size);
    size("synthetic.seq_len", c.synthetic.seq_len);
    num("synthetic.confound_rate", c.synthetic.options.confound_rate);
    num("synthetic.zipf_exponent", c.synthetic.options.zipf_exponent);

    size("model.embed_dim", c.model.embed_dim);
    size("model.hidden_dim", c.model.hidden_dim);
    size("model.attention_dim", c.model.attention_dim);
    num("model.dropout_rate", c.model.dropout_rate);

    num("wbcp.lambda", c.wbcp.lambda);
    f["wbcp.distance"] = {[&c](const std::string& v) { c.wbcp.distance = wbcp_distance_from_string(v); },
                          [&c] { return to_string(c.wbcp.distance); }};
    integer("wbcp.epochs", c.wbcp.epochs);
    num("wbcp.learning_rate", c.wbcp.learning_rate);
    num("wbcp.weight_decay", c.wbcp.weight_decay);
    integer("wbcp.noise_samples_per_step", c.wbcp.noise_samples_per_step);

    num("train.gamma", c.train.gamma);
    integer("train.iterations", c.train.iterations);
    integer("train.batch_size", c.train.batch_size);
    integer("train.epochs", c.train.epochs);
    num("train.learning_rate", c.train.learning_rate);
    flag("train.restart", c.train.restart);
    flag("train.grid_search", c.train.grid_search);
    f["train.gamma_grid"] = {[&c](const std::string& v) { c.train.gamma_grid = to_list<double>(v, to_double); },
                             [&c] { return join(c.train.gamma_grid); }};
    f["train.iterations_grid"] = {
        [&c](const std::string& v) { c.train.iterations_grid = to_list<int>(v, to_int); },
        [&c] { return join(c.train.iterations_grid); }};

    flag("eval.attribution", c.eval_attribution);
    f["seed"] = {[&c](const std::string& v) { c.seed = to_u64(v); }, [&c] { return fmt(c.seed); }};
    return f;
}

}  // namespace

void RunConfig::validate() const {
    if (dataset.source == DatasetSource::tsv) {
        const bool single = !dataset.path.empty();
        const bool explicit_files = !dataset.train_path.empty();
        if (single == explicit_files) {
            throw InvalidConfig("tsv datasets need exactly one of dataset.path or dataset.train_path");
        }
        if (explicit_files && dataset.test_path.empty()) {
            throw InvalidConfig("dataset.train_path requires dataset.test_path");
        }
    }
    const double sum = dataset.split.train + dataset.split.validation + dataset.split.test;
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidConfig("dataset.split must sum to 1");
    if (dataset.source == DatasetSource::synthetic) {
        if (synthetic.vocab_size < 20 || synthetic.seq_len < 4 || synthetic.num_samples == 0) {
            throw InvalidConfig("synthetic corpus needs num_samples >= 1, vocab_size >= 20, seq_len >= 4");
        }
    }
    ModelConfig m = model;
    m.vocab_size = std::max<std::size_t>(m.vocab_size, 2);
    m.num_classes = std::max<std::size_t>(m.num_classes, 2);
    m.validate();
    wbcp.validate();
    train.validate();
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    RunConfig config;
    auto table = fields(config);
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidConfig(origin + ":" + std::to_string(number) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "output") {
            config.output = value;
            continue;
        }
        auto it = table.find(key);
        if (it == table.end()) throw InvalidConfig(origin + ":" + std::to_string(number) + ": unknown key '" + key + "'");
        try {
            it->second.set(value);
        } catch (const InvalidConfig& e) {
            throw InvalidConfig(origin + ":" + std::to_string(number) + ": " + key + ": " + e.what());
        }
    }
    config = with_seed(config, config.seed);
    config.validate();
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    RunConfig config = parse_run_config(buf.str(), path.string());
    // Relative data paths are taken relative to the config file.
    const auto base = path.parent_path();
    for (auto* p : {&config.dataset.path, &config.dataset.train_path, &config.dataset.validation_path,
                    &config.dataset.test_path}) {
        if (!p->empty() && p->is_relative()) *p = std::filesystem::absolute(base / *p).lexically_normal();
    }
    return config;
}

RunConfig with_seed(RunConfig config, std::uint64_t seed) {
    config.seed = seed;
    config.model.seed = seed;
    config.wbcp.seed = seed;
    config.train.seed = seed;
    return config;
}

std::string resolved_text(const RunConfig& config) {
    RunConfig copy = config;
    std::string out;
    for (const auto& [key, field] : fields(copy)) out += key + "=" + field.get() + "\n";
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string run_id(const RunConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(resolved_text(config))));
    return buf;
}

}  // namespace pbsa
