#include <fstream>
#include <map>
#include <sstream>

#include "pbsa/errors.hpp"
#include "pbsa/model.hpp"

// Archive layout:
//
//   pbsa-ckpt-1
//   [config]
//   key=value            (one per ModelConfig field)
//   [arrays]
//   array <name> <rows> <cols>
//   <rows lines of cols values>
//   ...
//   end

namespace pbsa {

namespace {

constexpr const char* kVersion = "pbsa-ckpt-1";

}  // namespace

void save_checkpoint(const Parameters& params, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out.precision(17);
    const auto& c = params.config;
    out << kVersion << '\n'
        << "[config]\n"
        << "vocab_size=" << c.vocab_size << '\n'
        << "embed_dim=" << c.embed_dim << '\n'
        << "hidden_dim=" << c.hidden_dim << '\n'
        << "attention_dim=" << c.attention_dim << '\n'
        << "num_classes=" << c.num_classes << '\n'
        << "dropout_rate=" << c.dropout_rate << '\n'
        << "seed=" << c.seed << '\n'
        << "[arrays]\n";
    params.for_each([&](const std::string& name, const Eigen::Ref<const Eigen::MatrixXd>& m) {
        out << "array " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index col = 0; col < m.cols(); ++col) {
                if (col) out << ' ';
                out << m(r, col);
            }
            out << '\n';
        }
    });
    out << "end\n";
    if (!out) throw Error("failed writing checkpoint " + path.string());
}

Parameters load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LookupError("checkpoint not found: " + path.string());
    const std::string where = path.string();
    std::string line;
    if (!std::getline(in, line) || line != kVersion) {
        throw VersionError(where + ": expected version '" + kVersion + "', found '" + line + "'");
    }
    if (!std::getline(in, line) || line != "[config]") throw ParseError(where, 2, "missing [config]");

    std::map<std::string, std::string> kv;
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line == "[arrays]") break;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(where, lineno, "expected key=value");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(where, lineno, "config key '" + key + "' missing");
        return it->second;
    };
    ModelConfig cfg;
    try {
        cfg.vocab_size = std::stoull(get("vocab_size"));
        cfg.embed_dim = std::stoull(get("embed_dim"));
        cfg.hidden_dim = std::stoull(get("hidden_dim"));
        cfg.attention_dim = std::stoull(get("attention_dim"));
        cfg.num_classes = std::stoull(get("num_classes"));
        cfg.dropout_rate = std::stod(get("dropout_rate"));
        cfg.seed = std::stoull(get("seed"));
    } catch (const std::invalid_argument&) {
        throw ParseError(where, lineno, "malformed config value");
    }

    // Shapes are implied by the config; the archive must agree with them.
    Parameters params = init_model(cfg);
    params.for_each([&](const std::string& name, Eigen::Ref<Eigen::MatrixXd> m) {
        std::string tag, got_name;
        Eigen::Index rows = 0, cols = 0;
        if (!std::getline(in, line)) throw ParseError(where, lineno, "truncated before array " + name);
        ++lineno;
        std::istringstream header(line);
        header >> tag >> got_name >> rows >> cols;
        if (tag != "array" || got_name != name || rows != m.rows() || cols != m.cols()) {
            throw ParseError(where, lineno,
                             "expected array " + name + " " + std::to_string(m.rows()) + "x" +
                                 std::to_string(m.cols()));
        }
        for (Eigen::Index r = 0; r < rows; ++r) {
            if (!std::getline(in, line)) throw ParseError(where, lineno, "truncated array " + name);
            ++lineno;
            std::istringstream values(line);
            for (Eigen::Index c = 0; c < cols; ++c) {
                if (!(values >> m(r, c))) throw ParseError(where, lineno, "bad value in array " + name);
            }
        }
    });
    if (!std::getline(in, line) || line != "end") throw ParseError(where, lineno + 1, "missing end marker");
    return params;
}

}  // namespace pbsa
