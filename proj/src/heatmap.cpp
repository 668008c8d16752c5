#include "pbsa/heatmap.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pbsa/errors.hpp"

namespace pbsa {

namespace {

std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string prediction_tag(int predicted, int label) {
    return (predicted < 0 ? std::string("-") : std::to_string(predicted)) + "/" + std::to_string(label);
}

std::vector<std::vector<double>> heatmap_intensities(const HeatmapSample& sample) {
    double top = 0.0;
    for (const auto& row : sample.rows) {
        if (row.weights.size() != sample.tokens.size()) {
            throw ContractViolation("heatmap row '" + row.name + "' of sample " + std::to_string(sample.id) +
                                    " does not match its token count");
        }
        for (double w : row.weights) top = std::max(top, w);
    }
    std::vector<std::vector<double>> out;
    for (const auto& row : sample.rows) {
        std::vector<double> r;
        for (double w : row.weights) r.push_back(top > 0.0 ? w / top : 0.0);
        out.push_back(std::move(r));
    }
    return out;
}

std::string render_heatmap_html(const HeatmapDocument& doc) {
    std::ostringstream html;
    html << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>" << escape(doc.title)
         << "</title>\n<style>\n"
         << "body { font-family: monospace; }\n"
         << "table.sample { border-collapse: collapse; margin-bottom: 1.5em; }\n"
         << "td { padding: 2px 5px; }\n"
         << "td.tag { font-weight: bold; padding-right: 1em; }\n"
         << "td.row { color: #555; padding-right: 1em; }\n"
         << "</style>\n</head>\n<body>\n<h1>" << escape(doc.title) << "</h1>\n";
    for (const auto& sample : doc.samples) {
        const auto intensity = heatmap_intensities(sample);
        html << "<table class=\"sample\" data-id=\"" << sample.id << "\">\n<caption>sample " << sample.id
             << "</caption>\n";
        for (std::size_t r = 0; r < sample.rows.size(); ++r) {
            const auto& row = sample.rows[r];
            html << "<tr data-row=\"" << escape(row.name) << "\"><td class=\"tag\">" << escape(row.tag)
                 << "</td><td class=\"row\">" << escape(row.name) << "</td>";
            for (std::size_t i = 0; i < sample.tokens.size(); ++i) {
                html << std::setprecision(17) << "<td data-weight=\"" << row.weights[i] << "\" data-intensity=\""
                     << intensity[r][i] << "\" style=\"background-color: rgba(220, 40, 40, " << std::setprecision(6)
                     << intensity[r][i] << ")\">" << escape(sample.tokens[i]) << "</td>";
            }
            html << "</tr>\n";
        }
        html << "</table>\n";
    }
    html << "</body>\n</html>\n";
    return html.str();
}

void write_heatmap(const HeatmapDocument& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << render_heatmap_html(doc);
}

}  // namespace pbsa
