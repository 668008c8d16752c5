#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pbsa {

// One row of weights over a sample's tokens. Weights are stored exactly as produced.
struct HeatmapRow {
    std::string name;  // "baseline", "pbsa", "supervision"
    std::vector<double> weights;
    std::string tag;   // "pred/label"; "-/label" when the row carries no prediction
};

struct HeatmapSample {
    std::uint64_t id = 0;
    std::vector<std::string> tokens;
    std::vector<HeatmapRow> rows;
};

struct HeatmapDocument {
    std::string title = "attention heatmap";
    std::vector<HeatmapSample> samples;
};

std::string prediction_tag(int predicted, int label);

// Background intensity in [0, 1] per weight: weight / (largest weight over all rows of the sample).
// Linear in the weight, so ratios between tokens are kept exactly.
std::vector<std::vector<double>> heatmap_intensities(const HeatmapSample& sample);

std::string render_heatmap_html(const HeatmapDocument& doc);
void write_heatmap(const HeatmapDocument& doc, const std::filesystem::path& path);

}  // namespace pbsa
