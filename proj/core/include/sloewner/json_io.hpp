#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sloewner/data.hpp"
#include "sloewner/harness.hpp"
#include "sloewner/structure.hpp"

namespace sloewner {

nlohmann::json structure_to_json(const AffineStructure& structure);
AffineStructure structure_from_json(const nlohmann::json& j);

// {"structure": [...], "A": [...], "B": ..., "C": ..., "n", "m", "p",
//  "is_real"}; matrices are row-major lists of [re, im] pairs. Full models
// additionally carry "N" (same value as "n").
nlohmann::json realization_to_json(const StructuredRealization& r,
                                   bool as_full_model = false);
StructuredRealization realization_from_json(const nlohmann::json& j);

nlohmann::json data_to_json(const InterpolationData& data);
InterpolationData data_from_json(const nlohmann::json& j);

nlohmann::json error_report_to_json(const ErrorReport& report,
                                    const FrequencyGrid& grid);

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

// CSV (header row, comma separated, complex values as re/im column pairs).
void write_bode_csv(const std::filesystem::path& path,
                    const std::vector<BodePoint>& samples);
void write_data_csv(const std::filesystem::path& path,
                    const InterpolationData& data);

// Writes via a temporary file and rename so readers never observe partial
// output.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

}  // namespace sloewner
