#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "v2xdose/field_grid.hpp"

namespace v2xdose {

inline constexpr const char* kFieldCsvHeader = "x,y,z,E_rms_V_per_m,P_dBm,path_count";
inline constexpr const char* kSarCsvHeader = "x,y,z,wbsar_W_per_kg";

// "field_z1.70.csv"
std::string field_file_name(double height);

void write_field_csv(const std::filesystem::path& path, const FieldLayer& layer);
// Throws ParseError on malformed content or mixed heights.
FieldLayer read_field_csv(const std::filesystem::path& path);

// Rows for present samples only.
void write_sar_csv(const std::filesystem::path& path, const FieldLayer& layer,
                   const std::vector<std::optional<double>>& sar);

// Number formatting used by every exported file.
std::string format_number(double v);

// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace v2xdose
