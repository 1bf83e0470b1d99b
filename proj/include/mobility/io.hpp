#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace mobility::io {

std::string_view code_version();

/// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double x);

/// Writes `content` to a temporary sibling of `path`, then renames it into
/// place. Parent directories are created.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// `# config: {...}` line prefixed to CSV outputs.
std::string csv_config_line(const nlohmann::json& config);

}  // namespace mobility::io
