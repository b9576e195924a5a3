#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace nca {

/// Flat key=value config text: one pair per line, '#' starts a comment,
/// blank lines ignored. Keys mirror CLI flag names (without the leading
/// dashes). Malformed lines throw.
std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path);
std::map<std::string, std::string> parse_config_text(const std::string& text);

}  // namespace nca
