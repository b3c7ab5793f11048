#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace recinv::util {

using Json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);

/// Write via a sibling temp file and rename, so readers never see a partial file.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Parse a JSONL file; blank lines are skipped. Errors carry the line number.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

/// One compact JSON document per line, each terminated by '\n'.
std::string to_jsonl(const std::vector<Json>& rows);

Json read_json(const std::filesystem::path& path);

/// Pretty JSON with a trailing newline.
std::string dump_pretty(const Json& value);

}  // namespace recinv::util
