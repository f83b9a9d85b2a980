#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace gradfield {

using Json = nlohmann::ordered_json;

/// Decimal form with 17 significant digits; parses back to the same double.
std::string format_double(double v);

/// Pretty-printed JSON in which every floating-point number is written with
/// format_double(). Output is byte-stable for equal documents.
std::string dump_json(const Json& doc);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gradfield
