#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "spkid/matrix.hpp"

namespace spkid::detail {

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

std::uint64_t hex_to_hash(const nlohmann::json& j);

nlohmann::json read_json(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace spkid::detail
