#include "json_util.hpp"

#include <fstream>
#include <sstream>

#include "spkid/error.hpp"

namespace spkid::detail {

nlohmann::json matrix_to_json(const Matrix& m) {
  auto out = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    out.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix out;
  for (const auto& row : j) {
    const auto values = row.get<std::vector<double>>();
    if (!out.empty() && values.size() != out.cols())
      throw Error(ErrorCode::kCorruptHeader, "ragged matrix in JSON document");
    out.append_row(values);
  }
  return out;
}

std::uint64_t hex_to_hash(const nlohmann::json& j) {
  const auto s = j.get<std::string>();
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 16);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kCorruptHeader, "bad config hash '" + s + "'");
  }
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorCode::kIoFailure, "short write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "rename to " + path.string() + ": " + ec.message());
}

}  // namespace spkid::detail
