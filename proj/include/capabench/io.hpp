#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "capabench/types.hpp"

namespace capabench {

class IoError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

struct SourceLine {
  std::size_t number;  // 1-based
  std::string_view text;
};

/// Non-empty lines of a line-delimited document. Lines starting with `#` are skipped
/// when `skip_comments` is set; a trailing '\r' is stripped.
std::vector<SourceLine> record_lines(std::string_view source, bool skip_comments);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace capabench
