#pragma once

#include <string>
#include <string_view>

namespace protoagent {

/// Throws Error(IoError).
std::string read_text_file(const std::string& path);

/// Writes to a sibling temporary, flushes it to disk and renames it over
/// `path`. Throws Error(IoError).
void write_file_atomic(const std::string& path, std::string_view content);

/// Appends `content` and flushes it to disk before returning. Throws Error(IoError).
void append_file_durable(const std::string& path, std::string_view content);

}  // namespace protoagent
