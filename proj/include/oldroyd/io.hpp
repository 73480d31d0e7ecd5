#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

namespace oldroyd {

/// %.17g; non-finite values print as nan / inf / -inf.
std::string format_g17(double v);

/// JSON text with every floating-point number printed to 17 significant
/// digits. Non-finite numbers become null. indent < 0 gives one line.
std::string dump_json(const nlohmann::json& j, int indent = 2);

/// Parses a JSON file. Throws Error{IoError} if unreadable and
/// Error{ConfigError} if malformed.
nlohmann::json read_json_file(const std::string& path);

/// Throws Error{IoError}.
void write_text_file(const std::string& path, const std::string& content);

/// Creates the directory and its parents if missing. Throws Error{IoError}.
void ensure_directory(const std::string& path);

}  // namespace oldroyd
