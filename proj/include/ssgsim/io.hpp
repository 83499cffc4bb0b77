// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <string>
#include <string_view>

namespace ssgsim {

/// Throws Error{IoError}.
std::string read_file(const std::string& path);

/// Writes to a sibling temporary file, then renames it over path, so
/// readers never observe a partial file. Throws Error{IoError}.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace ssgsim
