#pragma once

// Small file helpers. Output files are written to a temp sibling and renamed
// into place so a failing command never leaves a partial file behind.

#include <string>

namespace uprop {

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace uprop
