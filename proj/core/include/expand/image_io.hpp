#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "expand/frame.hpp"

namespace expand {

/// 8-bit RGB PNG in memory.
std::string encode_png(const RawFrame& frame);
/// 8-bit grayscale PNG of a preprocessed frame.
std::string encode_png(const Frame& frame);

void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace expand
