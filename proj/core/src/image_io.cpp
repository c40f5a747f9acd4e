#include "expand/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace expand {

namespace {

std::string encode(const std::uint8_t* data, int width, int height, png_uint_32 format, int row_stride) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, data, row_stride, nullptr)) {
        throw std::runtime_error(std::string("png sizing failed: ") + image.message);
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, row_stride, nullptr)) {
        throw std::runtime_error(std::string("png encoding failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

}  // namespace

std::string encode_png(const RawFrame& frame) {
    if (frame.width <= 0 || frame.height <= 0) {
        throw std::invalid_argument("cannot encode an empty frame");
    }
    return encode(frame.rgb.data(), frame.width, frame.height, PNG_FORMAT_RGB, frame.width * 3);
}

std::string encode_png(const Frame& frame) {
    std::vector<std::uint8_t> gray(kFramePixels);
    const auto px = frame.pixels();
    for (std::size_t i = 0; i < gray.size(); ++i) {
        gray[i] = static_cast<std::uint8_t>(std::lround(std::clamp(px[i], 0.0f, 1.0f) * 255.0f));
    }
    return encode(gray.data(), kFrameSide, kFrameSide, PNG_FORMAT_GRAY, kFrameSide);
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace expand
