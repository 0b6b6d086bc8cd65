#include "texturebit/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>

namespace texturebit {

PixelBuffer load_image(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) throw Error("unreadable file", path.string());
    if (image.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&image);
        throw Error("unsupported format", "16-bit PNG: " + path.string());
    }
    // RGBA keeps every input sample unchanged; alpha is discarded below rather
    // than composited.
    image.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
        png_image_free(&image);
        throw Error("unreadable file", path.string());
    }
    PixelBuffer buf(int(image.width), int(image.height), 3);
    for (std::size_t i = 0, n = std::size_t(image.width) * image.height; i < n; ++i)
        for (int c = 0; c < 3; ++c) buf.data[i * 3 + std::size_t(c)] = rgba[i * 4 + std::size_t(c)];
    return buf;
}

void save_image(const PixelBuffer& buf, const std::filesystem::path& path) {
    if (buf.data.size() != std::size_t(buf.width) * buf.height * buf.channels) throw Error("shape mismatch");
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = png_uint_32(buf.width);
    image.height = png_uint_32(buf.height);
    image.format = buf.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data.data(), 0, nullptr))
        throw Error("unwritable file", path.string());
}

std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw Error("unreadable file", "not a directory: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return char(std::tolower(ch)); });
        if (ext == ".png") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace texturebit
