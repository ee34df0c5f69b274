#include "jigsaw/codec.hpp"

#include <png.h>

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

#include "jigsaw/error.hpp"

namespace jigsaw {

namespace {

Image finish_read(png_image& info) {
    info.format = PNG_FORMAT_RGB;
    if (info.width == 0 || info.height == 0) {
        png_image_free(&info);
        throw Error(ErrorCode::kUndecodableImage, "PNG has zero size");
    }
    Image img(static_cast<int>(info.width), static_cast<int>(info.height));
    // A null background strips alpha by compositing onto black.
    if (png_image_finish_read(&info, nullptr, img.pixels.data(), 0, nullptr) == 0) {
        const std::string message = info.message;
        png_image_free(&info);
        throw Error(ErrorCode::kUndecodableImage, "PNG decode failed: " + message);
    }
    return img;
}

}  // namespace

Image decode_png(std::span<const std::uint8_t> bytes) {
    png_image info;
    std::memset(&info, 0, sizeof(info));
    info.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_memory(&info, bytes.data(), bytes.size()) == 0) {
        throw Error(ErrorCode::kUndecodableImage, std::string("PNG decode failed: ") + info.message);
    }
    return finish_read(info);
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.empty()) throw Error(ErrorCode::kEmptyImage, "cannot encode an empty image");
    png_image info;
    std::memset(&info, 0, sizeof(info));
    info.version = PNG_IMAGE_VERSION;
    info.width = static_cast<png_uint_32>(img.width);
    info.height = static_cast<png_uint_32>(img.height);
    info.format = PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (png_image_write_to_memory(&info, nullptr, &size, 0, img.pixels.data(), 0, nullptr) == 0) {
        throw Error(ErrorCode::kIo, std::string("PNG encode failed: ") + info.message);
    }
    std::vector<std::uint8_t> out(size);
    if (png_image_write_to_memory(&info, out.data(), &size, 0, img.pixels.data(), 0, nullptr) ==
        0) {
        throw Error(ErrorCode::kIo, std::string("PNG encode failed: ") + info.message);
    }
    out.resize(size);
    return out;
}

Image read_png(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    try {
        return decode_png(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                                    bytes.size()));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_png(const std::filesystem::path& path, const Image& img) {
    const auto bytes = encode_png(img);
    write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                             bytes.size()));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) {
        throw Error(ErrorCode::kSchema, "base64 payload length is not a multiple of 4");
    }
    std::vector<std::uint8_t> out(3 * (text.size() / 4));
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw Error(ErrorCode::kSchema, "invalid base64 payload");
    // EVP_DecodeBlock counts padding as zero bytes.
    std::size_t padding = 0;
    if (!text.empty() && text.back() == '=') ++padding;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::kIo, "cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::kIo, "rename to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

}  // namespace jigsaw
