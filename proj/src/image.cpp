#include "jigsaw/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "jigsaw/error.hpp"

namespace jigsaw {

namespace {

void require_non_empty(const Image& img) {
    if (img.empty()) throw Error(ErrorCode::kEmptyImage, "image is empty");
}

std::string dims(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

}  // namespace

Image::Image(int w, int h)
    : width(w), height(h),
      pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * kChannels, 0) {}

Image::Image(int w, int h, std::vector<std::uint8_t> data)
    : width(w), height(h), pixels(std::move(data)) {
    if (pixels.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * kChannels) {
        throw Error(ErrorCode::kSizeMismatch, "pixel buffer does not match " + dims(w, h));
    }
}

bool is_valid_box(const NormalizedBox& box) noexcept {
    const auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    return in_unit(box.x1) && in_unit(box.y1) && in_unit(box.x2) && in_unit(box.y2) &&
           box.x1 < box.x2 && box.y1 < box.y2;
}

void validate_box(const NormalizedBox& box) {
    if (!is_valid_box(box)) {
        throw Error(ErrorCode::kInvalidBox,
                    "box must satisfy 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1");
    }
}

Image resize_bilinear(const Image& img, int out_w, int out_h) {
    require_non_empty(img);
    if (out_w <= 0 || out_h <= 0) {
        throw Error(ErrorCode::kInvalidSize, "resize target " + dims(out_w, out_h));
    }
    if (out_w == img.width && out_h == img.height) return img;

    struct Tap {
        int lo;
        int hi;
        double frac;
    };
    const auto taps = [](int out, int in) {
        std::vector<Tap> result(static_cast<std::size_t>(out));
        const double scale = static_cast<double>(in) / static_cast<double>(out);
        for (int o = 0; o < out; ++o) {
            double src = (o + 0.5) * scale - 0.5;
            src = std::clamp(src, 0.0, static_cast<double>(in - 1));
            const int lo = static_cast<int>(std::floor(src));
            result[static_cast<std::size_t>(o)] = {lo, std::min(lo + 1, in - 1), src - lo};
        }
        return result;
    };
    const auto xs = taps(out_w, img.width);
    const auto ys = taps(out_h, img.height);

    Image out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        const Tap& ty = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < out_w; ++x) {
            const Tap& tx = xs[static_cast<std::size_t>(x)];
            const std::uint8_t* p00 = img.at(tx.lo, ty.lo);
            const std::uint8_t* p10 = img.at(tx.hi, ty.lo);
            const std::uint8_t* p01 = img.at(tx.lo, ty.hi);
            const std::uint8_t* p11 = img.at(tx.hi, ty.hi);
            std::uint8_t* dst = out.at(x, y);
            for (int c = 0; c < Image::kChannels; ++c) {
                const double top = p00[c] + (p10[c] - p00[c]) * tx.frac;
                const double bottom = p01[c] + (p11[c] - p01[c]) * tx.frac;
                const double v = top + (bottom - top) * ty.frac;
                dst[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

int nearest_multiple(int value, int m) {
    const int q = value / m;
    const int r = value % m;
    const int rounded = (2 * r >= m) ? (q + 1) * m : q * m;
    return std::max(m, rounded);
}

Image resize_to_multiple(const Image& img, int m) {
    require_non_empty(img);
    if (m < 2) throw Error(ErrorCode::kInvalidSize, "grid order must be >= 2");
    return resize_bilinear(img, nearest_multiple(img.width, m), nearest_multiple(img.height, m));
}

TileSet split_tiles(const Image& img, int m) {
    require_non_empty(img);
    if (m < 2) throw Error(ErrorCode::kInvalidSize, "grid order must be >= 2");
    if (img.width % m != 0 || img.height % m != 0) {
        throw Error(ErrorCode::kNotDivisible,
                    dims(img.width, img.height) + " is not divisible by " + std::to_string(m));
    }
    TileSet set{m, img.width / m, img.height / m, {}};
    set.tiles.reserve(static_cast<std::size_t>(m * m));
    const std::size_t row_bytes = static_cast<std::size_t>(set.tile_w) * Image::kChannels;
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            Image tile(set.tile_w, set.tile_h);
            for (int y = 0; y < set.tile_h; ++y) {
                std::memcpy(tile.at(0, y), img.at(c * set.tile_w, r * set.tile_h + y), row_bytes);
            }
            set.tiles.push_back(std::move(tile));
        }
    }
    return set;
}

Image compose_state_image(const TileSet& tiles, const Arrangement& state) {
    const auto n = static_cast<std::size_t>(tiles.m) * static_cast<std::size_t>(tiles.m);
    if (state.size() != n || tiles.tiles.size() != n) {
        throw Error(ErrorCode::kSizeMismatch, "state has " + std::to_string(state.size()) +
                                                  " slots but the grid has " + std::to_string(n));
    }
    Image out(tiles.tile_w * tiles.m, tiles.tile_h * tiles.m);
    const std::size_t row_bytes = static_cast<std::size_t>(tiles.tile_w) * Image::kChannels;
    for (std::size_t k = 0; k < n; ++k) {
        const Image& tile = tiles.tiles[static_cast<std::size_t>(state[k])];
        const int r = static_cast<int>(k) / tiles.m;
        const int c = static_cast<int>(k) % tiles.m;
        for (int y = 0; y < tiles.tile_h; ++y) {
            std::memcpy(out.at(c * tiles.tile_w, r * tiles.tile_h + y), tile.at(0, y), row_bytes);
        }
    }
    return out;
}

Image crop_region(const Image& img, const NormalizedBox& box) {
    require_non_empty(img);
    validate_box(box);
    const auto px = [](double f, int extent) {
        return static_cast<int>(std::lround(f * static_cast<double>(extent)));
    };
    const int x0 = px(box.x1, img.width);
    const int x1 = px(box.x2, img.width);
    const int y0 = px(box.y1, img.height);
    const int y1 = px(box.y2, img.height);
    if (x1 - x0 < 1 || y1 - y0 < 1) {
        throw Error(ErrorCode::kDegenerateBox, "crop box collapses to less than one pixel on a " +
                                                   dims(img.width, img.height) + " image");
    }
    Image out(x1 - x0, y1 - y0);
    const std::size_t row_bytes = static_cast<std::size_t>(out.width) * Image::kChannels;
    for (int y = 0; y < out.height; ++y) {
        std::memcpy(out.at(0, y), img.at(x0, y0 + y), row_bytes);
    }
    return out;
}

Image zoom_image(const Image& img, double factor, int max_side) {
    require_non_empty(img);
    if (!(factor > 0.0) || !std::isfinite(factor)) {
        throw Error(ErrorCode::kNonPositiveFactor, "zoom factor must be a positive number");
    }
    const auto scaled = [factor](int extent) {
        return std::max(1.0, std::round(static_cast<double>(extent) * factor));
    };
    const double w = scaled(img.width);
    const double h = scaled(img.height);
    if (w > max_side || h > max_side) {
        throw Error(ErrorCode::kImageTooLarge, "zoomed image would exceed " +
                                                   std::to_string(max_side) + " px per side");
    }
    return resize_bilinear(img, static_cast<int>(w), static_cast<int>(h));
}

Image cap_longest_side(const Image& img, int max_side) {
    const int longest = std::max(img.width, img.height);
    if (max_side <= 0 || longest <= max_side) return img;
    const double s = static_cast<double>(max_side) / static_cast<double>(longest);
    const int w = std::max(1, static_cast<int>(std::lround(img.width * s)));
    const int h = std::max(1, static_cast<int>(std::lround(img.height * s)));
    return resize_bilinear(img, w, h);
}

double edge_dissimilarity(const Image& a, const Image& b, EdgeSide side) {
    require_non_empty(a);
    require_non_empty(b);
    const bool horizontal = side == EdgeSide::kRightToLeft;
    const int len_a = horizontal ? a.height : a.width;
    const int len_b = horizontal ? b.height : b.width;
    if (len_a != len_b) {
        throw Error(ErrorCode::kEdgeLengthMismatch, "abutting edges have lengths " +
                                                        std::to_string(len_a) + " and " +
                                                        std::to_string(len_b));
    }
    std::uint64_t sum = 0;
    for (int i = 0; i < len_a; ++i) {
        const std::uint8_t* pa = horizontal ? a.at(a.width - 1, i) : a.at(i, a.height - 1);
        const std::uint8_t* pb = horizontal ? b.at(0, i) : b.at(i, 0);
        for (int c = 0; c < Image::kChannels; ++c) {
            const int d = static_cast<int>(pa[c]) - static_cast<int>(pb[c]);
            sum += static_cast<std::uint64_t>(d * d);
        }
    }
    return static_cast<double>(sum) / (static_cast<double>(len_a) * Image::kChannels);
}

}  // namespace jigsaw
