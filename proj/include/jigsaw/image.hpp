#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "jigsaw/perm.hpp"

namespace jigsaw {

// 8-bit RGB, row-major, interleaved.
struct Image {
    static constexpr int kChannels = 3;

    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h);
    Image(int w, int h, std::vector<std::uint8_t> data);

    [[nodiscard]] bool empty() const noexcept { return width == 0 || height == 0; }
    [[nodiscard]] std::size_t index(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)) *
               kChannels;
    }
    [[nodiscard]] std::uint8_t* at(int x, int y) noexcept { return pixels.data() + index(x, y); }
    [[nodiscard]] const std::uint8_t* at(int x, int y) const noexcept {
        return pixels.data() + index(x, y);
    }

    bool operator==(const Image&) const = default;
};

// Tiles in true row-major position order, or keyed by label once shuffled.
struct TileSet {
    int m = 0;
    int tile_w = 0;
    int tile_h = 0;
    std::vector<Image> tiles;
};

struct NormalizedBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 1.0;
    double y2 = 1.0;

    bool operator==(const NormalizedBox&) const = default;
};

bool is_valid_box(const NormalizedBox& box) noexcept;
void validate_box(const NormalizedBox& box);

enum class EdgeSide { kRightToLeft, kBottomToTop };

// Bilinear resample with half-pixel centres and clamped borders.
Image resize_bilinear(const Image& img, int out_w, int out_h);

// Rounds each dimension to the nearest multiple of m (ties up, minimum m).
int nearest_multiple(int value, int m);
Image resize_to_multiple(const Image& img, int m);

TileSet split_tiles(const Image& img, int m);

// Slot k of the output shows tiles.tiles[state[k]].
Image compose_state_image(const TileSet& tiles, const Arrangement& state);

Image crop_region(const Image& img, const NormalizedBox& box);

Image zoom_image(const Image& img, double factor, int max_side = 8192);

// Downscales so the longest side is at most max_side; smaller images pass through.
Image cap_longest_side(const Image& img, int max_side);

double edge_dissimilarity(const Image& a, const Image& b, EdgeSide side);

}  // namespace jigsaw
