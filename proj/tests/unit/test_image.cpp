#include <cmath>

#include <gtest/gtest.h>

#include "jigsaw/codec.hpp"
#include "jigsaw/error.hpp"
#include "jigsaw/image.hpp"
#include "test_support.hpp"

using namespace jigsaw;
using jigsaw::testing::diagonal_image;
using jigsaw::testing::noise_image;

namespace {

std::vector<std::uint8_t> from_hex(std::string_view hex) {
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
        out.push_back(static_cast<std::uint8_t>(std::stoi(std::string(hex.substr(i, 2)), nullptr, 16)));
    }
    return out;
}

// Weighted-sum form of bilinear sampling with half-pixel centres.
double bilinear_oracle(const Image& img, double sx, double sy, int c) {
    sx = std::min(std::max(sx, 0.0), img.width - 1.0);
    sy = std::min(std::max(sy, 0.0), img.height - 1.0);
    const int x0 = static_cast<int>(sx);
    const int y0 = static_cast<int>(sy);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = sx - x0;
    const double fy = sy - y0;
    return (1 - fx) * (1 - fy) * img.at(x0, y0)[c] + fx * (1 - fy) * img.at(x1, y0)[c] +
           (1 - fx) * fy * img.at(x0, y1)[c] + fx * fy * img.at(x1, y1)[c];
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::kIo;  // sentinel: nothing thrown
}

}  // namespace

TEST(Tiles, SplitThenComposeIdentityIsLossless) {
    for (int m = 2; m <= 5; ++m) {
        const Image img = noise_image(m * 7, m * 5, static_cast<std::uint64_t>(m));
        const TileSet tiles = split_tiles(img, m);
        EXPECT_EQ(tiles.tiles.size(), static_cast<std::size_t>(m * m));
        EXPECT_EQ(compose_state_image(tiles, Arrangement::identity(tiles.tiles.size())), img);
    }
}

TEST(Tiles, ComposePlacesLabelledTiles) {
    const Image img = noise_image(8, 8, 3);
    const TileSet tiles = split_tiles(img, 2);
    const Image out = compose_state_image(tiles, Arrangement({3, 2, 1, 0}));
    // Slot 0 (top left) shows tile 3, the original bottom right quadrant.
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(x, y)[c], img.at(x + 4, y + 4)[c]);
        }
    }
}

TEST(Tiles, Errors) {
    EXPECT_EQ(code_of([] { split_tiles(Image(7, 8), 2); }), ErrorCode::kNotDivisible);
    EXPECT_EQ(code_of([] { split_tiles(Image(), 2); }), ErrorCode::kEmptyImage);
    const TileSet t = split_tiles(Image(4, 4), 2);
    EXPECT_EQ(code_of([&] { compose_state_image(t, Arrangement::identity(9)); }),
              ErrorCode::kSizeMismatch);
}

TEST(Resize, NearestMultiple) {
    EXPECT_EQ(nearest_multiple(97, 2), 98);
    EXPECT_EQ(nearest_multiple(100, 3), 99);
    EXPECT_EQ(nearest_multiple(101, 3), 102);
    EXPECT_EQ(nearest_multiple(1, 3), 3);
    const Image r = resize_to_multiple(Image(101, 50), 3);
    EXPECT_EQ(r.width, 102);
    EXPECT_EQ(r.height, 51);
}

TEST(Resize, MatchesBilinearOracle) {
    const Image src = noise_image(13, 9, 4);
    for (auto [w, h] : {std::pair{26, 18}, std::pair{7, 5}, std::pair{20, 3}}) {
        const Image out = resize_bilinear(src, w, h);
        const double sx = 13.0 / w;
        const double sy = 9.0 / h;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const double v = bilinear_oracle(src, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5, c);
                    EXPECT_NEAR(out.at(x, y)[c], v, 0.5 + 1e-9);
                }
            }
        }
    }
}

TEST(Resize, SameSizeIsIdentity) {
    const Image src = noise_image(6, 6, 1);
    EXPECT_EQ(resize_bilinear(src, 6, 6), src);
    EXPECT_EQ(cap_longest_side(src, 10), src);
    const Image capped = cap_longest_side(noise_image(40, 20, 2), 10);
    EXPECT_EQ(capped.width, 10);
    EXPECT_EQ(capped.height, 5);
}

TEST(Crop, PixelExactRegion) {
    const Image img = noise_image(20, 10, 6);
    const Image c = crop_region(img, {0.25, 0.5, 0.75, 1.0});
    ASSERT_EQ(c.width, 10);
    ASSERT_EQ(c.height, 5);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 10; ++x) EXPECT_EQ(c.at(x, y)[1], img.at(x + 5, y + 5)[1]);
    }
    EXPECT_EQ(crop_region(img, {0, 0, 1, 1}), img);
}

TEST(Crop, BoxValidation) {
    const Image img(10, 10);
    EXPECT_EQ(code_of([&] { crop_region(img, {0.5, 0.0, 0.5, 1.0}); }), ErrorCode::kInvalidBox);
    EXPECT_EQ(code_of([&] { crop_region(img, {-0.1, 0.0, 0.5, 1.0}); }), ErrorCode::kInvalidBox);
    EXPECT_EQ(code_of([&] { crop_region(img, {0.0, 0.0, 1.1, 1.0}); }), ErrorCode::kInvalidBox);
    EXPECT_EQ(code_of([&] { crop_region(img, {0.0, 0.0, NAN, 1.0}); }), ErrorCode::kInvalidBox);
    EXPECT_EQ(code_of([&] { crop_region(img, {0.50, 0.0, 0.52, 1.0}); }), ErrorCode::kDegenerateBox);
}

TEST(Zoom, ScalesAndBounds) {
    const Image img = diagonal_image(10, 6);
    const Image z = zoom_image(img, 1.5);
    EXPECT_EQ(z.width, 15);
    EXPECT_EQ(z.height, 9);
    EXPECT_EQ(zoom_image(img, 1.0), img);
    EXPECT_EQ(code_of([&] { zoom_image(img, 0.0); }), ErrorCode::kNonPositiveFactor);
    EXPECT_EQ(code_of([&] { zoom_image(img, -2.0); }), ErrorCode::kNonPositiveFactor);
    EXPECT_EQ(code_of([&] { zoom_image(img, 1000.0, 8192); }), ErrorCode::kImageTooLarge);
}

TEST(Edges, DissimilarityOracle) {
    Image a(2, 2);
    Image b(2, 2);
    // Right column of a vs left column of b.
    a.at(1, 0)[0] = 10;
    b.at(0, 0)[0] = 13;
    a.at(1, 1)[2] = 4;
    EXPECT_DOUBLE_EQ(edge_dissimilarity(a, b, EdgeSide::kRightToLeft), (9.0 + 16.0) / 6.0);
    EXPECT_DOUBLE_EQ(edge_dissimilarity(a, a, EdgeSide::kBottomToTop), (100.0 + 16.0) / 6.0);
    EXPECT_EQ(code_of([&] { edge_dissimilarity(Image(2, 3), b, EdgeSide::kRightToLeft); }),
              ErrorCode::kEdgeLengthMismatch);
}

TEST(Png, RoundTripIsPixelExactAndStable) {
    const Image img = noise_image(17, 11, 9);
    const auto bytes = encode_png(img);
    EXPECT_EQ(decode_png(bytes), img);
    EXPECT_EQ(encode_png(decode_png(bytes)), bytes);
}

TEST(Png, GrayscaleExpandsAndAlphaIsDropped) {
    const Image g = decode_png(from_hex(
        "89504e470d0a1a0a0000000d494844520000000200000002080000000057dd52f80000000e49444154789c6360"
        "086558f51f0003ad01ff67fbca090000000049454e44ae426082"));
    ASSERT_EQ(g.width, 2);
    ASSERT_EQ(g.height, 2);
    EXPECT_EQ(g.at(1, 0)[0], 85);
    EXPECT_EQ(g.at(1, 0)[2], 85);
    EXPECT_EQ(g.at(1, 1)[1], 255);
    const Image a = decode_png(from_hex(
        "89504e470d0a1a0a0000000d4948445200000002000000010806000000f4227f8a0000001149444154789c63e4"
        "129163d81720f21f0006b1025f15db4efc0000000049454e44ae426082"));
    ASSERT_EQ(a.width, 2);
    ASSERT_EQ(a.pixels.size(), 6u);
    EXPECT_EQ(a.at(1, 0)[0], 200);
    EXPECT_EQ(a.at(1, 0)[1], 100);
    EXPECT_EQ(a.at(1, 0)[2], 50);
}

TEST(Png, GarbageIsRejected) {
    const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
    EXPECT_EQ(code_of([&] { decode_png(junk); }), ErrorCode::kUndecodableImage);
    EXPECT_EQ(code_of([&] { decode_png({}); }), ErrorCode::kUndecodableImage);
}

TEST(Base64, Rfc4648Vectors) {
    const std::pair<const char*, const char*> cases[] = {
        {"", ""},         {"f", "Zg=="},         {"fo", "Zm8="},         {"foo", "Zm9v"},
        {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"},
    };
    for (const auto& [plain, enc] : cases) {
        const std::string p(plain);
        const std::vector<std::uint8_t> bytes(p.begin(), p.end());
        EXPECT_EQ(base64_encode(bytes), enc);
        EXPECT_EQ(base64_decode(enc), bytes);
    }
    EXPECT_THROW(base64_decode("Zm9v!"), Error);
}

TEST(Sha256, KnownDigests) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Files, AtomicWriteReplaces) {
    jigsaw::testing::TempDir dir("files");
    const auto p = dir.path() / "x.txt";
    write_file_atomic(p, "one");
    write_file_atomic(p, "two");
    EXPECT_EQ(read_file(p), "two");
    EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir.path()),
                            std::filesystem::directory_iterator{}),
              1);
}
