#include "jigsaw/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "jigsaw/codec.hpp"
#include "jigsaw/dataset.hpp"
#include "jigsaw/error.hpp"
#include "jigsaw/rng.hpp"

namespace jigsaw {

namespace {

using Rgb = std::array<double, 3>;

Rgb random_color(Rng& rng, double lo = 0.0, double hi = 255.0) {
    Rgb c{};
    for (double& v : c) v = lo + (hi - lo) * uniform_unit(rng);
    return c;
}

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void put(Image& img, int x, int y, const Rgb& c) {
    std::uint8_t* p = img.at(x, y);
    for (int k = 0; k < 3; ++k) p[k] = to_byte(c[static_cast<std::size_t>(k)]);
}

Image gradient(int w, int h, Rng& rng) {
    Image img(w, h);
    const Rgb a = random_color(rng);
    const Rgb b = random_color(rng);
    const double angle = 2.0 * std::numbers::pi * uniform_unit(rng);
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);
    const double span = std::abs(dx) * w + std::abs(dy) * h;
    const double origin = std::min(0.0, dx * w) + std::min(0.0, dy * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double t = ((dx * x + dy * y) - origin) / span;
            put(img, x, y, Rgb{a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t,
                               a[2] + (b[2] - a[2]) * t});
        }
    }
    // A few small objects to search for.
    const int objects = 2 + static_cast<int>(uniform_below(rng, 3));
    for (int o = 0; o < objects; ++o) {
        const Rgb c = random_color(rng);
        const double r = (0.04 + 0.05 * uniform_unit(rng)) * std::min(w, h);
        const double cx = r + (w - 2 * r) * uniform_unit(rng);
        const double cy = r + (h - 2 * r) * uniform_unit(rng);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) put(img, x, y, c);
            }
        }
    }
    return img;
}

Image text_card(int w, int h, Rng& rng) {
    Image img(w, h);
    const Rgb paper = random_color(rng, 215.0, 250.0);
    const Rgb ink = random_color(rng, 0.0, 70.0);
    const Rgb band = random_color(rng, 40.0, 200.0);
    const int header = std::max(3, h / 8);
    for (int y = 0; y < h; ++y) {
        // Slight shading keeps blank paper from being perfectly flat.
        const double shade = -18.0 * static_cast<double>(y) / h;
        for (int x = 0; x < w; ++x) {
            const double side = -10.0 * static_cast<double>(x) / w;
            put(img, x, y, y < header ? band
                                      : Rgb{paper[0] + shade + side, paper[1] + shade + side,
                                            paper[2] + shade + side});
        }
    }
    const int line_h = std::max(2, h / 24);
    const int pitch = line_h * 2 + 1;
    const int margin = std::max(2, w / 16);
    for (int y0 = header + line_h; y0 + line_h < h - line_h; y0 += pitch) {
        int x = margin + static_cast<int>(uniform_below(rng, 3));
        const int end = w - margin - static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(w / 4 + 1)));
        while (x < end) {
            const int word = 2 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(w / 8 + 2)));
            for (int y = y0; y < y0 + line_h; ++y) {
                for (int xx = x; xx < std::min(x + word, end); ++xx) put(img, xx, y, ink);
            }
            x += word + 1 + static_cast<int>(uniform_below(rng, 3));
        }
    }
    return img;
}

Image texture(int w, int h, Rng& rng) {
    struct Wave {
        double fx, fy, phase, amp;
    };
    Image img(w, h);
    std::array<std::array<Wave, 4>, 3> waves{};
    std::array<double, 3> base{};
    for (std::size_t c = 0; c < 3; ++c) {
        base[c] = 60.0 + 135.0 * uniform_unit(rng);
        for (Wave& wv : waves[c]) {
            wv.fx = (0.5 + 3.5 * uniform_unit(rng)) * 2.0 * std::numbers::pi / w;
            wv.fy = (0.5 + 3.5 * uniform_unit(rng)) * 2.0 * std::numbers::pi / h;
            wv.phase = 2.0 * std::numbers::pi * uniform_unit(rng);
            wv.amp = 10.0 + 25.0 * uniform_unit(rng);
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            Rgb px{};
            for (std::size_t c = 0; c < 3; ++c) {
                double v = base[c];
                for (const Wave& wv : waves[c]) v += wv.amp * std::sin(wv.fx * x + wv.fy * y + wv.phase);
                px[c] = v;
            }
            put(img, x, y, px);
        }
    }
    return img;
}

}  // namespace

SynthKind synth_kind_for_category(std::string_view category) {
    if (category == kCategoryText) return SynthKind::kTextCard;
    if (category == kCategoryDense) return SynthKind::kTexture;
    return SynthKind::kGradient;
}

Image synthesize_image(SynthKind kind, int width, int height, std::uint64_t seed) {
    if (width < 1 || height < 1) throw Error(ErrorCode::kEmptyImage, "synthetic image needs a size");
    Rng rng(seed);
    switch (kind) {
        case SynthKind::kGradient: return gradient(width, height, rng);
        case SynthKind::kTextCard: return text_card(width, height, rng);
        case SynthKind::kTexture: return texture(width, height, rng);
    }
    return gradient(width, height, rng);
}

std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& dir,
                                                          const CorpusSpec& spec) {
    if (spec.count < 1) throw Error(ErrorCode::kInvalidConfig, "corpus count must be >= 1");
    const std::array<std::string_view, 3> names{kCategoryHighRes, kCategoryText, kCategoryDense};
    const std::vector<std::size_t> counts = largest_remainder(
        static_cast<std::size_t>(spec.count), {spec.high_res, spec.text, spec.dense});
    std::vector<std::filesystem::path> out;
    std::uint64_t k = 0;
    for (std::size_t c = 0; c < names.size(); ++c) {
        const auto sub = dir / std::string(names[c]);
        std::filesystem::create_directories(sub);
        const SynthKind kind = synth_kind_for_category(names[c]);
        // High-resolution search images are twice the base size.
        const int scale = kind == SynthKind::kGradient ? 2 : 1;
        for (std::size_t i = 0; i < counts[c]; ++i, ++k) {
            const Image img = synthesize_image(kind, spec.width * scale, spec.height * scale,
                                               derive_seed(spec.seed, k));
            char name[32];
            std::snprintf(name, sizeof name, "img_%04zu.png", i);
            const auto path = sub / name;
            write_png(path, img);
            out.push_back(path);
        }
    }
    return out;
}

}  // namespace jigsaw
