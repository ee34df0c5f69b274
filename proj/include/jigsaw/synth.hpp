#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "jigsaw/image.hpp"

namespace jigsaw {

// Category names used for corpus subdirectories and manifest tags.
inline constexpr std::string_view kCategoryHighRes = "high_res_search";
inline constexpr std::string_view kCategoryText = "text_structured";
inline constexpr std::string_view kCategoryDense = "dense_real_world";

enum class SynthKind { kGradient, kTextCard, kTexture };

SynthKind synth_kind_for_category(std::string_view category);

// Deterministic procedural image. Gradients carry a few small shapes, text
// cards are ruled blocks of word-like bars, textures are sums of sinusoids.
Image synthesize_image(SynthKind kind, int width, int height, std::uint64_t seed);

struct CorpusSpec {
    int count = 100;
    std::uint64_t seed = 0;
    int width = 96;
    int height = 96;
    // Fractions for high_res_search, text_structured, dense_real_world.
    double high_res = 0.397;
    double text = 0.333;
    double dense = 0.269;
};

// Writes <dir>/<category>/img_<k>.png files; returns the paths written.
std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& dir,
                                                          const CorpusSpec& spec);

}  // namespace jigsaw
