#include "jigsaw/rng.hpp"

#include <cmath>
#include <numbers>

namespace jigsaw {

double standard_normal(Rng& rng) {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace jigsaw
