#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cotrl/env.hpp"

namespace cotrl {

/// 8-bit grayscale image, row-major, 0 = black.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Canvas size for a task; every observation of the task uses it.
std::pair<int, int> raster_size(TaskId task);

/// Draws the text rendering and the visible cards with a built-in 5x7 font.
/// A pure function of the observation.
Raster render_image(const Observation& obs);

/// Binary PGM (P5, maxval 255).
std::string to_pgm(const Raster& raster);

}  // namespace cotrl
