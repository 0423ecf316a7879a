#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gaple/render.hpp"

namespace gaple {

// Shared checkpoint container: "<magic>\n<count>\n" then count little-endian
// IEEE-754 doubles. Bit-exact round trip.
void write_param_file(const std::string& path, const std::string& magic,
                      std::span<const double> values);
std::vector<double> read_param_file(const std::string& path, const std::string& magic);

// Binary P5 images. Semantic labels are written as 8-bit values, depth as
// millimeters in big-endian 16-bit values (PGM convention for maxval > 255).
void write_semantic_pgm(const std::string& path, const RenderOutput& render);
void write_depth_pgm(const std::string& path, const RenderOutput& render);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Fixed-format double for CSV output; stable across runs.
std::string format_double(double v);

}  // namespace gaple
