#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cfnn/canonicalize.hpp"
#include "cfnn/domain.hpp"
#include "cfnn/network.hpp"
#include "cfnn/training.hpp"

namespace cfnn {

// Shortest form that is not lossy: 17 significant digits, "-0.0" for
// negative zero so the sign survives a parse.
std::string format_double(double v);

// Model file:
//   {"activation": "relu", "structure": [1, 20, 1],
//    "layers": [{"weights": [[...], ...], "thresholds": [...]}, ...],
//    "offset": 0}
// Weights are row major, fan_in rows by fan_out columns. Serializing a parsed
// file reproduces it byte for byte.
std::string model_to_json(const Network& net);
Network model_from_json(std::string_view text, const std::string& source = "<model>");

Network load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const Network& net);

// CSV with header x1,...,xd,y; the last column is the target.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(std::string_view text, const std::string& source = "<csv>");
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& data);

// "box:lo,hi", "box:lo,hi;lo,hi" (one pair per dimension) or "ball:r" with
// an optional dimension, "ball:r@d".
Domain parse_domain(std::string_view text, Eigen::Index default_dim = 1);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string report_to_json(const CanonReport& report);

}  // namespace cfnn
