#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ttn/tensor.hpp"

namespace ttn {

// 8-bit RGB, samples interleaved row by row as in a P6 file.
struct Image {
  std::size_t height = 0, width = 0;
  std::vector<std::uint8_t> samples;  // height * width * 3

  std::uint8_t at(std::size_t i, std::size_t j, std::size_t c) const { return samples[(i * width + j) * 3 + c]; }
  bool operator==(const Image&) const = default;
};

Image read_ppm(std::istream& is);
void write_ppm(std::ostream& os, const Image& img);
Image load_ppm(const std::string& path);
void save_ppm(const std::string& path, const Image& img);

// h x w x 3 tensor, t(i, j, c) = sample.
DenseTensor image_to_tensor(const Image& img);
// Rounds and clamps to [0, 255].
Image tensor_to_image(const DenseTensor& t);

// n = a * b with a >= b and b the largest divisor <= sqrt(n); b == 1 for primes.
std::pair<std::size_t, std::size_t> factor_pair(std::size_t n);

// Splits h x w x 3 into (h1, h2, w1, w2, 3) with row i = i1 + h1 * i2 and
// column j = j1 + w1 * j2 (fine index fastest), so the split is a pure
// reinterpretation of the column-major buffer. Prime sizes above 3 are padded to the
// next composite size by edge replication.
struct ReshapePlan {
  std::size_t height = 0, width = 0;
  std::size_t padded_height = 0, padded_width = 0;
  std::pair<std::size_t, std::size_t> hf, wf;

  Dims dims() const { return {hf.first, hf.second, wf.first, wf.second, 3}; }
  bool padded() const { return padded_height != height || padded_width != width; }
};

ReshapePlan plan_reshape(std::size_t height, std::size_t width);
DenseTensor reshape_image(const DenseTensor& hw3, const ReshapePlan& plan);
DenseTensor unreshape_image(const DenseTensor& t5, const ReshapePlan& plan);

}  // namespace ttn
