#include "ttn/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace ttn {

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

std::size_t header_number(std::istream& is, const char* what) {
  const std::string tok = header_token(is);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw std::runtime_error(std::string("ppm: malformed ") + what);
  return static_cast<std::size_t>(std::stoull(tok));
}

}  // namespace

Image read_ppm(std::istream& is) {
  // header_token consumes exactly one whitespace byte after maxval.
  if (header_token(is) != "P6") throw std::runtime_error("ppm: not a binary P6 file");
  Image img;
  img.width = header_number(is, "width");
  img.height = header_number(is, "height");
  const std::size_t maxval = header_number(is, "maxval");
  if (maxval != 255) throw std::runtime_error("ppm: unsupported maxval " + std::to_string(maxval));
  if (img.width == 0 || img.height == 0) throw std::runtime_error("ppm: empty image");
  img.samples.resize(img.width * img.height * 3);
  is.read(reinterpret_cast<char*>(img.samples.data()), static_cast<std::streamsize>(img.samples.size()));
  if (static_cast<std::size_t>(is.gcount()) != img.samples.size()) throw std::runtime_error("ppm: truncated pixel data");
  return img;
}

void write_ppm(std::ostream& os, const Image& img) {
  if (img.samples.size() != img.width * img.height * 3) throw std::invalid_argument("ppm: sample count mismatch");
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.samples.data()), static_cast<std::streamsize>(img.samples.size()));
}

Image load_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open image '" + path + "'");
  return read_ppm(f);
}

void save_ppm(const std::string& path, const Image& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write image '" + path + "'");
  write_ppm(f, img);
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

DenseTensor image_to_tensor(const Image& img) {
  DenseTensor t({img.height, img.width, 3});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t j = 0; j < img.width; ++j)
      for (std::size_t i = 0; i < img.height; ++i) t[i + img.height * (j + img.width * c)] = img.at(i, j, c);
  return t;
}

Image tensor_to_image(const DenseTensor& t) {
  if (t.order() != 3 || t.dim(2) != 3) throw std::invalid_argument("tensor_to_image: expected h x w x 3");
  Image img;
  img.height = t.dim(0);
  img.width = t.dim(1);
  img.samples.resize(img.height * img.width * 3);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t j = 0; j < img.width; ++j)
      for (std::size_t i = 0; i < img.height; ++i) {
        const double v = std::clamp(std::round(t[i + img.height * (j + img.width * c)]), 0.0, 255.0);
        img.samples[(i * img.width + j) * 3 + c] = static_cast<std::uint8_t>(v);
      }
  return img;
}

std::pair<std::size_t, std::size_t> factor_pair(std::size_t n) {
  if (n == 0) throw std::invalid_argument("factor_pair: n must be positive");
  std::size_t b = 1;
  for (std::size_t q = 1; q * q <= n; ++q)
    if (n % q == 0) b = q;
  return {n / b, b};
}

namespace {

std::size_t factorable_size(std::size_t n) {
  while (n > 3 && factor_pair(n).second == 1) ++n;
  return n;
}

}  // namespace

ReshapePlan plan_reshape(std::size_t height, std::size_t width) {
  ReshapePlan p;
  p.height = height;
  p.width = width;
  p.padded_height = factorable_size(height);
  p.padded_width = factorable_size(width);
  p.hf = factor_pair(p.padded_height);
  p.wf = factor_pair(p.padded_width);
  return p;
}

DenseTensor reshape_image(const DenseTensor& t, const ReshapePlan& plan) {
  if (t.dims() != Dims{plan.height, plan.width, 3}) throw std::invalid_argument("reshape_image: dims mismatch");
  if (!plan.padded()) return DenseTensor(plan.dims(), std::vector<double>(t.data().begin(), t.data().end()));
  const std::size_t ph = plan.padded_height, pw = plan.padded_width;
  std::vector<double> data(ph * pw * 3);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t j = 0; j < pw; ++j)
      for (std::size_t i = 0; i < ph; ++i) {
        const std::size_t si = std::min(i, plan.height - 1), sj = std::min(j, plan.width - 1);
        data[i + ph * (j + pw * c)] = t[si + plan.height * (sj + plan.width * c)];
      }
  return DenseTensor(plan.dims(), std::move(data));
}

DenseTensor unreshape_image(const DenseTensor& t5, const ReshapePlan& plan) {
  if (t5.dims() != plan.dims()) throw std::invalid_argument("unreshape_image: dims mismatch");
  const std::size_t ph = plan.padded_height, pw = plan.padded_width;
  DenseTensor out({plan.height, plan.width, 3});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t j = 0; j < plan.width; ++j)
      for (std::size_t i = 0; i < plan.height; ++i)
        out[i + plan.height * (j + plan.width * c)] = t5[i + ph * (j + pw * c)];
  return out;
}

}  // namespace ttn
