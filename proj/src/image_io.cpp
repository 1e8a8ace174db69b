// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/image_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace casdyf {

namespace {

struct HeaderReader {
  const std::vector<std::uint8_t>& data;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("pnm: " + what + " at byte offset " + std::to_string(pos));
  }

  void skip_space_and_comments() {
    while (pos < data.size()) {
      const char c = static_cast<char>(data[pos]);
      if (c == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        return;
      }
    }
  }

  int read_int() {
    skip_space_and_comments();
    if (pos >= data.size()) fail("unexpected end of header");
    if (data[pos] < '0' || data[pos] > '9') fail("expected decimal value");
    long v = 0;
    while (pos < data.size() && data[pos] >= '0' && data[pos] <= '9') {
      v = v * 10 + (data[pos] - '0');
      if (v > 1 << 30) fail("header value out of range");
      ++pos;
    }
    return static_cast<int>(v);
  }
};

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("pnm: cannot open '" + path + "'");
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
}

// shared parse for P5/P6
std::vector<std::uint8_t> parse_pnm(const std::string& path, char wanted, int& width,
                                    int& height) {
  const auto blob = read_file(path);
  HeaderReader hr{blob};
  if (blob.size() < 2) hr.fail("file too short for magic");
  if (blob[0] != 'P') hr.fail("bad magic, not a PNM file");
  const char kind = static_cast<char>(blob[1]);
  if (kind == '3' || kind == '2')
    throw std::runtime_error(std::string("pnm: ASCII P") + kind +
                             " not supported, binary P" + (wanted == '6' ? "6" : "5") +
                             " required");
  if (kind != wanted)
    throw std::runtime_error(std::string("pnm: expected P") + wanted + ", found P" + kind);
  hr.pos = 2;
  width = hr.read_int();
  height = hr.read_int();
  const int maxval = hr.read_int();
  if (maxval != 255)
    throw std::runtime_error("pnm: maxval must be 255, found " + std::to_string(maxval));
  if (hr.pos >= blob.size()) hr.fail("missing whitespace after maxval");
  const char sep = static_cast<char>(blob[hr.pos]);
  if (sep != '\n' && sep != ' ' && sep != '\t' && sep != '\r')
    hr.fail("expected single whitespace after maxval");
  ++hr.pos;
  const std::size_t channels = wanted == '6' ? 3 : 1;
  const std::size_t need =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * channels;
  if (blob.size() - hr.pos < need)
    throw std::runtime_error("pnm: payload truncated, need " + std::to_string(need) +
                             " bytes from offset " + std::to_string(hr.pos) + ", have " +
                             std::to_string(blob.size() - hr.pos));
  return std::vector<std::uint8_t>(blob.begin() + static_cast<std::ptrdiff_t>(hr.pos),
                                   blob.begin() + static_cast<std::ptrdiff_t>(hr.pos + need));
}

}  // namespace

ImageBuffer read_ppm(const std::string& path) {
  ImageBuffer img;
  img.rgb = parse_pnm(path, '6', img.width, img.height);
  return img;
}

void write_ppm(const std::string& path, const ImageBuffer& img) {
  if (img.rgb.size() != static_cast<std::size_t>(img.width) * img.height * 3)
    shape_error("ppm: buffer size does not match dimensions");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("ppm: cannot open '" + path + "' for writing");
  os << "P6\n" << img.width << " " << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.rgb.data()),
           static_cast<std::streamsize>(img.rgb.size()));
  if (!os) throw std::runtime_error("ppm: write to '" + path + "' failed");
}

GrayBuffer read_pgm(const std::string& path) {
  GrayBuffer img;
  img.gray = parse_pnm(path, '5', img.width, img.height);
  return img;
}

void write_pgm(const std::string& path, const GrayBuffer& img) {
  if (img.gray.size() != static_cast<std::size_t>(img.width) * img.height)
    shape_error("pgm: buffer size does not match dimensions");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("pgm: cannot open '" + path + "' for writing");
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.gray.data()),
           static_cast<std::streamsize>(img.gray.size()));
  if (!os) throw std::runtime_error("pgm: write to '" + path + "' failed");
}

template <typename T>
Tensor<T> image_to_tensor(const ImageBuffer& img) {
  Tensor<T> t({1, 3, img.height, img.width});
  const std::size_t plane = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      t.data[c * plane + i] = static_cast<T>(img.rgb[i * 3 + c]) / T(255);
  return t;
}

namespace {
inline std::uint8_t to_byte(double v) {
  const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}
}  // namespace

template <typename T>
ImageBuffer tensor_to_image(const Tensor<T>& t) {
  if (t.shape.n != 1 || t.shape.c != 3)
    shape_error("image: expected (1,3,H,W), got " + t.shape.str());
  ImageBuffer img;
  img.width = static_cast<int>(t.shape.w);
  img.height = static_cast<int>(t.shape.h);
  const std::size_t plane = static_cast<std::size_t>(img.width) * img.height;
  img.rgb.resize(plane * 3);
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      img.rgb[i * 3 + c] = to_byte(static_cast<double>(t.data[c * plane + i]));
  return img;
}

template <typename T>
GrayBuffer tensor_to_gray(const Tensor<T>& t) {
  if (t.shape.c != 1) shape_error("gray: expected single channel, got " + t.shape.str());
  GrayBuffer img;
  img.width = static_cast<int>(t.shape.w);
  img.height = static_cast<int>(t.shape.h);
  img.gray.resize(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < img.gray.size(); ++i)
    img.gray[i] = to_byte(static_cast<double>(t.data[i]));
  return img;
}

template Tensor<float> image_to_tensor<float>(const ImageBuffer&);
template Tensor<double> image_to_tensor<double>(const ImageBuffer&);
template ImageBuffer tensor_to_image<float>(const Tensor<float>&);
template ImageBuffer tensor_to_image<double>(const Tensor<double>&);
template GrayBuffer tensor_to_gray<float>(const Tensor<float>&);
template GrayBuffer tensor_to_gray<double>(const Tensor<double>&);

}  // namespace casdyf
