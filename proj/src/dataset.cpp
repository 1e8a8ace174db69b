// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/dataset.hpp"

#include <algorithm>
#include <filesystem>

#include "casdyf/image_io.hpp"
#include "casdyf/ops.hpp"

namespace casdyf {

namespace fs = std::filesystem;

template <typename T>
std::vector<ImagePair<T>> load_paired_dir(const std::string& root) {
  const fs::path hazy_dir = fs::path(root) / "hazy";
  const fs::path clear_dir = fs::path(root) / "clear";
  if (!fs::is_directory(hazy_dir) || !fs::is_directory(clear_dir))
    throw std::runtime_error("dataset: '" + root + "' must contain hazy/ and clear/");
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(hazy_dir))
    if (e.path().extension() == ".ppm") names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  if (names.empty()) throw std::runtime_error("dataset: no .ppm files under " + hazy_dir.string());
  std::vector<ImagePair<T>> pairs;
  pairs.reserve(names.size());
  for (const auto& name : names) {
    const fs::path clear_path = clear_dir / name;
    if (!fs::exists(clear_path))
      throw std::runtime_error("dataset: missing clear counterpart for '" + name + "'");
    ImagePair<T> p;
    p.hazy = image_to_tensor<T>(read_ppm((hazy_dir / name).string()));
    p.clear = image_to_tensor<T>(read_ppm(clear_path.string()));
    if (!(p.hazy.shape == p.clear.shape))
      throw std::runtime_error("dataset: shape mismatch for '" + name + "'");
    p.name = fs::path(name).stem().string();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

template <typename T>
void write_paired_dir(const std::string& root, const std::vector<ImagePair<T>>& pairs) {
  fs::create_directories(fs::path(root) / "hazy");
  fs::create_directories(fs::path(root) / "clear");
  for (const auto& p : pairs) {
    write_ppm((fs::path(root) / "hazy" / (p.name + ".ppm")).string(),
              tensor_to_image(p.hazy));
    write_ppm((fs::path(root) / "clear" / (p.name + ".ppm")).string(),
              tensor_to_image(p.clear));
  }
}

namespace {

template <typename T>
Tensor<T> crop(const Tensor<T>& src, index_t y0, index_t x0, index_t size, bool flip) {
  Tensor<T> out({1, src.shape.c, size, size});
  for (index_t c = 0; c < src.shape.c; ++c) {
    const T* sp = src.plane(0, c);
    T* dp = out.plane(0, c);
    for (index_t y = 0; y < size; ++y)
      for (index_t x = 0; x < size; ++x) {
        const index_t sx = flip ? x0 + size - 1 - x : x0 + x;
        dp[y * size + x] = sp[(y0 + y) * src.shape.w + sx];
      }
  }
  return out;
}

}  // namespace

template <typename T>
PatchSample<T> sample_patch(const ImagePair<T>& pair, index_t size, Rng& rng, bool augment) {
  const Shape& s = pair.hazy.shape;
  if (size > s.h || size > s.w)
    shape_error("sample_patch: patch " + std::to_string(size) + " exceeds image " + s.str());
  if (size % 4 != 0) shape_error("sample_patch: size must be divisible by 4");
  const index_t y0 = s.h == size ? 0 : static_cast<index_t>(rng.next_below(
                                           static_cast<std::uint64_t>(s.h - size + 1)));
  const index_t x0 = s.w == size ? 0 : static_cast<index_t>(rng.next_below(
                                           static_cast<std::uint64_t>(s.w - size + 1)));
  const bool flip = augment && rng.next_bool();
  PatchSample<T> out;
  out.hazy = crop(pair.hazy, y0, x0, size, flip);
  out.clear = crop(pair.clear, y0, x0, size, flip);
  out.clear_half = ops::resize_half(out.clear);
  out.clear_quarter = ops::resize_half(out.clear_half);
  return out;
}

template <typename T>
PatchSample<T> sample_patch_seeded(const ImagePair<T>& pair, index_t size, std::uint64_t seed,
                                   bool augment) {
  Rng rng(seed);
  return sample_patch(pair, size, rng, augment);
}

#define CASDYF_INSTANTIATE_DATASET(T)                                                     \
  template std::vector<ImagePair<T>> load_paired_dir<T>(const std::string&);              \
  template void write_paired_dir<T>(const std::string&, const std::vector<ImagePair<T>>&); \
  template struct PatchSample<T>;                                                         \
  template PatchSample<T> sample_patch<T>(const ImagePair<T>&, index_t, Rng&, bool);      \
  template PatchSample<T> sample_patch_seeded<T>(const ImagePair<T>&, index_t,            \
                                                 std::uint64_t, bool);

CASDYF_INSTANTIATE_DATASET(float)
CASDYF_INSTANTIATE_DATASET(double)

}  // namespace casdyf
