// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/checkpoint.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace casdyf {

namespace {

constexpr char kMagic[9] = "CDYF0001";

template <typename T>
const char* dtype_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

template <typename T>
RawTensor raw_from_tensor(const Tensor<T>& t) {
  RawTensor r;
  r.shape = t.shape;
  r.dtype = dtype_name<T>();
  r.bytes.resize(t.data.size() * sizeof(T));
  std::memcpy(r.bytes.data(), t.data.data(), r.bytes.size());
  return r;
}

nlohmann::json shape_to_json(const Shape& s) {
  return nlohmann::json::array({s.n, s.c, s.h, s.w});
}

Shape shape_from_json(const nlohmann::json& j) {
  return Shape{j.at(0).get<index_t>(), j.at(1).get<index_t>(), j.at(2).get<index_t>(),
               j.at(3).get<index_t>()};
}

std::size_t dtype_size(const std::string& d) {
  if (d == "f32") return 4;
  if (d == "f64") return 8;
  throw std::runtime_error("checkpoint: unknown dtype '" + d + "'");
}

[[noreturn]] void corrupt(const std::string& what, std::uint64_t offset) {
  throw std::runtime_error("checkpoint: " + what + " at byte offset " +
                           std::to_string(offset));
}

void put_u64(std::ostream& os, std::uint64_t v) {
  std::uint8_t buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

}  // namespace

template <typename T>
Tensor<T> RawTensor::to_tensor() const {
  Tensor<T> out(shape);
  const std::size_t n = out.data.size();
  if (dtype == dtype_name<T>()) {
    std::memcpy(out.data.data(), bytes.data(), bytes.size());
  } else if (dtype == "f32") {
    const float* p = reinterpret_cast<const float*>(bytes.data());
    for (std::size_t i = 0; i < n; ++i) out.data[i] = static_cast<T>(p[i]);
  } else {
    const double* p = reinterpret_cast<const double*>(bytes.data());
    for (std::size_t i = 0; i < n; ++i) out.data[i] = static_cast<T>(p[i]);
  }
  return out;
}

template <typename T>
Checkpoint snapshot(const ModelConfig& cfg, const ParamStore<T>& store) {
  Checkpoint ck;
  ck.config = cfg;
  ck.dtype = dtype_name<T>();
  for (const auto& e : store.entries())
    ck.tensors.emplace_back(e.name, raw_from_tensor(e.value.val()));
  return ck;
}

void write_checkpoint(const std::string& path, const Checkpoint& ck) {
  nlohmann::json manifest;
  manifest["format_version"] = Checkpoint::kFormatVersion;
  manifest["config"] = nlohmann::json::parse(ck.config.to_json());
  manifest["dtype"] = ck.dtype;

  nlohmann::json dir = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, raw] : ck.tensors) {
    nlohmann::json e;
    e["name"] = name;
    e["shape"] = shape_to_json(raw.shape);
    e["dtype"] = raw.dtype;
    e["offset"] = offset;
    dir.push_back(e);
    offset += raw.bytes.size();
  }
  manifest["tensors"] = dir;

  if (ck.optim) {
    nlohmann::json o;
    o["step"] = ck.optim->step;
    o["beta1"] = ck.optim->beta1;
    o["beta2"] = ck.optim->beta2;
    o["eps"] = ck.optim->eps;
    nlohmann::json moments = nlohmann::json::array();
    for (const char* kind : {"m", "v"}) {
      const auto& bank = kind[0] == 'm' ? ck.optim->m : ck.optim->v;
      for (const auto& [name, raw] : bank) {
        nlohmann::json e;
        e["name"] = name;
        e["kind"] = kind;
        e["shape"] = shape_to_json(raw.shape);
        e["dtype"] = raw.dtype;
        e["offset"] = offset;
        moments.push_back(e);
        offset += raw.bytes.size();
      }
    }
    o["moments"] = moments;
    manifest["optimizer"] = o;
  }
  if (ck.schedule) {
    manifest["schedule"] = {{"step", ck.schedule->step},
                            {"total_steps", ck.schedule->total_steps},
                            {"eta0", ck.schedule->eta0},
                            {"eta_min", ck.schedule->eta_min}};
  }
  if (ck.rng_state) {
    manifest["rng_state"] = *ck.rng_state;
  }

  const std::string text = manifest.dump();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, 8);
  put_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, raw] : ck.tensors)
    os.write(reinterpret_cast<const char*>(raw.bytes.data()),
             static_cast<std::streamsize>(raw.bytes.size()));
  if (ck.optim) {
    for (const char* kind : {"m", "v"}) {
      const auto& bank = kind[0] == 'm' ? ck.optim->m : ck.optim->v;
      for (const auto& [name, raw] : bank)
        os.write(reinterpret_cast<const char*>(raw.bytes.data()),
                 static_cast<std::streamsize>(raw.bytes.size()));
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write to '" + path + "' failed");
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(is)),
                                 std::istreambuf_iterator<char>());
  if (blob.size() < 16) corrupt("file shorter than header", blob.size());
  if (std::memcmp(blob.data(), "CDYF", 4) != 0) corrupt("bad magic", 0);
  if (std::memcmp(blob.data(), kMagic, 8) != 0)
    throw std::runtime_error(
        "checkpoint: format version mismatch, expected CDYF0001, found " +
        std::string(reinterpret_cast<const char*>(blob.data()), 8));
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(blob[8 + i]) << (8 * i);
  if (16 + len > blob.size()) corrupt("manifest length exceeds file size", 8);

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(blob.begin() + 16, blob.begin() + 16 + static_cast<std::ptrdiff_t>(len));
  } catch (const std::exception& e) {
    corrupt(std::string("manifest parse error: ") + e.what(), 16);
  }
  if (manifest.at("format_version").get<std::uint32_t>() != Checkpoint::kFormatVersion)
    throw std::runtime_error("checkpoint: manifest format_version mismatch");

  Checkpoint ck;
  ck.config = ModelConfig::from_json(manifest.at("config").dump());
  ck.dtype = manifest.at("dtype").get<std::string>();
  const std::uint64_t payload_base = 16 + len;

  auto read_raw = [&](const nlohmann::json& e) {
    RawTensor raw;
    raw.shape = shape_from_json(e.at("shape"));
    raw.dtype = e.at("dtype").get<std::string>();
    const std::uint64_t off = payload_base + e.at("offset").get<std::uint64_t>();
    const std::uint64_t size =
        static_cast<std::uint64_t>(raw.shape.numel()) * dtype_size(raw.dtype);
    if (off + size > blob.size()) corrupt("truncated tensor payload", off);
    raw.bytes.assign(blob.begin() + static_cast<std::ptrdiff_t>(off),
                     blob.begin() + static_cast<std::ptrdiff_t>(off + size));
    return raw;
  };

  for (const auto& e : manifest.at("tensors"))
    ck.tensors.emplace_back(e.at("name").get<std::string>(), read_raw(e));

  if (manifest.contains("optimizer")) {
    OptimSnapshot o;
    const auto& jo = manifest["optimizer"];
    o.step = jo.at("step").get<std::uint64_t>();
    o.beta1 = jo.at("beta1").get<double>();
    o.beta2 = jo.at("beta2").get<double>();
    o.eps = jo.at("eps").get<double>();
    for (const auto& e : jo.at("moments")) {
      auto& bank = e.at("kind").get<std::string>() == "m" ? o.m : o.v;
      bank.emplace(e.at("name").get<std::string>(), read_raw(e));
    }
    ck.optim = std::move(o);
  }
  if (manifest.contains("schedule")) {
    ScheduleState s;
    const auto& js = manifest["schedule"];
    s.step = js.at("step").get<std::uint64_t>();
    s.total_steps = js.at("total_steps").get<std::uint64_t>();
    s.eta0 = js.at("eta0").get<double>();
    s.eta_min = js.at("eta_min").get<double>();
    ck.schedule = s;
  }
  if (manifest.contains("rng_state"))
    ck.rng_state = manifest["rng_state"].get<std::array<std::uint64_t, 4>>();
  return ck;
}

template <typename T>
void apply_to_store(const Checkpoint& ck, ParamStore<T>& store) {
  if (ck.tensors.size() != store.entries().size())
    throw std::runtime_error("checkpoint: tensor count " + std::to_string(ck.tensors.size()) +
                             " != store entries " + std::to_string(store.entries().size()));
  for (std::size_t i = 0; i < ck.tensors.size(); ++i) {
    const auto& [name, raw] = ck.tensors[i];
    auto& entry = store.entries()[i];
    if (entry.name != name)
      throw std::runtime_error("checkpoint: tensor order mismatch, expected '" + entry.name +
                               "', found '" + name + "'");
    if (!(entry.value.val().shape == raw.shape))
      throw std::runtime_error("checkpoint: shape mismatch for tensor '" + name + "': store " +
                               entry.value.val().shape.str() + " vs file " + raw.shape.str());
    entry.value.val() = raw.to_tensor<T>();
  }
}

template <typename T>
Model<T> load_model(const std::string& path) {
  Checkpoint ck = read_checkpoint(path);
  Model<T> model(ck.config, /*seed=*/0);
  apply_to_store(ck, model.store());
  return model;
}

template Tensor<float> RawTensor::to_tensor<float>() const;
template Tensor<double> RawTensor::to_tensor<double>() const;
template Checkpoint snapshot<float>(const ModelConfig&, const ParamStore<float>&);
template Checkpoint snapshot<double>(const ModelConfig&, const ParamStore<double>&);
template void apply_to_store<float>(const Checkpoint&, ParamStore<float>&);
template void apply_to_store<double>(const Checkpoint&, ParamStore<double>&);
template Model<float> load_model<float>(const std::string&);
template Model<double> load_model<double>(const std::string&);

}  // namespace casdyf
