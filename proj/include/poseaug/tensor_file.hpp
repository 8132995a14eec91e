#pragma once

// Flat binary tensor container.
//
//   poseaug-tensors 1\n
//   meta <key> <value>\n            (zero or more)
//   tensor <name> <d0>x<d1>x... <byte offset>\n   (one per tensor)
//   end\n
//   <payload: IEEE-754 float64, little-endian, offsets relative to payload start>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "poseaug/error.hpp"

namespace poseaug {

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  [[nodiscard]] std::size_t numel() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

struct TensorFile {
  std::map<std::string, std::string> meta;
  std::vector<NamedTensor> tensors;

  [[nodiscard]] const NamedTensor& get(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return t;
    }
    throw IoError("tensor file: missing tensor '" + name + "'");
  }
  [[nodiscard]] bool has(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return true;
    }
    return false;
  }
  [[nodiscard]] const std::string& meta_at(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw IoError("tensor file: missing meta '" + key + "'");
    return it->second;
  }
};

namespace detail {

inline std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return __builtin_bswap64(v);
  }
}

}  // namespace detail

inline void write_tensor_file(const std::string& path, const TensorFile& tf) {
  std::ostringstream header;
  header << "poseaug-tensors 1\n";
  for (const auto& [k, v] : tf.meta) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw IoError("tensor file: meta key/value must not contain separators");
    }
    header << "meta " << k << ' ' << v << '\n';
  }
  std::size_t offset = 0;
  for (const auto& t : tf.tensors) {
    if (t.values.size() != t.numel()) throw IoError("tensor file: shape/value count mismatch for " + t.name);
    header << "tensor " << t.name << ' ';
    for (std::size_t i = 0; i < t.shape.size(); ++i) header << (i ? "x" : "") << t.shape[i];
    if (t.shape.empty()) header << "1";
    header << ' ' << offset << '\n';
    offset += t.values.size() * sizeof(double);
  }
  header << "end\n";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const std::string h = header.str();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const auto& t : tf.tensors) {
    for (double v : t.values) {
      const std::uint64_t bits = detail::to_little(std::bit_cast<std::uint64_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

inline TensorFile read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "poseaug-tensors 1") throw ParseError(path + ": not a poseaug tensor file");
  TensorFile tf;
  std::vector<std::size_t> offsets;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line == "end") break;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      tf.meta[key] = value;
    } else if (kind == "tensor") {
      NamedTensor t;
      std::string dims;
      std::size_t off = 0;
      if (!(ls >> t.name >> dims >> off)) throw ParseError(path + ":" + std::to_string(line_no) + ": bad tensor line");
      std::istringstream ds(dims);
      std::string d;
      while (std::getline(ds, d, 'x')) t.shape.push_back(std::stoull(d));
      tf.tensors.push_back(std::move(t));
      offsets.push_back(off);
    } else {
      throw ParseError(path + ":" + std::to_string(line_no) + ": unknown header line '" + line + "'");
    }
  }
  if (line != "end") throw ParseError(path + ": truncated header");
  std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  for (std::size_t i = 0; i < tf.tensors.size(); ++i) {
    auto& t = tf.tensors[i];
    const std::size_t n = t.numel();
    if (offsets[i] + n * sizeof(double) > payload.size()) throw ParseError(path + ": payload too short for " + t.name);
    t.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, payload.data() + offsets[i] + j * sizeof(double), sizeof(bits));
      t.values[j] = std::bit_cast<double>(detail::to_little(bits));
    }
  }
  return tf;
}

}  // namespace poseaug
