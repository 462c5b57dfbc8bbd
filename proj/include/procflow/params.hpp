#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "procflow/rng.hpp"

namespace procflow {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

// Dense row-major matrix of doubles. Vectors are 1 x n or n x 1 as convenient.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }
  void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

// Named parameter blocks, each with a same-shape gradient buffer.
class ParamStore {
public:
  struct Entry {
    Mat value;
    Mat grad;
  };

  Mat& add(const std::string& name, std::size_t rows, std::size_t cols) {
    auto [it, inserted] = entries_.try_emplace(name);
    if (!inserted) throw std::invalid_argument("duplicate parameter: " + name);
    it->second.value = Mat(rows, cols);
    it->second.grad = Mat(rows, cols);
    return it->second.value;
  }

  Mat& value(const std::string& name) { return find(name).value; }
  const Mat& value(const std::string& name) const { return find(name).value; }
  Mat& grad(const std::string& name) { return find(name).grad; }
  const Mat& grad(const std::string& name) const { return find(name).grad; }

  bool has(const std::string& name) const { return entries_.count(name) != 0; }

  void zero_grad() {
    for (auto& [_, e] : entries_) e.grad.zero();
  }

  void scale_grad(double factor) {
    for (auto& [_, e] : entries_)
      for (double& g : e.grad.data) g *= factor;
  }

  bool grads_finite() const {
    for (const auto& [_, e] : entries_)
      for (double g : e.grad.data)
        if (!std::isfinite(g)) return false;
    return true;
  }

  std::map<std::string, Entry>& entries() { return entries_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, e] : entries_) n += e.value.size();
    return n;
  }

private:
  Entry& find(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
  }
  const Entry& find(const std::string& name) const {
    return const_cast<ParamStore*>(this)->find(name);
  }

  std::map<std::string, Entry> entries_;
};

// Initialization: embeddings uniform in [-0.1, 0.1], weight matrices uniform
// in +-1/sqrt(fan_in), biases and CRF transitions zero (handled by callers
// simply not initializing those blocks).
inline void init_uniform(Mat& m, Rng& rng, double half_width) {
  for (double& x : m.data) x = rng.uniform(-half_width, half_width);
}

inline void init_fan_in(Mat& m, Rng& rng) {
  init_uniform(m, rng, 1.0 / std::sqrt(static_cast<double>(m.cols)));
}

// ---------------------------------------------------------------------------
// Checkpoint format
// ---------------------------------------------------------------------------
// Line 1: "PROCFLOW-CKPT 1"
// Line 2: config echo, one JSON object including an "arrays" manifest of
//         {name, rows, cols} in serialization order.
// Then:   the values of each array in manifest order, flat little-endian
//         IEEE-754 doubles, row-major. Gradients are not persisted.

inline void save_checkpoint(const ParamStore& params, const nlohmann::ordered_json& config,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  nlohmann::ordered_json header = config;
  auto manifest = nlohmann::ordered_json::array();
  for (const auto& [name, e] : params.entries()) {
    nlohmann::ordered_json m;
    m["name"] = name;
    m["rows"] = e.value.rows;
    m["cols"] = e.value.cols;
    manifest.push_back(std::move(m));
  }
  header["arrays"] = std::move(manifest);
  out << "PROCFLOW-CKPT 1\n" << header.dump() << "\n";
  for (const auto& [name, e] : params.entries()) {
    out.write(reinterpret_cast<const char*>(e.value.data.data()),
              static_cast<std::streamsize>(e.value.data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint write failure: " + path);
}

// Restores parameter values bit-identically; returns the config echo.
inline nlohmann::json load_checkpoint(ParamStore& params, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != "PROCFLOW-CKPT 1") throw std::runtime_error("bad checkpoint magic in " + path);
  std::getline(in, header_line);
  nlohmann::json header = nlohmann::json::parse(header_line);
  for (const auto& m : header.at("arrays")) {
    const std::string name = m.at("name").get<std::string>();
    const std::size_t rows = m.at("rows").get<std::size_t>();
    const std::size_t cols = m.at("cols").get<std::size_t>();
    Mat& v = params.has(name) ? params.value(name) : params.add(name, rows, cols);
    if (v.rows != rows || v.cols != cols) {
      throw std::runtime_error("shape mismatch for " + name + " in " + path);
    }
    in.read(reinterpret_cast<char*>(v.data.data()),
            static_cast<std::streamsize>(v.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  }
  return header;
}

}  // namespace procflow
