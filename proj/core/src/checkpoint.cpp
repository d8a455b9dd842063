// Copyright 2026 The otinfill Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "otinfill/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "otinfill/errors.hpp"
#include "otinfill/text_io.hpp"

namespace otinfill {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr const char* kMagic = "otinfill-checkpoint";
constexpr int kVersion = 1;

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::string line() {
    const auto end = bytes_.find('\n', pos_);
    if (end == std::string::npos) throw FormatError("checkpoint truncated");
    std::string out = bytes_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return out;
  }

  void raw(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("checkpoint truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_parameters(const ParameterSet& params) {
  const DenoiserConfig& c = params.config;
  std::string out = std::string(kMagic) + " " + std::to_string(kVersion) + "\n";
  out += "vocab_size " + std::to_string(c.vocab_size) + "\n";
  out += "embed_dim " + std::to_string(c.embed_dim) + "\n";
  out += "num_layers " + std::to_string(c.num_layers) + "\n";
  out += "num_heads " + std::to_string(c.num_heads) + "\n";
  out += "mlp_ratio " + std::to_string(c.mlp_ratio) + "\n";
  out += "context_length " + std::to_string(c.context_length) + "\n";
  out += "rotary_scale " + format_double(c.rotary_scale) + "\n";
  out += "rotary_base " + format_double(c.rotary_base) + "\n";
  out += "noise_epsilon " + format_double(c.noise_epsilon) + "\n";

  std::size_t count = 0;
  params.visit([&](const std::string&, const Matrix&) { ++count; });
  out += "tensors " + std::to_string(count) + "\n";
  params.visit([&](const std::string& name, const Matrix& m) {
    out += name + " " + std::to_string(m.rows()) + " " +
           std::to_string(m.cols()) + "\n";
    out.append(reinterpret_cast<const char*>(m.data()),
               static_cast<std::size_t>(m.size()) * sizeof(double));
  });
  return out;
}

ParameterSet deserialize_parameters(const std::string& bytes) {
  Reader r(bytes);
  {
    std::istringstream head(r.line());
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kMagic) throw FormatError("not an otinfill checkpoint");
    if (version != kVersion) {
      throw FormatError("unsupported checkpoint version " +
                        std::to_string(version));
    }
  }
  DenoiserConfig c;
  std::size_t tensors = 0;
  for (;;) {
    std::istringstream ls(r.line());
    std::string key;
    ls >> key;
    if (key == "tensors") {
      ls >> tensors;
      break;
    }
    if (key == "vocab_size") ls >> c.vocab_size;
    else if (key == "embed_dim") ls >> c.embed_dim;
    else if (key == "num_layers") ls >> c.num_layers;
    else if (key == "num_heads") ls >> c.num_heads;
    else if (key == "mlp_ratio") ls >> c.mlp_ratio;
    else if (key == "context_length") ls >> c.context_length;
    else if (key == "rotary_scale") ls >> c.rotary_scale;
    else if (key == "rotary_base") ls >> c.rotary_base;
    else if (key == "noise_epsilon") ls >> c.noise_epsilon;
    else throw FormatError("unknown checkpoint header key '" + key + "'");
    if (ls.fail()) throw FormatError("bad value for checkpoint key '" + key + "'");
  }
  c.validate();

  ParameterSet p = init_parameters(c, 0, 0.0);
  std::size_t seen = 0;
  p.visit([&](const std::string& name, Matrix& m) {
    std::istringstream ls(r.line());
    std::string got;
    Eigen::Index rows = 0, cols = 0;
    ls >> got >> rows >> cols;
    if (got != name || rows != m.rows() || cols != m.cols()) {
      throw FormatError("checkpoint tensor '" + got + "' does not match '" +
                        name + "'");
    }
    r.raw(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    ++seen;
  });
  if (seen != tensors || !r.at_end()) {
    throw FormatError("checkpoint tensor count mismatch");
  }
  return p;
}

void save_checkpoint(const std::filesystem::path& path,
                     const ParameterSet& params) {
  write_file_atomic(path, serialize_parameters(params));
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
  return deserialize_parameters(read_file(path));
}

}  // namespace otinfill
