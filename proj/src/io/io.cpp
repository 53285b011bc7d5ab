// Copyright 2026 The pcsa Authors
//
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

#include "pcsa/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>

#include "pcsa/error.hpp"

namespace pcsa {
namespace {

Index element_count(const std::vector<Index>& shape) {
  Index n = 1;
  for (Index s : shape) n *= s;
  return n;
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

template <typename T>
T meta_get(const TensorBundle& b, const char* key) {
  if (!b.meta.contains(key)) throw FormatError("tensor bundle: missing meta field '" + std::string(key) + "'");
  try {
    return b.meta.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError("tensor bundle: meta field '" + std::string(key) + "' has the wrong type");
  }
}

void require_kind(const TensorBundle& b, std::string_view kind) {
  if (b.kind != kind) {
    throw FormatError("tensor bundle: expected kind '" + std::string(kind) + "', found '" +
                      b.kind + "'");
  }
}

void add_fsa(TensorBundle& b, const FsaWeights& w, const std::string& prefix) {
  b.add(prefix + "wq", w.wq);
  b.add(prefix + "wk", w.wk);
  b.add(prefix + "wv", w.wv);
  b.add(prefix + "wo", w.wo);
  b.add(prefix + "wpos", w.wpos);
  b.add(prefix + "gamma", w.gamma);
  b.add(prefix + "beta", w.beta);
}

FsaWeights read_fsa(const TensorBundle& b, const std::string& prefix) {
  FsaWeights w;
  w.dim = meta_get<Index>(b, "dim");
  w.heads = meta_get<Index>(b, "heads");
  w.groups = meta_get<Index>(b, "groups");
  w.eps = meta_get<double>(b, "eps");
  w.wq = b.matrix(prefix + "wq");
  w.wk = b.matrix(prefix + "wk");
  w.wv = b.matrix(prefix + "wv");
  w.wo = b.matrix(prefix + "wo");
  w.wpos = b.matrix(prefix + "wpos");
  w.gamma = b.vector(prefix + "gamma");
  w.beta = b.vector(prefix + "beta");
  try {
    w.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("tensor bundle: ") + e.what());
  }
  return w;
}

Json fsa_meta(const FsaWeights& w) {
  Json m = Json::object();
  m["dim"] = w.dim;
  m["heads"] = w.heads;
  m["groups"] = w.groups;
  m["eps"] = w.eps;
  return m;
}

}  // namespace

void TensorBundle::add(std::string name, const Matrix& m) {
  const auto v = m.values();
  tensors.push_back({std::move(name), {m.rows(), m.cols()}, {v.begin(), v.end()}});
}

void TensorBundle::add(std::string name, const std::vector<double>& v) {
  tensors.push_back({std::move(name), {v.size()}, v});
}

const Tensor& TensorBundle::at(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw FormatError("tensor bundle: missing tensor '" + std::string(name) + "'");
}

Matrix TensorBundle::matrix(std::string_view name) const {
  const Tensor& t = at(name);
  if (t.shape.size() != 2) {
    throw FormatError("tensor bundle: '" + std::string(name) + "' is not a matrix");
  }
  return Matrix(t.shape[0], t.shape[1], t.data);
}

std::vector<double> TensorBundle::vector(std::string_view name) const {
  const Tensor& t = at(name);
  if (t.shape.size() != 1) {
    throw FormatError("tensor bundle: '" + std::string(name) + "' is not a vector");
  }
  return t.data;
}

std::vector<unsigned char> encode_tensors(const TensorBundle& bundle) {
  Index total = 0;
  for (const auto& t : bundle.tensors) total += t.data.size();
  std::vector<unsigned char> out;
  out.reserve(total * 8);
  for (const auto& t : bundle.tensors) {
    for (double v : t.data) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
    }
  }
  return out;
}

Json bundle_sidecar(const TensorBundle& bundle) {
  Json doc = Json::object();
  doc["format"] = "pcsa-tensors";
  doc["version"] = kBundleVersion;
  doc["kind"] = bundle.kind;
  doc["dtype"] = "float64-le";
  doc["meta"] = bundle.meta;
  Json list = Json::array();
  Index offset = 0;
  for (const auto& t : bundle.tensors) {
    if (element_count(t.shape) != t.data.size()) {
      throw ArgumentError("tensor '" + t.name + "': shape does not match element count");
    }
    Json e = Json::object();
    e["name"] = t.name;
    e["shape"] = t.shape;
    e["offset"] = offset;
    e["count"] = t.data.size();
    offset += t.data.size();
    list.push_back(std::move(e));
  }
  doc["tensors"] = std::move(list);
  return doc;
}

TensorBundle decode_bundle(const Json& sidecar, std::span<const unsigned char> bytes) {
  TensorBundle b;
  try {
    if (sidecar.at("format").get<std::string>() != "pcsa-tensors") {
      throw FormatError("tensor bundle: unknown format tag");
    }
    if (sidecar.at("version").get<int>() != kBundleVersion) {
      throw FormatError("tensor bundle: unsupported version");
    }
    b.kind = sidecar.at("kind").get<std::string>();
    if (sidecar.contains("meta")) b.meta = sidecar.at("meta");
    if (bytes.size() % 8 != 0) throw FormatError("tensor bundle: stream is not a whole number of reals");
    const Index available = bytes.size() / 8;
    for (const auto& e : sidecar.at("tensors")) {
      Tensor t;
      t.name = e.at("name").get<std::string>();
      t.shape = e.at("shape").get<std::vector<Index>>();
      const auto offset = e.at("offset").get<Index>();
      const auto count = e.at("count").get<Index>();
      if (count != element_count(t.shape) || offset > available || count > available - offset) {
        throw FormatError("tensor bundle: tensor '" + t.name + "' is out of bounds");
      }
      t.data.resize(count);
      for (Index i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        const unsigned char* p = bytes.data() + (offset + i) * 8;
        for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(p[k]) << (8 * k);
        t.data[i] = std::bit_cast<double>(bits);
      }
      b.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("tensor bundle: malformed sidecar (") + e.what() + ")");
  }
  return b;
}

void write_bundle(const std::filesystem::path& stem, const TensorBundle& bundle) {
  const Json sidecar = bundle_sidecar(bundle);
  const auto bytes = encode_tensors(bundle);
  auto bin = stem;
  bin += ".bin";
  auto meta = stem;
  meta += ".json";
  write_file(bin, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  write_json(meta, sidecar);
}

TensorBundle read_bundle(const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".bin";
  auto meta = stem;
  meta += ".json";
  const Json sidecar = read_json(meta);
  const auto bytes = read_bytes(bin);
  return decode_bundle(sidecar, bytes);
}

TensorBundle to_bundle(const FsaWeights& w) {
  w.validate();
  TensorBundle b;
  b.kind = "fsa-weights";
  b.meta = fsa_meta(w);
  add_fsa(b, w, "");
  return b;
}

TensorBundle to_bundle(const DsaWeights& w) {
  w.validate();
  TensorBundle b;
  b.kind = "dsa-weights";
  b.meta = fsa_meta(w.fsa);
  b.meta["upsample"] = std::string(to_string(w.mode));
  add_fsa(b, w.fsa, "fsa.");
  b.add("w_offset", w.w_offset);
  b.add("w_align", w.w_align);
  b.add("w_out", w.w_out);
  if (w.mode == UpsampleMode::idw) {
    b.meta["interp_radius"] = w.idw.radius;
    b.meta["interp_samples"] = w.idw.max_samples;
    b.add("idw.mlp", w.idw.mlp);
  } else {
    b.add("attention.wq", w.attention.wq);
    b.add("attention.wk", w.attention.wk);
    b.add("attention.wv", w.attention.wv);
  }
  return b;
}

TensorBundle to_bundle(const EncoderWeights& w) {
  TensorBundle b;
  b.kind = "encoder-weights";
  b.meta["dim"] = w.dim();
  b.add("map", w.map);
  return b;
}

TensorBundle to_bundle(const FeatureGraph& g) {
  g.validate();
  TensorBundle b;
  b.kind = "feature-graph";
  b.meta["nodes"] = g.size();
  b.meta["dim"] = g.dim();
  b.add("features", g.features);
  b.add("positions", g.positions);
  if (!g.member_counts.empty()) {
    std::vector<double> counts(g.member_counts.begin(), g.member_counts.end());
    b.add("member_counts", counts);
  }
  return b;
}

FsaWeights fsa_weights_from(const TensorBundle& b) {
  require_kind(b, "fsa-weights");
  return read_fsa(b, "");
}

DsaWeights dsa_weights_from(const TensorBundle& b) {
  require_kind(b, "dsa-weights");
  DsaWeights w;
  w.fsa = read_fsa(b, "fsa.");
  w.w_offset = b.matrix("w_offset");
  w.w_align = b.matrix("w_align");
  w.w_out = b.matrix("w_out");
  try {
    w.mode = parse_upsample_mode(meta_get<std::string>(b, "upsample"));
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("tensor bundle: ") + e.what());
  }
  if (w.mode == UpsampleMode::idw) {
    w.idw.radius = meta_get<double>(b, "interp_radius");
    w.idw.max_samples = meta_get<Index>(b, "interp_samples");
    w.idw.mlp = b.matrix("idw.mlp");
  } else {
    w.attention.wq = b.matrix("attention.wq");
    w.attention.wk = b.matrix("attention.wk");
    w.attention.wv = b.matrix("attention.wv");
  }
  try {
    w.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("tensor bundle: ") + e.what());
  }
  return w;
}

EncoderWeights encoder_from(const TensorBundle& b) {
  require_kind(b, "encoder-weights");
  EncoderWeights w{b.matrix("map")};
  if (w.map.rows() != 4 || w.map.cols() == 0) {
    throw FormatError("tensor bundle: encoder map must be 4 x d");
  }
  return w;
}

FeatureGraph feature_graph_from(const TensorBundle& b) {
  require_kind(b, "feature-graph");
  FeatureGraph g{b.matrix("features"), b.matrix("positions"), {}};
  for (const auto& t : b.tensors) {
    if (t.name == "member_counts") {
      for (double c : t.data) g.member_counts.push_back(static_cast<Index>(c));
    }
  }
  try {
    g.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("tensor bundle: ") + e.what());
  }
  return g;
}

Index serialized_bytes(const FsaWeights& w) { return encode_tensors(to_bundle(w)).size(); }

std::string format_real(double v, int digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
  return std::string(buf, res.ptr);
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m, int digits) {
  std::string text;
  text.reserve(m.size() * (digits + 3));
  char buf[64];
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) text.push_back(',');
      const auto res =
          std::to_chars(buf, buf + sizeof buf, m(r, c), std::chars_format::general, digits);
      text.append(buf, res.ptr);
    }
    text.push_back('\n');
  }
  write_file(path, text);
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<double> values;
  Index rows = 0;
  Index cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Index count = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw FormatError("csv: bad number in '" + path.string() + "'");
      values.push_back(v);
      ++count;
      p = res.ptr;
      if (p < end && *p == ',') ++p;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw FormatError("csv: ragged rows in '" + path.string() + "'");
    ++rows;
  }
  return Matrix(rows, cols, std::move(values));
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  write_file(path, doc.dump(2) + "\n");
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("'" + path.string() + "': invalid JSON (" + e.what() + ")");
  }
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return bytes;
}

}  // namespace pcsa
