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

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pcsa/dsa.hpp"
#include "pcsa/fsa.hpp"
#include "pcsa/matrix.hpp"
#include "pcsa/pcio.hpp"

namespace pcsa {

using Json = nlohmann::ordered_json;

struct Tensor {
  std::string name;
  std::vector<Index> shape;
  std::vector<double> data;
};

// Named tensors stored as <stem>.bin (little-endian float64, concatenated in
// order) plus a <stem>.json sidecar with kind, metadata and shapes.
struct TensorBundle {
  std::string kind;
  Json meta = Json::object();
  std::vector<Tensor> tensors;

  void add(std::string name, const Matrix& m);
  void add(std::string name, const std::vector<double>& v);
  const Tensor& at(std::string_view name) const;
  Matrix matrix(std::string_view name) const;
  std::vector<double> vector(std::string_view name) const;
};

inline constexpr int kBundleVersion = 1;

std::vector<unsigned char> encode_tensors(const TensorBundle& bundle);
Json bundle_sidecar(const TensorBundle& bundle);
TensorBundle decode_bundle(const Json& sidecar, std::span<const unsigned char> bytes);

void write_bundle(const std::filesystem::path& stem, const TensorBundle& bundle);
TensorBundle read_bundle(const std::filesystem::path& stem);

TensorBundle to_bundle(const FsaWeights& w);
TensorBundle to_bundle(const DsaWeights& w);
TensorBundle to_bundle(const EncoderWeights& w);
TensorBundle to_bundle(const FeatureGraph& g);
FsaWeights fsa_weights_from(const TensorBundle& b);
DsaWeights dsa_weights_from(const TensorBundle& b);
EncoderWeights encoder_from(const TensorBundle& b);
FeatureGraph feature_graph_from(const TensorBundle& b);

// Size in bytes of the serialized tensor stream.
Index serialized_bytes(const FsaWeights& w);

// Shortest text for v with at most `digits` significant digits.
std::string format_real(double v, int digits = 9);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m, int digits = 9);
Matrix read_matrix_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const Json& doc);
Json read_json(const std::filesystem::path& path);
std::vector<unsigned char> read_bytes(const std::filesystem::path& path);

}  // namespace pcsa
