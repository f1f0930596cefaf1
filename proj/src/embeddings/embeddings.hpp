// Copyright 2026 The MAPSS Authors
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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mapss {

enum class ItemKind : std::uint8_t { kOutput = 0, kReference = 1, kDistortion = 2 };

struct ItemLabel {
  std::uint32_t source_id = 0;
  ItemKind kind = ItemKind::kOutput;
  std::uint16_t p = 0;  // distortion index, 1-based; 0 for output/reference

  bool operator==(const ItemLabel&) const = default;
};

/// All items of one frame. Rows are grouped per source as
/// (output, reference, distortion 1..N_p).
struct EmbeddingMatrix {
  std::uint32_t frame_index = 0;
  std::uint32_t n_p = 0;
  std::uint32_t n_sources = 0;
  Eigen::MatrixXd vectors;  // N x M
  std::vector<ItemLabel> labels;

  std::size_t rows() const { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
  std::size_t row_of(std::size_t source_slot, ItemKind kind, std::size_t p = 0) const;
};

/// Raw-waveform passthrough: the frame samples are the feature vector.
std::vector<double> encode_raw(std::span<const double> frame);

/// Item lists per source: outputs[i], references[i], distortions[i][p].
/// Every vector must share one dimension.
EmbeddingMatrix assemble_frame_set(std::uint32_t frame_index, const std::vector<std::uint32_t>& source_ids,
                                   const std::vector<std::vector<double>>& outputs,
                                   const std::vector<std::vector<double>>& references,
                                   const std::vector<std::vector<std::vector<double>>>& distortions);

/// Checks N = n_sources * (N_p + 2), the row layout, label uniqueness and
/// finiteness. Throws ShapeError / FormatError.
void validate_embedding(const EmbeddingMatrix& m);

// `.mapssemb` container (little-endian, float32 payload).
inline constexpr char kEmbMagic[4] = {'M', 'A', 'P', 'S'};
inline constexpr std::uint32_t kEmbVersion = 1;

std::vector<EmbeddingMatrix> read_embedding_file(const std::string& path);
void write_embedding_file(const std::string& path, const std::vector<EmbeddingMatrix>& frames);
std::vector<EmbeddingMatrix> decode_embeddings(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_embeddings(const std::vector<EmbeddingMatrix>& frames);

}  // namespace mapss
