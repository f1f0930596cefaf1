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

#include <cstring>
#include <filesystem>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "embeddings/embeddings.hpp"

using namespace mapss;

namespace {

EmbeddingMatrix random_frame(std::uint32_t index, std::size_t n_src, std::size_t n_p, std::size_t m,
                             std::uint64_t seed) {
  CounterRng r(seed);
  std::vector<std::uint32_t> ids;
  std::vector<std::vector<double>> out, ref;
  std::vector<std::vector<std::vector<double>>> dist(n_src);
  auto vec = [&] {
    std::vector<double> v(m);
    for (double& x : v) x = static_cast<float>(r.normal());  // exactly representable in the file
    return v;
  };
  for (std::size_t i = 0; i < n_src; ++i) {
    ids.push_back(static_cast<std::uint32_t>(i * 3));
    out.push_back(vec());
    ref.push_back(vec());
    for (std::size_t p = 0; p < n_p; ++p) dist[i].push_back(vec());
  }
  return assemble_frame_set(index, ids, out, ref, dist);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

template <class T>
void put(std::vector<std::uint8_t>& b, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  b.insert(b.end(), p, p + sizeof(T));
}

}  // namespace

TEST(Embeddings, RawPassthrough) {
  std::vector<double> frame(400, 0.0);
  EXPECT_EQ(encode_raw(frame).size(), 400u);
  EXPECT_EQ(encode_raw(frame), frame);
  frame[3] = 0.25;
  EXPECT_EQ(encode_raw(frame), encode_raw(frame));
}

TEST(Embeddings, AssembleLayout) {
  const auto a = random_frame(0, 2, 4, 5, 1);
  EXPECT_EQ(a.rows(), 12u);
  EXPECT_EQ(a.labels[0].kind, ItemKind::kOutput);
  EXPECT_EQ(a.labels[1].kind, ItemKind::kReference);
  EXPECT_EQ(a.labels[2].kind, ItemKind::kDistortion);
  EXPECT_EQ(a.labels[2].p, 1);
  EXPECT_EQ(a.labels[6].source_id, 3u);
  EXPECT_EQ(a.row_of(1, ItemKind::kDistortion, 4), 11u);
  EXPECT_EQ(random_frame(0, 3, 50, 2, 2).rows(), 156u);

  std::vector<std::vector<double>> out = {{1, 2}, {1, 2, 3}}, ref = {{1, 2}, {1, 2}};
  std::vector<std::vector<std::vector<double>>> dist = {{{0, 0}}, {{0, 0}}};
  EXPECT_EQ(code_of([&] { assemble_frame_set(0, {0, 1}, out, ref, dist); }), ErrorCode::kDimensionMismatch);
}

TEST(Embeddings, FileRoundTripIsBitExact) {
  std::vector<EmbeddingMatrix> frames = {random_frame(3, 2, 4, 7, 1), random_frame(9, 3, 2, 7, 2)};
  const auto path = std::filesystem::temp_directory_path() / "mapss_roundtrip.mapssemb";
  write_embedding_file(path.string(), frames);
  const auto back = read_embedding_file(path.string());
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(back[k].frame_index, frames[k].frame_index);
    EXPECT_EQ(back[k].labels, frames[k].labels);
    EXPECT_TRUE(back[k].vectors == frames[k].vectors);
  }
  EXPECT_EQ(encode_embeddings(back), encode_embeddings(frames));
}

TEST(Embeddings, TruncatedFileIsFormatError) {
  auto bytes = encode_embeddings({random_frame(0, 2, 3, 4, 5)});
  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_EQ(code_of([&] { decode_embeddings(part); }), ErrorCode::kFormatError) << cut;
  }
  bytes[0] = 'X';
  EXPECT_EQ(code_of([&] { decode_embeddings(bytes); }), ErrorCode::kFormatError);
}

TEST(Embeddings, WrongVersionIsFormatError) {
  auto bytes = encode_embeddings({random_frame(0, 2, 3, 4, 5)});
  bytes[4] = 7;
  EXPECT_EQ(code_of([&] { decode_embeddings(bytes); }), ErrorCode::kFormatError);
}

TEST(Embeddings, RowCountDisagreeingWithLabelsIsShapeError) {
  std::vector<std::uint8_t> b;
  for (char c : {'M', 'A', 'P', 'S'}) put(b, c);
  put<std::uint32_t>(b, 1);
  put<std::uint32_t>(b, 1);
  put<std::uint32_t>(b, 0);   // frame index
  put<std::uint32_t>(b, 10);  // N
  put<std::uint32_t>(b, 2);   // M
  put<std::uint32_t>(b, 3);   // N_p
  put<std::uint32_t>(b, 3);   // sources -> expects 15
  EXPECT_EQ(code_of([&] { decode_embeddings(b); }), ErrorCode::kShapeError);
}

TEST(Embeddings, NanRejectedOnRead) {
  auto bytes = encode_embeddings({random_frame(0, 2, 2, 3, 5)});
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + bytes.size() - 4, &nan, 4);
  EXPECT_EQ(code_of([&] { decode_embeddings(bytes); }), ErrorCode::kFormatError);
}
