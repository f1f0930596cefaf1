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

#include "embeddings/embeddings.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <tuple>

#include "common/error.hpp"

namespace mapss {
namespace {

static_assert(std::endian::native == std::endian::little, "embedding I/O assumes a little-endian host");

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  template <class T>
  T get() {
    if (pos_ + sizeof(T) > b_.size()) fail(ErrorCode::kFormatError, "embedding file is truncated");
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t EmbeddingMatrix::row_of(std::size_t slot, ItemKind kind, std::size_t p) const {
  const std::size_t base = slot * (n_p + 2);
  switch (kind) {
    case ItemKind::kOutput: return base;
    case ItemKind::kReference: return base + 1;
    case ItemKind::kDistortion: return base + 1 + p;
  }
  return base;
}

std::vector<double> encode_raw(std::span<const double> frame) { return {frame.begin(), frame.end()}; }

EmbeddingMatrix assemble_frame_set(std::uint32_t frame_index, const std::vector<std::uint32_t>& source_ids,
                                   const std::vector<std::vector<double>>& outputs,
                                   const std::vector<std::vector<double>>& references,
                                   const std::vector<std::vector<std::vector<double>>>& distortions) {
  const std::size_t n_src = source_ids.size();
  require(n_src >= 1 && outputs.size() == n_src && references.size() == n_src && distortions.size() == n_src,
          ErrorCode::kShapeError, "one output, reference and distortion set per source");
  const std::size_t n_p = distortions.front().size();
  for (const auto& d : distortions) {
    require(d.size() == n_p, ErrorCode::kShapeError, "all sources need the same number of distortions");
  }
  const std::size_t m = outputs.front().size();
  require(m > 0, ErrorCode::kDimensionMismatch, "empty feature vector");

  EmbeddingMatrix out;
  out.frame_index = frame_index;
  out.n_p = static_cast<std::uint32_t>(n_p);
  out.n_sources = static_cast<std::uint32_t>(n_src);
  out.vectors.resize(static_cast<Eigen::Index>(n_src * (n_p + 2)), static_cast<Eigen::Index>(m));
  Eigen::Index row = 0;
  auto put = [&](const std::vector<double>& v, ItemLabel label) {
    if (v.size() != m) fail(ErrorCode::kDimensionMismatch, "feature dimensions differ between items");
    for (std::size_t c = 0; c < m; ++c) out.vectors(row, static_cast<Eigen::Index>(c)) = v[c];
    out.labels.push_back(label);
    ++row;
  };
  for (std::size_t i = 0; i < n_src; ++i) {
    put(outputs[i], {source_ids[i], ItemKind::kOutput, 0});
    put(references[i], {source_ids[i], ItemKind::kReference, 0});
    for (std::size_t p = 0; p < n_p; ++p) {
      put(distortions[i][p], {source_ids[i], ItemKind::kDistortion, static_cast<std::uint16_t>(p + 1)});
    }
  }
  return out;
}

void validate_embedding(const EmbeddingMatrix& m) {
  const std::size_t expect = static_cast<std::size_t>(m.n_sources) * (m.n_p + 2);
  if (m.rows() != expect || m.labels.size() != m.rows()) {
    fail(ErrorCode::kShapeError, "frame " + std::to_string(m.frame_index) + " has " + std::to_string(m.rows()) +
                                     " rows, expected n_sources * (N_p + 2) = " + std::to_string(expect));
  }
  std::set<std::tuple<std::uint32_t, std::uint8_t, std::uint16_t>> seen;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto& l = m.labels[r];
    const std::size_t slot = r / (m.n_p + 2);
    const std::size_t off = r % (m.n_p + 2);
    const ItemKind want = off == 0 ? ItemKind::kOutput : off == 1 ? ItemKind::kReference : ItemKind::kDistortion;
    const std::size_t want_p = off >= 2 ? off - 1 : 0;
    if (l.kind != want || l.p != want_p || l.source_id != m.labels[slot * (m.n_p + 2)].source_id) {
      fail(ErrorCode::kShapeError, "row labels do not follow the (output, reference, distortions) layout");
    }
    if (!seen.insert({l.source_id, static_cast<std::uint8_t>(l.kind), l.p}).second) {
      fail(ErrorCode::kShapeError, "duplicate row label");
    }
  }
  if (!m.vectors.allFinite()) fail(ErrorCode::kFormatError, "embedding contains non-finite values");
}

std::vector<std::uint8_t> encode_embeddings(const std::vector<EmbeddingMatrix>& frames) {
  Writer w;
  for (char c : kEmbMagic) w.put(c);
  w.put(kEmbVersion);
  w.put(static_cast<std::uint32_t>(frames.size()));
  for (const auto& f : frames) {
    validate_embedding(f);
    w.put(f.frame_index);
    w.put(static_cast<std::uint32_t>(f.rows()));
    w.put(static_cast<std::uint32_t>(f.dim()));
    w.put(f.n_p);
    w.put(f.n_sources);
    for (const auto& l : f.labels) {
      w.put(l.source_id);
      w.put(static_cast<std::uint8_t>(l.kind));
      w.put(l.p);
    }
    for (Eigen::Index r = 0; r < f.vectors.rows(); ++r) {
      for (Eigen::Index c = 0; c < f.vectors.cols(); ++c) w.put(static_cast<float>(f.vectors(r, c)));
    }
  }
  return std::move(w.bytes);
}

std::vector<EmbeddingMatrix> decode_embeddings(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  for (char& c : magic) c = r.get<char>();
  if (std::memcmp(magic, kEmbMagic, 4) != 0) fail(ErrorCode::kFormatError, "bad magic, not a .mapssemb file");
  const auto version = r.get<std::uint32_t>();
  if (version != kEmbVersion) fail(ErrorCode::kFormatError, "unsupported .mapssemb version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();

  std::vector<EmbeddingMatrix> frames;
  for (std::uint32_t k = 0; k < count; ++k) {
    EmbeddingMatrix f;
    f.frame_index = r.get<std::uint32_t>();
    const auto n = r.get<std::uint32_t>();
    const auto m = r.get<std::uint32_t>();
    f.n_p = r.get<std::uint32_t>();
    f.n_sources = r.get<std::uint32_t>();
    if (static_cast<std::uint64_t>(f.n_sources) * (static_cast<std::uint64_t>(f.n_p) + 2) != n) {
      fail(ErrorCode::kShapeError, "frame " + std::to_string(f.frame_index) + ": N = " + std::to_string(n) +
                                       " does not equal n_sources * (N_p + 2)");
    }
    if (static_cast<std::uint64_t>(n) * 7 > r.remaining()) fail(ErrorCode::kFormatError, "embedding file is truncated");
    f.labels.resize(n);
    for (auto& l : f.labels) {
      l.source_id = r.get<std::uint32_t>();
      const auto kind = r.get<std::uint8_t>();
      if (kind > 2) fail(ErrorCode::kFormatError, "unknown row kind");
      l.kind = static_cast<ItemKind>(kind);
      l.p = r.get<std::uint16_t>();
    }
    if (static_cast<std::uint64_t>(n) * m * 4 > r.remaining()) fail(ErrorCode::kFormatError, "embedding file is truncated");
    f.vectors.resize(n, m);
    for (std::uint32_t i = 0; i < n; ++i) {
      for (std::uint32_t c = 0; c < m; ++c) {
        const float v = r.get<float>();
        if (!std::isfinite(v)) fail(ErrorCode::kFormatError, "embedding contains non-finite values");
        f.vectors(i, c) = v;
      }
    }
    validate_embedding(f);
    frames.push_back(std::move(f));
  }
  if (r.remaining() != 0) fail(ErrorCode::kFormatError, "trailing bytes after the last frame");
  return frames;
}

std::vector<EmbeddingMatrix> read_embedding_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_embeddings(bytes);
}

void write_embedding_file(const std::string& path, const std::vector<EmbeddingMatrix>& frames) {
  const auto bytes = encode_embeddings(frames);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path);
}

}  // namespace mapss
