// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace fcache {

using Bytes = std::vector<std::uint8_t>;

class CodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Generator of the (n+k, k) code that backs functional caching. Rows 0..k-1
/// are the identity; the remaining n rows form a Cauchy matrix, so any k rows
/// are linearly independent. Chunks 0..n-1 live on servers and n..n+k-1 are
/// the cache chunks, activated in order as d grows.
class GeneratorMatrix {
 public:
  GeneratorMatrix(int n, int k, std::vector<std::uint8_t> coefficients);

  int n() const { return n_; }
  int k() const { return k_; }
  int rows() const { return n_ + k_; }

  std::uint8_t at(int row, int col) const { return coeff_[static_cast<std::size_t>(row * k_ + col)]; }
  std::span<const std::uint8_t> row(int r) const {
    return {coeff_.data() + static_cast<std::size_t>(r) * k_, static_cast<std::size_t>(k_)};
  }
  void set(int row, int col, std::uint8_t v) { coeff_[static_cast<std::size_t>(row * k_ + col)] = v; }

 private:
  int n_;
  int k_;
  std::vector<std::uint8_t> coeff_;
};

GeneratorMatrix make_generator(int n, int k);

enum class ChunkRole { server, cache_active, cache_reserve };

struct CodedFile {
  int file_id = 0;
  std::size_t original_size = 0;
  std::size_t padding = 0;  // zero bytes appended to reach a multiple of k
  std::vector<Bytes> chunks;  // n + k payloads of equal length
  std::vector<ChunkRole> roles;

  std::size_t chunk_size() const { return chunks.empty() ? 0 : chunks.front().size(); }
};

/// Encodes `payload` into n + k chunks. `cached` chunks (d) are labelled
/// cache-active; the rest of the cache range is cache-reserve.
CodedFile encode(std::span<const std::uint8_t> payload, const GeneratorMatrix& generator,
                 int cached = 0, int file_id = 0);

/// Relabels cache roles for a new d without touching any payload.
void set_cached_chunks(CodedFile& file, const GeneratorMatrix& generator, int cached);

struct IndexedChunk {
  int row = 0;
  std::span<const std::uint8_t> payload;
};

/// Reconstructs the original (unpadded) payload from exactly k chunks.
Bytes decode(std::span<const IndexedChunk> chunks, const GeneratorMatrix& generator,
             std::size_t original_size);

/// Inverts the k x k submatrix formed by `rows`; throws CodingError if singular.
std::vector<std::uint8_t> invert_rows(const GeneratorMatrix& generator, std::span<const int> rows);

struct MdsReport {
  std::uint64_t subsets_checked = 0;
  std::uint64_t failures = 0;
  bool exhaustive = false;
};

/// Decodes a random payload from every k-subset of rows, or from `budget`
/// uniformly sampled subsets when C(n+k, k) exceeds the budget.
MdsReport verify_mds(const GeneratorMatrix& generator, std::uint64_t budget = 1'000'000,
                     std::uint64_t seed = 1);

std::uint64_t binomial(int n, int k);

}  // namespace fcache
