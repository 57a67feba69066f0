// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fcache/coding.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "fcache/gf256.hpp"

namespace fcache {

namespace {

// dst[b] ^= c * src[b]
void mul_add(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src, std::uint8_t c) {
  if (c == 0) return;
  if (c == 1) {
    for (std::size_t b = 0; b < dst.size(); ++b) dst[b] ^= src[b];
    return;
  }
  std::array<std::uint8_t, 256> table{};
  for (unsigned v = 0; v < 256; ++v) table[v] = gf256::mul(static_cast<std::uint8_t>(v), c);
  for (std::size_t b = 0; b < dst.size(); ++b) dst[b] ^= table[src[b]];
}

}  // namespace

GeneratorMatrix::GeneratorMatrix(int n, int k, std::vector<std::uint8_t> coefficients)
    : n_(n), k_(k), coeff_(std::move(coefficients)) {
  if (k < 1 || n < 0) throw CodingError("generator needs k >= 1 and n >= 0");
  if (coeff_.size() != static_cast<std::size_t>((n + k) * k)) {
    throw CodingError("generator coefficient count does not match (n + k) * k");
  }
}

GeneratorMatrix make_generator(int n, int k) {
  if (k < 1 || n < 1) throw CodingError("make_generator: need n >= 1 and k >= 1");
  if (n + k > 256) {
    throw CodingError("make_generator: n + k = " + std::to_string(n + k) + " exceeds GF(256) capacity");
  }
  std::vector<std::uint8_t> coeff(static_cast<std::size_t>((n + k) * k), 0);
  for (int s = 0; s < k; ++s) coeff[static_cast<std::size_t>(s * k + s)] = 1;
  // Parity row r uses x_r = k + r against column points y_c = c; the two point
  // sets are disjoint so x_r + y_c is never zero.
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < k; ++c) {
      const auto x = static_cast<std::uint8_t>(k + r);
      const auto y = static_cast<std::uint8_t>(c);
      coeff[static_cast<std::size_t>((k + r) * k + c)] = gf256::inv(gf256::add(x, y));
    }
  }
  return GeneratorMatrix(n, k, std::move(coeff));
}

void set_cached_chunks(CodedFile& file, const GeneratorMatrix& generator, int cached) {
  const int n = generator.n();
  const int k = generator.k();
  if (cached < 0 || cached > k) throw CodingError("cached chunk count must lie in 0..k");
  file.roles.assign(static_cast<std::size_t>(n + k), ChunkRole::cache_reserve);
  for (int c = 0; c < n; ++c) file.roles[static_cast<std::size_t>(c)] = ChunkRole::server;
  for (int c = n; c < n + cached; ++c) file.roles[static_cast<std::size_t>(c)] = ChunkRole::cache_active;
}

CodedFile encode(std::span<const std::uint8_t> payload, const GeneratorMatrix& generator,
                 int cached, int file_id) {
  if (payload.empty()) throw CodingError("encode: empty file");
  const auto k = static_cast<std::size_t>(generator.k());
  const std::size_t chunk = (payload.size() + k - 1) / k;

  CodedFile out;
  out.file_id = file_id;
  out.original_size = payload.size();
  out.padding = chunk * k - payload.size();

  std::vector<Bytes> stripes(k, Bytes(chunk, 0));
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t begin = s * chunk;
    if (begin >= payload.size()) break;
    const std::size_t len = std::min(chunk, payload.size() - begin);
    std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(begin), len, stripes[s].begin());
  }

  out.chunks.assign(static_cast<std::size_t>(generator.rows()), Bytes(chunk, 0));
  for (int c = 0; c < generator.rows(); ++c) {
    for (std::size_t s = 0; s < k; ++s) {
      mul_add(out.chunks[static_cast<std::size_t>(c)], stripes[s], generator.at(c, static_cast<int>(s)));
    }
  }
  set_cached_chunks(out, generator, cached);
  return out;
}

std::vector<std::uint8_t> invert_rows(const GeneratorMatrix& generator, std::span<const int> rows) {
  const int k = generator.k();
  if (static_cast<int>(rows.size()) != k) throw CodingError("decode needs exactly k chunks");
  std::set<int> seen;
  for (int r : rows) {
    if (r < 0 || r >= generator.rows()) throw CodingError("chunk row index out of range");
    if (!seen.insert(r).second) throw CodingError("duplicate chunk row index " + std::to_string(r));
  }

  // Gauss-Jordan on [A | I].
  const auto uk = static_cast<std::size_t>(k);
  std::vector<std::uint8_t> a(uk * uk), inv(uk * uk, 0);
  for (std::size_t i = 0; i < uk; ++i) {
    auto src = generator.row(rows[i]);
    std::copy(src.begin(), src.end(), a.begin() + static_cast<std::ptrdiff_t>(i * uk));
    inv[i * uk + i] = 1;
  }
  for (std::size_t col = 0; col < uk; ++col) {
    std::size_t pivot = col;
    while (pivot < uk && a[pivot * uk + col] == 0) ++pivot;
    if (pivot == uk) throw CodingError("selected generator rows are singular");
    if (pivot != col) {
      for (std::size_t c = 0; c < uk; ++c) {
        std::swap(a[pivot * uk + c], a[col * uk + c]);
        std::swap(inv[pivot * uk + c], inv[col * uk + c]);
      }
    }
    const std::uint8_t scale = gf256::inv(a[col * uk + col]);
    for (std::size_t c = 0; c < uk; ++c) {
      a[col * uk + c] = gf256::mul(a[col * uk + c], scale);
      inv[col * uk + c] = gf256::mul(inv[col * uk + c], scale);
    }
    for (std::size_t r = 0; r < uk; ++r) {
      const std::uint8_t f = a[r * uk + col];
      if (r == col || f == 0) continue;
      for (std::size_t c = 0; c < uk; ++c) {
        a[r * uk + c] ^= gf256::mul(f, a[col * uk + c]);
        inv[r * uk + c] ^= gf256::mul(f, inv[col * uk + c]);
      }
    }
  }
  return inv;
}

Bytes decode(std::span<const IndexedChunk> chunks, const GeneratorMatrix& generator,
             std::size_t original_size) {
  const auto k = static_cast<std::size_t>(generator.k());
  if (chunks.size() != k) throw CodingError("decode needs exactly k chunks");
  const std::size_t len = chunks.front().payload.size();
  std::vector<int> rows;
  rows.reserve(k);
  for (const auto& c : chunks) {
    if (c.payload.size() != len) throw CodingError("chunk payload lengths differ");
    rows.push_back(c.row);
  }
  if (original_size > len * k) throw CodingError("original size exceeds decoded capacity");

  const auto inv = invert_rows(generator, rows);
  Bytes out(len * k, 0);
  for (std::size_t s = 0; s < k; ++s) {
    std::span<std::uint8_t> stripe(out.data() + s * len, len);
    for (std::size_t t = 0; t < k; ++t) mul_add(stripe, chunks[t].payload, inv[s * k + t]);
  }
  out.resize(original_size);
  return out;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    // r * (n - k + i) may overflow for huge inputs; saturate instead.
    const auto num = static_cast<std::uint64_t>(n - k + i);
    if (r > UINT64_MAX / num) return UINT64_MAX;
    r = r * num / static_cast<std::uint64_t>(i);
  }
  return r;
}

MdsReport verify_mds(const GeneratorMatrix& generator, std::uint64_t budget, std::uint64_t seed) {
  const int k = generator.k();
  const int total = generator.rows();
  std::mt19937_64 rng(seed);

  Bytes payload(static_cast<std::size_t>(k) * 16);
  for (auto& b : payload) b = static_cast<std::uint8_t>(rng() & 0xFF);
  const CodedFile coded = encode(payload, generator);

  MdsReport report;
  auto check = [&](std::span<const int> rows) {
    std::vector<IndexedChunk> chunks;
    chunks.reserve(rows.size());
    for (int r : rows) chunks.push_back({r, coded.chunks[static_cast<std::size_t>(r)]});
    ++report.subsets_checked;
    try {
      if (decode(chunks, generator, coded.original_size) != payload) ++report.failures;
    } catch (const CodingError&) {
      ++report.failures;
    }
  };

  const std::uint64_t subsets = binomial(total, k);
  std::vector<int> rows(static_cast<std::size_t>(k));
  if (subsets <= budget) {
    report.exhaustive = true;
    std::iota(rows.begin(), rows.end(), 0);
    while (true) {
      check(rows);
      int i = k - 1;
      while (i >= 0 && rows[static_cast<std::size_t>(i)] == total - k + i) --i;
      if (i < 0) break;
      ++rows[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) rows[static_cast<std::size_t>(j)] = rows[static_cast<std::size_t>(j - 1)] + 1;
    }
    return report;
  }

  std::vector<int> pool(static_cast<std::size_t>(total));
  for (std::uint64_t s = 0; s < budget; ++s) {
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<int> pick(i, total - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    std::copy_n(pool.begin(), k, rows.begin());
    check(rows);
  }
  return report;
}

}  // namespace fcache
