#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "snrb/matrix.hpp"

namespace snrb {

struct Dataset {
  Matrix inputs;            // samples x features
  std::vector<int> labels;  // one per row, in [0, class_count)
  int class_count = 0;

  std::size_t size() const noexcept { return labels.size(); }
  void validate() const;
  Dataset subset(std::span<const std::size_t> rows) const;
};

/// Raw IDX container: unsigned-byte payload with big-endian dimensions.
struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Reads an unsigned-byte IDX file; gzip-compressed files are inflated transparently.
IdxArray read_idx(const std::filesystem::path& path);

/// Writes an unsigned-byte IDX file, gzip-compressed when `gzip` is set.
void write_idx(const std::filesystem::path& path, const IdxArray& array, bool gzip = false);

/// Rank-3 image file plus rank-1 label file; pixels are scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Gaussian clusters with unit variance around seeded centers whose pairwise
/// distance is at least `separation`.
Dataset synth_blobs(int class_count, int dim, int samples_per_class, double separation, std::uint64_t seed);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Seeded shuffle of [0, n) cut into a validation share of round(n * val_fraction).
Split split_indices(std::size_t n, double val_fraction, std::uint64_t seed);

/// Per-epoch reshuffled mini-batches over a fixed set of row indices.
class BatchStream {
 public:
  BatchStream(std::vector<std::size_t> rows, std::size_t batch_size, std::uint64_t seed);

  std::vector<std::vector<std::size_t>> epoch(int index) const;
  std::size_t batch_size() const noexcept { return batch_size_; }
  std::size_t rows() const noexcept { return rows_.size(); }

 private:
  std::vector<std::size_t> rows_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

struct SplitBatches {
  Split split;
  BatchStream train_batches;
};

SplitBatches split_and_batch(const Dataset& ds, double val_fraction, std::size_t batch_size, std::uint64_t seed);

/// Deterministic 64-bit mixing used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace snrb
