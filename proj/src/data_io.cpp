#include "snrb/data_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "snrb/error.hpp"

namespace snrb {

namespace {

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(Errc::io, "file not found: " + path.string());
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) fail(Errc::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes;
  std::uint8_t chunk[1 << 16];
  int got = 0;
  while ((got = gzread(f, chunk, sizeof chunk)) > 0) bytes.insert(bytes.end(), chunk, chunk + got);
  const bool bad = got < 0;
  gzclose(f);
  if (bad) fail(Errc::parse, "corrupt compressed stream in " + path.string());
  return bytes;
}

}  // namespace

void Dataset::validate() const {
  if (class_count < 2) fail(Errc::input, "dataset needs at least two classes");
  if (static_cast<std::size_t>(inputs.rows()) != labels.size()) fail(Errc::input, "input and label counts differ");
  for (int y : labels)
    if (y < 0 || y >= class_count) fail(Errc::input, "label out of range");
  if (!inputs.allFinite()) fail(Errc::input, "inputs must be finite");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.class_count = class_count;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.inputs.row(static_cast<Eigen::Index>(r)) = inputs.row(static_cast<Eigen::Index>(rows[r]));
    out.labels.push_back(labels[rows[r]]);
  }
  return out;
}

IdxArray read_idx(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = slurp(path);
  if (bytes.size() < 4) fail(Errc::parse, "truncated IDX header in " + path.string());
  if (bytes[0] != 0 || bytes[1] != 0 || bytes[2] != 0x08)
    fail(Errc::parse, "bad IDX magic in " + path.string() + " (only unsigned-byte payloads are supported)");
  const std::size_t rank = bytes[3];
  if (rank == 0) fail(Errc::parse, "IDX rank must be positive in " + path.string());
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header) fail(Errc::parse, "truncated IDX header in " + path.string());

  IdxArray out;
  std::size_t payload = 1;
  for (std::size_t d = 0; d < rank; ++d) {
    out.dims.push_back(read_be32(&bytes[4 + 4 * d]));
    payload *= out.dims.back();
  }
  if (bytes.size() - header < payload) fail(Errc::parse, "truncated IDX payload in " + path.string());
  if (bytes.size() - header > payload) fail(Errc::parse, "trailing bytes after IDX payload in " + path.string());
  out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return out;
}

void write_idx(const std::filesystem::path& path, const IdxArray& array, bool gzip) {
  std::size_t payload = 1;
  for (auto d : array.dims) payload *= d;
  if (array.dims.empty() || array.dims.size() > 255 || payload != array.data.size())
    fail(Errc::input, "IDX dimensions do not match payload size");

  std::vector<std::uint8_t> bytes = {0, 0, 0x08, static_cast<std::uint8_t>(array.dims.size())};
  for (auto d : array.dims) put_be32(bytes, d);
  bytes.insert(bytes.end(), array.data.begin(), array.data.end());

  if (gzip) {
    gzFile f = gzopen(path.string().c_str(), "wb9");
    if (f == nullptr) fail(Errc::io, "cannot write " + path.string());
    const int wrote = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
    if (wrote != static_cast<int>(bytes.size())) fail(Errc::io, "short write to " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io, "short write to " + path.string());
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const IdxArray img = read_idx(images);
  const IdxArray lab = read_idx(labels);
  if (img.dims.size() != 3) fail(Errc::parse, "image file must carry magic 0x00000803 (rank 3)");
  if (lab.dims.size() != 1) fail(Errc::parse, "label file must carry magic 0x00000801 (rank 1)");
  if (img.dims[0] != lab.dims[0]) fail(Errc::parse, "image and label counts differ");

  const std::size_t n = img.dims[0];
  const std::size_t features = std::size_t{img.dims[1]} * img.dims[2];
  Dataset ds;
  ds.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(features));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < features; ++c)
      ds.inputs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = img.data[r * features + c] / 255.0;
  ds.labels.assign(lab.data.begin(), lab.data.end());
  int top = 0;
  for (int y : ds.labels) top = std::max(top, y);
  ds.class_count = std::max(2, top + 1);
  return ds;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t v = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return v ^ (v >> 31);
}

Dataset synth_blobs(int class_count, int dim, int samples_per_class, double separation, std::uint64_t seed) {
  if (class_count < 2) fail(Errc::input, "synthetic blobs need at least two classes");
  if (dim < 1 || samples_per_class < 1) fail(Errc::input, "dimension and samples per class must be positive");
  if (!std::isfinite(separation) || !(separation > 0.0))
    fail(Errc::input, "blob separation must be positive (identical centers are not allowed)");

  std::mt19937_64 rng(mix_seed(seed, 0xb10b));
  const double half_width = 1.5 * separation * std::pow(static_cast<double>(class_count), 1.0 / dim);
  std::uniform_real_distribution<double> coord(-half_width, half_width);

  std::vector<Vector> centers;
  for (int restart = 0; restart < 100 && static_cast<int>(centers.size()) < class_count; ++restart) {
    centers.clear();
    for (int c = 0; c < class_count; ++c) {
      bool placed = false;
      for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        Vector cand(dim);
        for (int d = 0; d < dim; ++d) cand[d] = coord(rng);
        placed = std::all_of(centers.begin(), centers.end(),
                             [&](const Vector& o) { return (o - cand).norm() >= separation; });
        if (placed) centers.push_back(std::move(cand));
      }
      if (!placed) break;
    }
  }
  if (static_cast<int>(centers.size()) < class_count)
    fail(Errc::generation, "could not place blob centers at the requested separation");

  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset ds;
  ds.class_count = class_count;
  ds.inputs.resize(static_cast<Eigen::Index>(class_count) * samples_per_class, dim);
  for (int c = 0; c < class_count; ++c)
    for (int s = 0; s < samples_per_class; ++s) {
      const Eigen::Index r = static_cast<Eigen::Index>(c) * samples_per_class + s;
      for (int d = 0; d < dim; ++d) ds.inputs(r, d) = centers[c][d] + noise(rng);
      ds.labels.push_back(c);
    }
  return ds;
}

Split split_indices(std::size_t n, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) fail(Errc::input, "validation fraction must lie in (0, 1)");
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * val_fraction));
  if (n_val == 0 || n_val >= n) fail(Errc::input, "split leaves an empty train or validation set");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(seed, 0x5911));
  std::shuffle(perm.begin(), perm.end(), rng);
  Split s;
  s.val.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

BatchStream::BatchStream(std::vector<std::size_t> rows, std::size_t batch_size, std::uint64_t seed)
    : rows_(std::move(rows)), batch_size_(batch_size), seed_(seed) {
  if (rows_.empty()) fail(Errc::input, "batch stream over an empty row set");
  if (batch_size_ == 0) fail(Errc::input, "batch size must be positive");
}

std::vector<std::vector<std::size_t>> BatchStream::epoch(int index) const {
  std::vector<std::size_t> order = rows_;
  std::mt19937_64 rng(mix_seed(seed_, static_cast<std::uint64_t>(index)));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size_) {
    const std::size_t stop = std::min(order.size(), start + batch_size_);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

SplitBatches split_and_batch(const Dataset& ds, double val_fraction, std::size_t batch_size, std::uint64_t seed) {
  Split split = split_indices(ds.size(), val_fraction, seed);
  BatchStream stream(split.train, batch_size, mix_seed(seed, 0xba7c));
  return SplitBatches{std::move(split), std::move(stream)};
}

}  // namespace snrb
