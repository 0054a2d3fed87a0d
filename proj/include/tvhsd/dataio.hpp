#pragma once

// Embedding dataset container, on-disk format, k-fold splitting and the
// synthetic generator.
//
// Directory layout:
//   manifest.json   DatasetManifest fields, nothing else
//   embeddings.bin  per sample: text_dim then image_dim little-endian f32
//   labels.csv      header "id,label,token_count", same order as the blob

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tvhsd::dataio {

struct DatasetManifest {
  int version = 1;
  std::size_t num_samples = 0;
  std::size_t text_dim = 768;
  std::size_t image_dim = 512;
  std::size_t num_classes = 2;
  std::vector<std::string> label_names;
  std::string dtype = "f32";
  std::string endianness = "little";

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct SampleRecord {
  std::string id;
  std::vector<double> text_emb;
  std::vector<double> image_emb;
  int label = 0;
  int token_count = 0;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<SampleRecord> samples;

  std::size_t size() const noexcept { return samples.size(); }

  // Throws ValidationError on any broken invariant (dims, label range,
  // duplicate or unrepresentable ids, manifest consistency).
  void validate() const;

  // Samples at the given indices, in that order, with a matching manifest.
  Dataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

void save(const Dataset& dataset, const std::filesystem::path& directory);
Dataset load(const std::filesystem::path& directory);

struct FoldSplit {
  std::size_t fold_index = 0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;

  friend bool operator==(const FoldSplit&, const FoldSplit&) = default;
};

// Stratified k-fold: each class is shuffled with the seed, then dealt
// round-robin across folds with one cursor shared by all classes, so fold
// sizes and per-class counts each differ by at most one.
std::vector<FoldSplit> split_kfold(const Dataset& dataset, std::size_t k,
                                   std::uint64_t seed);

struct SyntheticSpec {
  std::size_t num_samples = 1000;
  std::size_t text_dim = 768;
  std::size_t image_dim = 512;
  std::size_t num_classes = 2;
  double separation = 3.0;   // pairwise distance between class means, sigma units
  double length_noise = 0.0; // noise std multiplier (1 + length_noise * tokens / 60)
  std::uint64_t seed = 0;
};

// Balanced labels (sample i has label i mod K). Class means sit on scaled
// coordinate axes so every pair is `separation` apart in both modalities.
// Values are rounded to binary32 so the dataset survives save/load exactly.
Dataset gen_synthetic(const SyntheticSpec& spec);

inline constexpr int kMinTokens = 3;
inline constexpr int kMaxTokens = 60;

}  // namespace tvhsd::dataio
