#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "colt/tensor.hpp"

namespace colt {

enum class SplitTag { train, test };

/// Images are N x C x H x W floats in [0,1]; labels index into class_ids.
struct Dataset {
  std::string id;
  SplitTag split = SplitTag::train;
  int channels = 1;
  int height = 0;
  int width = 0;
  std::vector<float> images;
  std::vector<int> labels;
  std::vector<int> class_ids;  // sorted distinct label universe

  int64_t size() const { return static_cast<int64_t>(labels.size()); }
  int64_t image_elems() const {
    return static_cast<int64_t>(channels) * height * width;
  }
  int num_classes() const { return static_cast<int>(class_ids.size()); }

  void validate() const;  // throws DataError

  /// Materializes the rows at `indices` as ([n,C,H,W] tensor, labels).
  std::pair<Tensor, std::vector<int>> gather(const std::vector<int64_t>& indices) const;
};

struct DataBundle {
  Dataset train;
  Dataset test;
};

struct PartitionPair {
  Dataset first;
  Dataset second;
  std::vector<int> classes_first;   // original class ids, ascending
  std::vector<int> classes_second;
  std::map<int, int> remap_first;   // original id -> contiguous 0..k-1
  std::map<int, int> remap_second;
};

/// Splits by class label into two disjoint halves covering every instance.
/// Classes are shuffled by `seed`, the first ceil(n/2) go to the first half,
/// and labels are remapped contiguously per half.
PartitionPair partition_by_class(const Dataset& d, uint64_t seed);

/// Gaussian class clusters rendered as C x H x W images: each class gets a
/// smooth random bump pattern as its mean, samples add pixel noise of std
/// sigma, and `separation` is the between-means distance in units of
/// 2*sigma. 80/20 train/test split, deterministic per seed.
DataBundle synthetic_blobs(int num_classes, int per_class, int channels, int height,
                           int width, uint64_t seed, double separation = 3.0);

/// Parses the big-endian IDX pair (magic 0x00000803 images, 0x00000801
/// labels); pixel bytes are scaled by 1/255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Epoch-dependent deterministic shuffle, chunked; the final partial batch
/// is included.
std::vector<std::vector<int64_t>> batches(const Dataset& d, int batch_size, uint64_t seed,
                                          int epoch);

}  // namespace colt
