#include "colt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>

#include "colt/error.hpp"
#include "colt/rng.hpp"

namespace colt {

void Dataset::validate() const {
  if (static_cast<int64_t>(images.size()) != size() * image_elems()) {
    throw DataError("dataset '" + id + "': image buffer does not match " +
                    std::to_string(size()) + " instances");
  }
  for (int l : labels) {
    if (!std::binary_search(class_ids.begin(), class_ids.end(), l)) {
      throw DataError("dataset '" + id + "': label " + std::to_string(l) +
                      " outside the class set");
    }
  }
}

std::pair<Tensor, std::vector<int>> Dataset::gather(const std::vector<int64_t>& indices) const {
  const int64_t elems = image_elems();
  std::vector<float> buf(static_cast<size_t>(indices.size()) * static_cast<size_t>(elems));
  std::vector<int> lab(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) {
    const int64_t src = indices[i] * elems;
    std::copy(images.begin() + src, images.begin() + src + elems,
              buf.begin() + static_cast<int64_t>(i) * elems);
    lab[i] = labels[static_cast<size_t>(indices[i])];
  }
  Tensor x = Tensor::from_vector({static_cast<int64_t>(indices.size()), channels, height, width},
                                 std::move(buf));
  return {std::move(x), std::move(lab)};
}

PartitionPair partition_by_class(const Dataset& d, uint64_t seed) {
  if (d.num_classes() < 2) {
    throw ConfigError("partition_by_class needs >= 2 classes, dataset '" + d.id + "' has " +
                      std::to_string(d.num_classes()));
  }
  std::vector<int> order = d.class_ids;
  Rng rng = make_rng(mix_seed(seed, 0x70617274));
  shuffle_vec(order, rng);
  const size_t half = (order.size() + 1) / 2;

  PartitionPair pp;
  pp.classes_first.assign(order.begin(), order.begin() + static_cast<int64_t>(half));
  pp.classes_second.assign(order.begin() + static_cast<int64_t>(half), order.end());
  std::sort(pp.classes_first.begin(), pp.classes_first.end());
  std::sort(pp.classes_second.begin(), pp.classes_second.end());
  for (size_t i = 0; i < pp.classes_first.size(); ++i) {
    pp.remap_first[pp.classes_first[i]] = static_cast<int>(i);
  }
  for (size_t i = 0; i < pp.classes_second.size(); ++i) {
    pp.remap_second[pp.classes_second[i]] = static_cast<int>(i);
  }

  auto build = [&](const std::map<int, int>& remap, const char* suffix) {
    Dataset out;
    out.id = d.id + suffix;
    out.split = d.split;
    out.channels = d.channels;
    out.height = d.height;
    out.width = d.width;
    const int64_t elems = d.image_elems();
    for (int64_t i = 0; i < d.size(); ++i) {
      auto it = remap.find(d.labels[static_cast<size_t>(i)]);
      if (it == remap.end()) continue;
      out.labels.push_back(it->second);
      out.images.insert(out.images.end(), d.images.begin() + i * elems,
                        d.images.begin() + (i + 1) * elems);
    }
    for (size_t i = 0; i < remap.size(); ++i) out.class_ids.push_back(static_cast<int>(i));
    return out;
  };
  pp.first = build(pp.remap_first, "-p1");
  pp.second = build(pp.remap_second, "-p2");
  return pp;
}

DataBundle synthetic_blobs(int num_classes, int per_class, int channels, int height,
                           int width, uint64_t seed, double separation) {
  if (num_classes < 2) throw ConfigError("synthetic_blobs needs >= 2 classes");
  if (per_class < 2) throw ConfigError("synthetic_blobs needs >= 2 instances per class");
  const int64_t elems = static_cast<int64_t>(channels) * height * width;
  if (num_classes > elems) {
    throw ConfigError("synthetic_blobs: " + std::to_string(num_classes) +
                      " classes exceed image dimension " + std::to_string(elems));
  }
  const float sigma = 0.08f;

  // Class means: smooth random bump patterns, Gram-Schmidt orthonormalized so
  // every pair of class means sits exactly 2 * separation * sigma apart.
  Rng rng = make_rng(mix_seed(seed, 0x626c6f62));
  std::vector<std::vector<double>> basis;
  std::vector<std::vector<float>> means(static_cast<size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    std::vector<double> pattern(static_cast<size_t>(elems));
    double residual = 0.0;
    do {
      std::fill(pattern.begin(), pattern.end(), 0.0);
      for (int ch = 0; ch < channels; ++ch) {
        for (int bump = 0; bump < 2; ++bump) {
          const float cy = uniform_float(rng, 0.2f, 0.8f) * static_cast<float>(height);
          const float cx = uniform_float(rng, 0.2f, 0.8f) * static_cast<float>(width);
          const float bw = uniform_float(rng, 0.15f, 0.30f) *
                           static_cast<float>(std::min(height, width));
          const float amp = (rng() & 1) ? 1.0f : -1.0f;
          for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
              const float dy = (static_cast<float>(y) - cy) / bw;
              const float dx = (static_cast<float>(x) - cx) / bw;
              pattern[static_cast<size_t>((ch * height + y) * width + x)] +=
                  amp * std::exp(-0.5f * (dy * dy + dx * dx));
            }
          }
        }
      }
      double norm = 0.0;
      for (double v : pattern) norm += v * v;
      norm = std::sqrt(norm);
      for (double& v : pattern) v /= std::max(norm, 1e-12);
      for (const auto& u : basis) {
        double dot = 0.0;
        for (int64_t e = 0; e < elems; ++e) dot += pattern[static_cast<size_t>(e)] * u[static_cast<size_t>(e)];
        for (int64_t e = 0; e < elems; ++e) pattern[static_cast<size_t>(e)] -= dot * u[static_cast<size_t>(e)];
      }
      residual = 0.0;
      for (double v : pattern) residual += v * v;
      residual = std::sqrt(residual);
    } while (residual < 0.05);  // redraw nearly dependent patterns

    for (double& v : pattern) v /= residual;
    const double scale = separation * std::sqrt(2.0) * sigma;
    std::vector<float> mean(static_cast<size_t>(elems));
    for (int64_t e = 0; e < elems; ++e) {
      mean[static_cast<size_t>(e)] =
          0.5f + static_cast<float>(scale * pattern[static_cast<size_t>(e)]);
    }
    means[static_cast<size_t>(c)] = std::move(mean);
    basis.push_back(std::move(pattern));
  }

  const int n_train = (per_class * 8) / 10;
  Dataset train, test;
  for (Dataset* d : {&train, &test}) {
    d->channels = channels;
    d->height = height;
    d->width = width;
    d->id = "blobs-k" + std::to_string(num_classes) + "-" + std::to_string(height) + "x" +
            std::to_string(width);
    for (int c = 0; c < num_classes; ++c) d->class_ids.push_back(c);
  }
  train.split = SplitTag::train;
  test.split = SplitTag::test;
  test.id = train.id;

  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      Dataset& dst = i < n_train ? train : test;
      dst.labels.push_back(c);
      const auto& mu = means[static_cast<size_t>(c)];
      for (int64_t e = 0; e < elems; ++e) {
        const float v = mu[static_cast<size_t>(e)] + normal_float(rng, 0.0f, sigma);
        dst.images.push_back(std::clamp(v, 0.0f, 1.0f));
      }
    }
  }
  return {std::move(train), std::move(test)};
}

namespace {

uint32_t read_be32(const std::vector<uint8_t>& buf, size_t off) {
  return (static_cast<uint32_t>(buf[off]) << 24) | (static_cast<uint32_t>(buf[off + 1]) << 16) |
         (static_cast<uint32_t>(buf[off + 2]) << 8) | static_cast<uint32_t>(buf[off + 3]);
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open '" + path + "'");
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(f),
                              std::istreambuf_iterator<char>());
}

char hex_digit(uint32_t v) { return "0123456789abcdef"[v & 0xF]; }

std::string hex32(uint32_t v) {
  std::string s = "0x";
  for (int i = 7; i >= 0; --i) s += hex_digit(v >> (4 * i));
  return s;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto ibuf = read_file(images_path);
  if (ibuf.size() < 16) throw ParseError("truncated IDX image file '" + images_path + "'");
  const uint32_t imagic = read_be32(ibuf, 0);
  if (imagic != 0x00000803u) {
    throw ParseError("bad magic " + hex32(imagic) + " in IDX image file '" + images_path + "'");
  }
  const uint32_t n = read_be32(ibuf, 4);
  const uint32_t rows = read_be32(ibuf, 8);
  const uint32_t cols = read_be32(ibuf, 12);
  const size_t expect = 16 + static_cast<size_t>(n) * rows * cols;
  if (ibuf.size() < expect) {
    throw ParseError("truncated IDX image file '" + images_path + "': need " +
                     std::to_string(expect) + " bytes, have " + std::to_string(ibuf.size()));
  }

  const auto lbuf = read_file(labels_path);
  if (lbuf.size() < 8) throw ParseError("truncated IDX label file '" + labels_path + "'");
  const uint32_t lmagic = read_be32(lbuf, 0);
  if (lmagic != 0x00000801u) {
    throw ParseError("bad magic " + hex32(lmagic) + " in IDX label file '" + labels_path + "'");
  }
  const uint32_t ln = read_be32(lbuf, 4);
  if (lbuf.size() < 8 + static_cast<size_t>(ln)) {
    throw ParseError("truncated IDX label file '" + labels_path + "'");
  }
  if (ln != n) {
    throw ParseError("image/label count mismatch: " + std::to_string(n) + " images vs " +
                     std::to_string(ln) + " labels");
  }

  Dataset d;
  d.id = "idx";
  d.channels = 1;
  d.height = static_cast<int>(rows);
  d.width = static_cast<int>(cols);
  d.images.reserve(static_cast<size_t>(n) * rows * cols);
  for (size_t i = 16; i < expect; ++i) {
    d.images.push_back(static_cast<float>(ibuf[i]) / 255.0f);
  }
  std::set<int> classes;
  for (uint32_t i = 0; i < ln; ++i) {
    d.labels.push_back(static_cast<int>(lbuf[8 + i]));
    classes.insert(static_cast<int>(lbuf[8 + i]));
  }
  d.class_ids.assign(classes.begin(), classes.end());
  d.validate();
  return d;
}

std::vector<std::vector<int64_t>> batches(const Dataset& d, int batch_size, uint64_t seed,
                                          int epoch) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  std::vector<int64_t> order(static_cast<size_t>(d.size()));
  for (int64_t i = 0; i < d.size(); ++i) order[static_cast<size_t>(i)] = i;
  Rng rng = make_rng(mix_seed(seed, 0x65706f00u + static_cast<uint64_t>(epoch)));
  shuffle_vec(order, rng);

  std::vector<std::vector<int64_t>> out;
  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
    out.emplace_back(order.begin() + static_cast<int64_t>(start),
                     order.begin() + static_cast<int64_t>(end));
  }
  return out;
}

}  // namespace colt
