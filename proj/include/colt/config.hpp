#pragma once

#include <string>

#include "colt/dataset.hpp"
#include "colt/model.hpp"
#include "colt/prune.hpp"
#include "colt/ticket.hpp"

namespace colt {

struct DatasetConfig {
  std::string kind = "blobs";  // blobs | idx
  int classes = 8;
  int per_class = 100;
  int channels = 3;
  int height = 16;
  int width = 16;
  double separation = 3.0;
  std::string idx_train_images;
  std::string idx_train_labels;
  std::string idx_test_images;
  std::string idx_test_labels;
  bool operator==(const DatasetConfig&) const = default;
};

/// Flat `section.key = value` experiment file with `#` comments. Every field
/// has a default; parse_config validates ranges and rejects unknown keys.
struct ExperimentConfig {
  std::string name = "experiment";
  ModelSpec model;
  DatasetConfig dataset;

  double p_lth = 0.20;
  double p_colt = 0.15;
  double target_sparsity = 89.0;
  int max_rounds = 30;
  EligibilityRule eligibility = EligibilityRule::conv_only;
  std::string stop_rule = "sparsity";  // sparsity | accuracy

  TrainSettings training;
  Seeds seeds;
  std::string out_dir = "out";

  PruneSchedule lth_schedule() const;
  PruneSchedule colt_schedule() const;
  DataBundle load_data() const;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace colt
