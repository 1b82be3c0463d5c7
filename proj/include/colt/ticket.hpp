#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "colt/dataset.hpp"
#include "colt/mask.hpp"
#include "colt/model.hpp"
#include "colt/optimizer.hpp"
#include "colt/prune.hpp"

namespace colt {

struct Seeds {
  uint64_t init = 1;  // weight initialization
  uint64_t data = 2;  // partitioning, shuffling, validation carve
  uint64_t head = 3;  // replacement head initialization
  bool operator==(const Seeds&) const = default;
};

struct TrainSettings {
  int epochs = 15;
  int batch_size = 64;
  double val_fraction = 0.10;  // carved from the train split for model selection
  OptimizerConfig opt;
  double base_lr = 1.2e-3;
  bool warmup = true;
  std::vector<int> anneal_epochs = {6, 9, 13};
  double anneal_factor = 5.0;
  bool operator==(const TrainSettings&) const = default;
};

struct SnapshotTensor {
  std::string name;
  ParamKind kind = ParamKind::conv;
  Shape shape;
  std::vector<float> values;
  bool operator==(const SnapshotTensor&) const = default;
};

struct TicketProvenance {
  std::string method;  // lth | colt | random | dense
  std::string source_dataset;
  int rounds = 0;
  PruneSchedule schedule;
  Seeds seeds;
  ModelSpec model;
  double val_fraction = 0.10;
  // Recorded over the ticket's own (non-head) universe.
  double sparsity_all = 0.0;
  double sparsity_eligible = 0.0;
  bool operator==(const TicketProvenance&) const = default;
};

/// The transferable pruning artifact: mask + initial weights for every
/// non-head tensor, plus how it was made.
struct Ticket {
  Mask mask;  // non-head tensors only
  std::vector<SnapshotTensor> theta0;
  TicketProvenance prov;

  void validate() const;  // alignment + recorded sparsity matches recomputed
  bool operator==(const Ticket&) const = default;
};

struct TraceRow {
  std::string method;
  int round = 0;
  double sparsity_all_pct = 0.0;
  double sparsity_eligible_pct = 0.0;
  std::optional<double> partition1_acc_pct;
  std::optional<double> partition2_acc_pct;
  std::optional<double> full_acc_pct;
  std::optional<double> similarity_pct;
  double wall_s = 0.0;
  uint64_t seed = 0;
};

struct TicketTrace {
  std::string method;
  std::vector<TraceRow> rows;
};

struct RunOptions {
  int threads = 1;  // 1 or 2 concurrent partition trainers (colt only)
  bool stop_on_accuracy = false;
  std::optional<double> baseline_accuracy;  // trained on demand when absent
  std::ostream* log = nullptr;
};

struct RunResult {
  Ticket ticket;  // at the final round
  TicketTrace trace;
  std::vector<Mask> round_masks;  // non-head mask after each round

  /// Ticket from the round whose all-params sparsity is nearest the
  /// requested percentage.
  Ticket ticket_at_sparsity(double milestone_pct) const;
};

// ---- training utilities ----------------------------------------------------

/// Trains in place under the mask (pruned gradients zeroed, mask re-applied
/// after every step), selecting the epoch with the lowest validation loss.
/// Returns that epoch's validation accuracy.
double train_masked(Model& model, const Mask& full_mask, const Dataset& train,
                    const TrainSettings& ts, uint64_t data_seed);

std::vector<int> predict(const Model& model, const Dataset& d, int batch_size);
double test_accuracy(const Model& model, const Dataset& test, int batch_size);

// ---- ticket generation -----------------------------------------------------

struct ColtStepResult {
  Mask merged;  // non-head universe
  bool noop = false;
  double pre_intersection_sparsity1 = 0.0;  // eligible denominator
  double pre_intersection_sparsity2 = 0.0;
};

/// One overlap step on two trained parameter sets sharing the non-head
/// structure: magnitude-prune each, intersect the masks, rewind both with
/// the shared result.
ColtStepResult colt_mask_step(ParameterSet& trained1, ParameterSet& trained2,
                              const Mask& current_non_head, double p);

RunResult run_lth(const DataBundle& data, const ModelSpec& spec, const PruneSchedule& schedule,
                  const Seeds& seeds, const TrainSettings& ts, const RunOptions& opts = {});

RunResult run_colt(const DataBundle& data, const ModelSpec& spec, const PruneSchedule& schedule,
                   const Seeds& seeds, const TrainSettings& ts, const RunOptions& opts = {});

// ---- ticket consumption ----------------------------------------------------

/// Rebuilds the model for the target dataset's class count, loads the
/// ticket's initial weights into the non-head tensors, swaps in a fresh
/// head, retrains under the mask and returns test accuracy.
double evaluate_ticket(const Ticket& ticket, const DataBundle& target, const TrainSettings& ts,
                       uint64_t head_seed, uint64_t data_seed);

/// evaluate_ticket across datasets; returns accuracy and leaves a
/// source->target note on the provenance copy it returns.
struct TransferResult {
  double accuracy_pct = 0.0;
  std::string source_dataset;
  std::string target_dataset;
};
TransferResult transfer_ticket(const Ticket& ticket, const DataBundle& target,
                               const TrainSettings& ts, uint64_t head_seed, uint64_t data_seed);

/// Control ticket: kept bits shuffled uniformly within each eligible tensor,
/// preserving per-tensor counts (hence global sparsity).
Ticket make_random_ticket(const Ticket& source, uint64_t seed);

/// All-ones ticket over a model's non-head tensors (a dense "identity").
Ticket make_identity_ticket(const Model& model, const PruneSchedule& schedule,
                            const Seeds& seeds, const std::string& dataset_id);

}  // namespace colt
