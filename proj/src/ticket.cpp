#include "colt/ticket.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

#include "colt/autograd.hpp"
#include "colt/error.hpp"
#include "colt/metrics.hpp"
#include "colt/ops.hpp"
#include "colt/rng.hpp"

namespace colt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::vector<int64_t>> index_batches(const std::vector<int64_t>& pool,
                                                int batch_size, uint64_t seed, int epoch) {
  std::vector<int64_t> order = pool;
  Rng rng = make_rng(mix_seed(seed, 0x62617400u + static_cast<uint64_t>(epoch)));
  shuffle_vec(order, rng);
  std::vector<std::vector<int64_t>> out;
  for (size_t s = 0; s < order.size(); s += static_cast<size_t>(batch_size)) {
    const size_t e = std::min(order.size(), s + static_cast<size_t>(batch_size));
    out.emplace_back(order.begin() + static_cast<int64_t>(s), order.begin() + static_cast<int64_t>(e));
  }
  return out;
}

struct LossAcc {
  double loss = 0.0;
  double acc = 0.0;
};

LossAcc eval_subset(const Model& model, const Dataset& d, const std::vector<int64_t>& idx,
                    int batch_size) {
  double loss_sum = 0.0;
  int64_t correct = 0;
  for (size_t s = 0; s < idx.size(); s += static_cast<size_t>(batch_size)) {
    const size_t e = std::min(idx.size(), s + static_cast<size_t>(batch_size));
    std::vector<int64_t> chunk(idx.begin() + static_cast<int64_t>(s),
                               idx.begin() + static_cast<int64_t>(e));
    auto [x, y] = d.gather(chunk);
    Tensor logits = model.forward(x);
    loss_sum += static_cast<double>(softmax_cross_entropy(logits, y).data()[0]) *
                static_cast<double>(chunk.size());
    const int64_t k = logits.dim(1);
    for (size_t i = 0; i < chunk.size(); ++i) {
      const float* row = logits.data().data() + static_cast<int64_t>(i) * k;
      int best = 0;
      for (int64_t j = 1; j < k; ++j) {
        if (row[j] > row[best]) best = static_cast<int>(j);
      }
      if (best == y[i]) ++correct;
    }
  }
  LossAcc r;
  r.loss = loss_sum / static_cast<double>(idx.size());
  r.acc = 100.0 * static_cast<double>(correct) / static_cast<double>(idx.size());
  return r;
}

std::vector<std::vector<float>> snapshot_values(const ParameterSet& ps) {
  std::vector<std::vector<float>> out;
  for (const auto& it : ps.items()) {
    out.emplace_back(it.value.data().begin(), it.value.data().end());
  }
  return out;
}

void restore_values(ParameterSet& ps, const std::vector<std::vector<float>>& snap) {
  for (size_t i = 0; i < snap.size(); ++i) {
    std::copy(snap[i].begin(), snap[i].end(), ps.items()[i].value.data().begin());
  }
}

Ticket make_ticket(const Model& model, const Mask& non_head_mask, std::string method,
                   std::string dataset_id, int rounds, const PruneSchedule& schedule,
                   const Seeds& seeds, double val_fraction) {
  Ticket t;
  t.mask = non_head_mask;
  for (const auto& it : model.params().items()) {
    if (is_head_param(it.name)) continue;
    SnapshotTensor st;
    st.name = it.name;
    st.kind = it.kind;
    st.shape = it.value.shape();
    st.values = it.initial;
    t.theta0.push_back(std::move(st));
  }
  t.prov.method = std::move(method);
  t.prov.source_dataset = std::move(dataset_id);
  t.prov.rounds = rounds;
  t.prov.schedule = schedule;
  t.prov.seeds = seeds;
  t.prov.model = model.spec();
  t.prov.val_fraction = val_fraction;
  t.prov.sparsity_all = prune_rate_percent(t.mask, SparsityDenominator::all_params);
  t.prov.sparsity_eligible = prune_rate_percent(t.mask, SparsityDenominator::eligible_params);
  t.validate();
  return t;
}

void throw_on_collapse(const Mask& m, const std::string& method, int round) {
  auto rep = layer_collapse_report(m);
  if (rep.any_collapsed) {
    throw StateError(method + " round " + std::to_string(round) +
                     " produced a collapsed layer:\n" + rep.to_string());
  }
}

}  // namespace

void Ticket::validate() const {
  if (mask.entries().size() != theta0.size()) {
    throw AlignmentError("ticket mask covers " + std::to_string(mask.entries().size()) +
                         " tensors, snapshot has " + std::to_string(theta0.size()));
  }
  for (size_t i = 0; i < theta0.size(); ++i) {
    const auto& e = mask.entries()[i];
    const auto& s = theta0[i];
    if (e.name != s.name || e.bits != shape_numel(s.shape)) {
      throw AlignmentError("ticket mask entry '" + e.name + "' does not align with snapshot '" +
                           s.name + "'");
    }
    if (is_head_param(s.name)) {
      throw AlignmentError("ticket must not carry head tensor '" + s.name + "'");
    }
  }
  const double all = prune_rate_percent(mask, SparsityDenominator::all_params);
  const double elig = prune_rate_percent(mask, SparsityDenominator::eligible_params);
  if (std::abs(all - prov.sparsity_all) > 1e-9 || std::abs(elig - prov.sparsity_eligible) > 1e-9) {
    throw StateError("ticket recorded sparsity " + format_percent(prov.sparsity_all) +
                     " does not match recomputed " + format_percent(all));
  }
}

double train_masked(Model& model, const Mask& full_mask, const Dataset& train,
                    const TrainSettings& ts, uint64_t data_seed) {
  full_mask.check_aligned(model.params());
  apply_mask(model.params(), full_mask);

  std::vector<int64_t> all(static_cast<size_t>(train.size()));
  std::iota(all.begin(), all.end(), 0);
  Rng carve = make_rng(mix_seed(data_seed, 0x76616cu));
  shuffle_vec(all, carve);
  const int64_t n_val = static_cast<int64_t>(std::floor(ts.val_fraction *
                                                        static_cast<double>(train.size())));
  std::vector<int64_t> val(all.begin(), all.begin() + n_val);
  std::vector<int64_t> tr(all.begin() + n_val, all.end());
  if (tr.empty()) throw ConfigError("training split is empty after validation carve");

  LrSchedule sched;
  sched.base_lr = ts.base_lr;
  sched.warmup = ts.warmup;
  sched.steps_per_epoch =
      static_cast<int64_t>((tr.size() + static_cast<size_t>(ts.batch_size) - 1) /
                           static_cast<size_t>(ts.batch_size));
  sched.anneal_epochs = ts.anneal_epochs;
  sched.anneal_factor = ts.anneal_factor;
  OptimizerState opt_state(model.params(), ts.opt, sched);

  double best_loss = std::numeric_limits<double>::infinity();
  double best_acc = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<float>> best_weights;

  for (int epoch = 0; epoch < ts.epochs; ++epoch) {
    for (const auto& chunk : index_batches(tr, ts.batch_size, data_seed, epoch)) {
      model.params().zero_grads();
      TapeScope scope;
      auto [x, y] = train.gather(chunk);
      Tensor loss = softmax_cross_entropy(model.forward(x), y);
      scope.backward(loss);
      mask_gradients(model.params(), full_mask);
      optimizer_step(model.params(), opt_state);
      apply_mask(model.params(), full_mask);
    }
    if (!val.empty()) {
      const LossAcc va = eval_subset(model, train, val, ts.batch_size);
      if (va.loss < best_loss) {
        best_loss = va.loss;
        best_acc = va.acc;
        best_weights = snapshot_values(model.params());
      }
    }
  }

  if (!best_weights.empty()) {
    restore_values(model.params(), best_weights);
  } else if (!val.empty()) {
    best_acc = eval_subset(model, train, val, ts.batch_size).acc;  // epochs == 0
  }
  return best_acc;
}

std::vector<int> predict(const Model& model, const Dataset& d, int batch_size) {
  std::vector<int> preds;
  preds.reserve(static_cast<size_t>(d.size()));
  std::vector<int64_t> idx;
  for (int64_t s = 0; s < d.size(); s += batch_size) {
    idx.clear();
    for (int64_t i = s; i < std::min(d.size(), s + batch_size); ++i) idx.push_back(i);
    auto [x, y] = d.gather(idx);
    Tensor logits = model.forward(x);
    const int64_t k = logits.dim(1);
    for (size_t i = 0; i < idx.size(); ++i) {
      const float* row = logits.data().data() + static_cast<int64_t>(i) * k;
      int best = 0;
      for (int64_t j = 1; j < k; ++j) {
        if (row[j] > row[best]) best = static_cast<int>(j);
      }
      preds.push_back(best);
    }
  }
  return preds;
}

double test_accuracy(const Model& model, const Dataset& test, int batch_size) {
  return accuracy_percent(predict(model, test, batch_size), test.labels);
}

ColtStepResult colt_mask_step(ParameterSet& trained1, ParameterSet& trained2,
                              const Mask& current_non_head, double p) {
  ColtStepResult out;
  const Mask full1 = current_non_head.expand_for(trained1);
  const Mask full2 = current_non_head.expand_for(trained2);
  const PruneResult r1 = global_prune(trained1, full1, p);
  const PruneResult r2 = global_prune(trained2, full2, p);
  out.noop = r1.noop || r2.noop;
  out.pre_intersection_sparsity1 =
      prune_rate_percent(r1.mask, SparsityDenominator::eligible_params);
  out.pre_intersection_sparsity2 =
      prune_rate_percent(r2.mask, SparsityDenominator::eligible_params);
  out.merged = intersect(r1.mask.restrict_non_head(), r2.mask.restrict_non_head());
  rewind(trained1, out.merged.expand_for(trained1));
  rewind(trained2, out.merged.expand_for(trained2));
  return out;
}

RunResult run_lth(const DataBundle& data, const ModelSpec& spec, const PruneSchedule& schedule,
                  const Seeds& seeds, const TrainSettings& ts, const RunOptions& opts) {
  schedule.validate();
  ModelSpec ms = spec;
  ms.num_classes = data.train.num_classes();
  ms.in_channels = data.train.channels;
  ms.in_height = data.train.height;
  ms.in_width = data.train.width;
  Model model = Model::build(ms, seeds.init);
  Mask mask = Mask::ones_like(model.params(), schedule.eligibility);

  RunResult res;
  res.trace.method = "lth";
  int round = 0;
  while (prune_rate_percent(mask, SparsityDenominator::all_params) < schedule.target_sparsity &&
         round < schedule.max_rounds) {
    ++round;
    const auto t0 = Clock::now();
    rewind(model.params(), mask);
    const double val_acc = train_masked(model, mask, data.train, ts,
                                        mix_seed(seeds.data, static_cast<uint64_t>(round)));
    const PruneResult pr = global_prune(model.params(), mask, schedule.prune_fraction);
    if (pr.noop) {
      throw StateError("lth round " + std::to_string(round) +
                       ": pruning would remove zero weights (no-op round)");
    }
    mask = pr.mask;
    throw_on_collapse(mask, "lth", round);
    rewind(model.params(), mask);

    TraceRow row;
    row.method = "lth";
    row.round = round;
    row.sparsity_all_pct = prune_rate_percent(mask, SparsityDenominator::all_params);
    row.sparsity_eligible_pct = prune_rate_percent(mask, SparsityDenominator::eligible_params);
    row.partition1_acc_pct = val_acc;
    row.wall_s = seconds_since(t0);
    row.seed = seeds.init;
    res.trace.rows.push_back(row);
    res.round_masks.push_back(mask.restrict_non_head());
    if (opts.log) {
      *opts.log << "[lth] round " << round << ": sparsity "
                << format_percent(row.sparsity_all_pct) << "% (all) val acc "
                << format_percent(val_acc) << "%\n";
    }
  }

  res.ticket = make_ticket(model, mask.restrict_non_head(), "lth", data.train.id, round,
                           schedule, seeds, ts.val_fraction);
  return res;
}

RunResult run_colt(const DataBundle& data, const ModelSpec& spec, const PruneSchedule& schedule,
                   const Seeds& seeds, const TrainSettings& ts, const RunOptions& opts) {
  schedule.validate();
  if (opts.threads < 1 || opts.threads > 2) {
    throw ConfigError("colt supports 1 or 2 partition trainers, got " +
                      std::to_string(opts.threads));
  }
  PartitionPair pp = partition_by_class(data.train, seeds.data);

  auto make_part_model = [&](const Dataset& part) {
    ModelSpec ms = spec;
    ms.num_classes = part.num_classes();
    ms.in_channels = part.channels;
    ms.in_height = part.height;
    ms.in_width = part.width;
    return Model::build(ms, seeds.init);  // shared non-head draws, head drawn last
  };
  Model f1 = make_part_model(pp.first);
  Model f2 = make_part_model(pp.second);

  Mask mask = Mask::ones_like(f1.params(), schedule.eligibility).restrict_non_head();

  double baseline = opts.baseline_accuracy.value_or(std::numeric_limits<double>::quiet_NaN());
  if (opts.stop_on_accuracy && !std::isfinite(baseline)) {
    ModelSpec full = spec;
    full.num_classes = data.train.num_classes();
    full.in_channels = data.train.channels;
    full.in_height = data.train.height;
    full.in_width = data.train.width;
    Model dense = Model::build(full, seeds.init);
    Mask ones = Mask::ones_like(dense.params(), schedule.eligibility);
    train_masked(dense, ones, data.train, ts, mix_seed(seeds.data, 0xBA5Eu));
    baseline = test_accuracy(dense, data.test, ts.batch_size);
    if (opts.log) {
      *opts.log << "[colt] dense baseline accuracy " << format_percent(baseline) << "%\n";
    }
  }

  RunResult res;
  res.trace.method = "colt";
  int round = 0;
  while (true) {
    const Mask report = mask.expand_for(f1.params());
    if (prune_rate_percent(report, SparsityDenominator::all_params) >= schedule.target_sparsity ||
        round >= schedule.max_rounds) {
      break;
    }
    ++round;
    const auto t0 = Clock::now();
    rewind(f1.params(), mask.expand_for(f1.params()));
    rewind(f2.params(), mask.expand_for(f2.params()));

    const uint64_t seed1 = mix_seed(seeds.data, static_cast<uint64_t>(round) * 2);
    const uint64_t seed2 = mix_seed(seeds.data, static_cast<uint64_t>(round) * 2 + 1);
    double acc1 = 0.0, acc2 = 0.0;
    if (opts.threads == 2) {
      std::thread worker([&] {
        acc2 = train_masked(f2, mask.expand_for(f2.params()), pp.second, ts, seed2);
      });
      acc1 = train_masked(f1, mask.expand_for(f1.params()), pp.first, ts, seed1);
      worker.join();
    } else {
      acc1 = train_masked(f1, mask.expand_for(f1.params()), pp.first, ts, seed1);
      acc2 = train_masked(f2, mask.expand_for(f2.params()), pp.second, ts, seed2);
    }

    ColtStepResult step = colt_mask_step(f1.params(), f2.params(), mask,
                                         schedule.prune_fraction);
    if (step.noop) {
      throw StateError("colt round " + std::to_string(round) +
                       ": pruning would remove zero weights (no-op round)");
    }
    mask = step.merged;
    throw_on_collapse(mask, "colt", round);

    TraceRow row;
    row.method = "colt";
    row.round = round;
    const Mask merged_report = mask.expand_for(f1.params());
    row.sparsity_all_pct = prune_rate_percent(merged_report, SparsityDenominator::all_params);
    row.sparsity_eligible_pct =
        prune_rate_percent(merged_report, SparsityDenominator::eligible_params);
    row.partition1_acc_pct = acc1;
    row.partition2_acc_pct = acc2;
    row.seed = seeds.init;

    if (opts.stop_on_accuracy) {
      Ticket probe = make_ticket(f1, mask, "colt", data.train.id, round, schedule, seeds,
                                 ts.val_fraction);
      row.full_acc_pct = evaluate_ticket(probe, data, ts, seeds.head,
                                         mix_seed(seeds.data, 0xE0000u + static_cast<uint64_t>(round)));
    }
    row.wall_s = seconds_since(t0);
    res.trace.rows.push_back(row);
    res.round_masks.push_back(mask);
    if (opts.log) {
      *opts.log << "[colt] round " << round << ": m1 "
                << format_percent(step.pre_intersection_sparsity1) << "% m2 "
                << format_percent(step.pre_intersection_sparsity2) << "% merged "
                << format_percent(row.sparsity_eligible_pct) << "% (eligible), "
                << format_percent(row.sparsity_all_pct) << "% (all); val "
                << format_percent(acc1) << "% / " << format_percent(acc2) << "%\n";
    }
    if (opts.stop_on_accuracy && row.full_acc_pct && *row.full_acc_pct >= baseline) {
      break;
    }
  }

  res.ticket = make_ticket(f1, mask, "colt", data.train.id, round, schedule, seeds,
                           ts.val_fraction);
  return res;
}

Ticket RunResult::ticket_at_sparsity(double milestone_pct) const {
  if (round_masks.empty()) return ticket;
  size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < trace.rows.size(); ++i) {
    const double gap = std::abs(trace.rows[i].sparsity_all_pct - milestone_pct);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  Ticket t = ticket;
  t.mask = round_masks[best];
  t.prov.rounds = trace.rows[best].round;
  t.prov.sparsity_all = prune_rate_percent(t.mask, SparsityDenominator::all_params);
  t.prov.sparsity_eligible = prune_rate_percent(t.mask, SparsityDenominator::eligible_params);
  t.validate();
  return t;
}

double evaluate_ticket(const Ticket& ticket, const DataBundle& target, const TrainSettings& ts,
                       uint64_t head_seed, uint64_t data_seed) {
  ticket.validate();
  ModelSpec ms = ticket.prov.model;
  ms.num_classes = target.train.num_classes();
  ms.in_channels = target.train.channels;
  ms.in_height = target.train.height;
  ms.in_width = target.train.width;
  Model model = Model::build(ms, head_seed);

  for (const auto& st : ticket.theta0) {
    ParamTensor* pt = model.params().find(st.name);
    if (!pt) {
      throw TransferError("target model has no tensor '" + st.name + "'");
    }
    if (pt->value.shape() != st.shape) {
      throw TransferError("tensor '" + st.name + "' shape " + shape_str(st.shape) +
                          " does not fit target model " + shape_str(pt->value.shape()));
    }
    std::copy(st.values.begin(), st.values.end(), pt->value.data().begin());
    pt->initial = st.values;
  }
  model.replace_head(target.train.num_classes(), head_seed);

  const Mask full = ticket.mask.expand_for(model.params());
  train_masked(model, full, target.train, ts, data_seed);
  return test_accuracy(model, target.test, ts.batch_size);
}

TransferResult transfer_ticket(const Ticket& ticket, const DataBundle& target,
                               const TrainSettings& ts, uint64_t head_seed,
                               uint64_t data_seed) {
  TransferResult r;
  r.source_dataset = ticket.prov.source_dataset;
  r.target_dataset = target.train.id;
  r.accuracy_pct = evaluate_ticket(ticket, target, ts, head_seed, data_seed);
  return r;
}

Ticket make_random_ticket(const Ticket& source, uint64_t seed) {
  Ticket t = source;
  Rng rng = make_rng(mix_seed(seed, 0x72616e64u));
  for (auto& e : t.mask.entries()) {
    if (!e.eligible) continue;
    const int64_t kept = e.field.count_ones();
    std::vector<int64_t> idx(static_cast<size_t>(e.bits));
    std::iota(idx.begin(), idx.end(), 0);
    shuffle_vec(idx, rng);
    BitField fresh(e.bits, false);
    for (int64_t i = 0; i < kept; ++i) fresh.set(idx[static_cast<size_t>(i)], true);
    e.field = fresh;
  }
  t.prov.method = "random";
  t.prov.sparsity_all = prune_rate_percent(t.mask, SparsityDenominator::all_params);
  t.prov.sparsity_eligible = prune_rate_percent(t.mask, SparsityDenominator::eligible_params);
  t.validate();
  return t;
}

Ticket make_identity_ticket(const Model& model, const PruneSchedule& schedule,
                            const Seeds& seeds, const std::string& dataset_id) {
  const Mask ones = Mask::ones_like(model.params(), schedule.eligibility).restrict_non_head();
  return make_ticket(model, ones, "dense", dataset_id, 0, schedule, seeds, 0.10);
}

}  // namespace colt
