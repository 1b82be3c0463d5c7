#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "colt/checkpoint.hpp"
#include "colt/config.hpp"
#include "colt/csv.hpp"
#include "colt/error.hpp"
#include "colt/metrics.hpp"
#include "colt/prune.hpp"
#include "colt/rng.hpp"
#include "colt/svg_report.hpp"
#include "colt/ticket.hpp"

namespace fs = std::filesystem;
using namespace colt;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<double> target_sparsity;
  std::optional<int> rounds;
  std::optional<std::string> out_dir;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config = true) {
  auto* copt = cmd->add_option("--config", args.config_path, "experiment config file");
  if (needs_config) copt->required();
  cmd->add_option("--seed", args.seed, "override seeds (init=S, data=S+1, head=S+2)");
  cmd->add_option("--target-sparsity", args.target_sparsity, "override target sparsity %");
  cmd->add_option("--rounds", args.rounds, "override max pruning rounds");
  cmd->add_option("--out", args.out_dir, "override output directory");
  cmd->add_flag("--force", args.force, "overwrite existing outputs");
}

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig cfg = parse_config(args.config_path);
  if (args.seed) {
    cfg.seeds.init = *args.seed;
    cfg.seeds.data = *args.seed + 1;
    cfg.seeds.head = *args.seed + 2;
  }
  if (args.target_sparsity) cfg.target_sparsity = *args.target_sparsity;
  if (args.rounds) cfg.max_rounds = *args.rounds;
  if (args.out_dir) cfg.out_dir = *args.out_dir;
  return cfg;
}

std::string output_path(const ExperimentConfig& cfg, const std::string& file, bool force) {
  fs::create_directories(cfg.out_dir);
  const fs::path p = fs::path(cfg.out_dir) / file;
  if (fs::exists(p) && !force) {
    throw IoError("refusing to overwrite '" + p.string() + "' (use --force)");
  }
  return p.string();
}

int read_colt_threads() {
  const char* env = std::getenv("COLT_THREADS");
  if (!env || std::string(env).empty()) return 1;
  const std::string v(env);
  if (v == "1") return 1;
  if (v == "2") return 2;
  throw ConfigError("COLT_THREADS must be 1 or 2, got '" + v + "'");
}

TraceRow ticket_row(const Ticket& t, double accuracy, uint64_t seed) {
  TraceRow row;
  row.method = t.prov.method;
  row.round = t.prov.rounds;
  row.sparsity_all_pct = t.prov.sparsity_all;
  row.sparsity_eligible_pct = t.prov.sparsity_eligible;
  row.full_acc_pct = accuracy;
  row.seed = seed;
  return row;
}

int cmd_dense(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args);
  DataBundle data = cfg.load_data();
  ModelSpec spec = cfg.model;
  spec.num_classes = data.train.num_classes();
  spec.in_channels = data.train.channels;
  spec.in_height = data.train.height;
  spec.in_width = data.train.width;
  Model model = Model::build(spec, cfg.seeds.init);
  Mask ones = Mask::ones_like(model.params(), cfg.eligibility);
  const double val = train_masked(model, ones, data.train, cfg.training,
                                  mix_seed(cfg.seeds.data, 0xBA5Eu));
  const double acc = test_accuracy(model, data.test, cfg.training.batch_size);

  TraceRow row;
  row.method = "dense";
  row.round = 0;
  row.partition1_acc_pct = val;
  row.full_acc_pct = acc;
  row.seed = cfg.seeds.init;
  write_trace_csv({row}, output_path(cfg, "dense_trace.csv", args.force));
  save_params_checkpoint(model.params(), output_path(cfg, "dense.params", args.force));
  std::cout << "dense: test accuracy " << format_percent(acc) << "% (val "
            << format_percent(val) << "%)\n";
  return 0;
}

int cmd_run(const CommonArgs& args, bool is_colt) {
  ExperimentConfig cfg = load_config(args);
  DataBundle data = cfg.load_data();
  RunOptions opts;
  opts.log = &std::cout;
  opts.threads = is_colt ? read_colt_threads() : 1;
  opts.stop_on_accuracy = is_colt && cfg.stop_rule == "accuracy";

  const RunResult res =
      is_colt ? run_colt(data, cfg.model, cfg.colt_schedule(), cfg.seeds, cfg.training, opts)
              : run_lth(data, cfg.model, cfg.lth_schedule(), cfg.seeds, cfg.training, opts);

  const std::string method = is_colt ? "colt" : "lth";
  write_trace_csv(res.trace.rows, output_path(cfg, method + "_trace.csv", args.force));
  save_ticket_checkpoint(res.ticket, output_path(cfg, method + ".ticket", args.force));
  std::cout << method << ": " << res.ticket.prov.rounds << " rounds to "
            << format_percent(res.ticket.prov.sparsity_all) << "% sparsity (ticket universe)\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& ticket_path, bool is_transfer) {
  ExperimentConfig cfg = load_config(args);
  DataBundle data = cfg.load_data();
  Ticket t = load_ticket_checkpoint(ticket_path);
  const uint64_t data_seed = mix_seed(cfg.seeds.data, 0xE7A1u);
  if (is_transfer) {
    const TransferResult tr = transfer_ticket(t, data, cfg.training, cfg.seeds.head, data_seed);
    write_trace_csv({ticket_row(t, tr.accuracy_pct, cfg.seeds.init)},
                    output_path(cfg, "transfer_trace.csv", args.force));
    std::cout << "transfer " << tr.source_dataset << " -> " << tr.target_dataset
              << ": test accuracy " << format_percent(tr.accuracy_pct) << "% at "
              << format_percent(t.prov.sparsity_all) << "% sparsity\n";
  } else {
    const double acc = evaluate_ticket(t, data, cfg.training, cfg.seeds.head, data_seed);
    write_trace_csv({ticket_row(t, acc, cfg.seeds.init)},
                    output_path(cfg, "eval_trace.csv", args.force));
    std::cout << "eval (" << t.prov.method << " ticket): test accuracy "
              << format_percent(acc) << "% at " << format_percent(t.prov.sparsity_all)
              << "% sparsity\n";
  }
  return 0;
}

int cmd_similarity(const std::string& path_a, const std::string& path_b) {
  const Ticket a = load_ticket_checkpoint(path_a);
  const Ticket b = load_ticket_checkpoint(path_b);
  const double sim = mask_similarity_percent(a.mask, b.mask);
  std::cout << "ticket A (" << a.prov.method << "): sparsity "
            << format_percent(a.prov.sparsity_all) << "%\n";
  std::cout << "ticket B (" << b.prov.method << "): sparsity "
            << format_percent(b.prov.sparsity_all) << "%\n";
  if (std::abs(a.prov.sparsity_all - b.prov.sparsity_all) > 1.0) {
    std::cout << "note: sparsities differ by more than one point; similarity compares"
                 " tickets best at matched sparsity\n";
  }
  std::cout << "pruned-weight similarity: " << format_percent(sim) << "%\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& traces, const std::string& out_dir, bool force) {
  std::vector<TraceRow> rows;
  for (const auto& path : traces) {
    auto part = read_trace_csv(path);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  ExperimentConfig tmp;
  tmp.out_dir = out_dir;
  write_svg(render_accuracy_svg(rows), output_path(tmp, "report_accuracy.svg", force));
  write_svg(render_rounds_svg(rows), output_path(tmp, "report_rounds.svg", force));
  std::cout << "report: wrote report_accuracy.svg and report_rounds.svg to " << out_dir
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cyclic-overlap and iterative magnitude pruning workbench"};
  app.require_subcommand(1);

  CommonArgs dense_args, lth_args, colt_args, eval_args, transfer_args;
  std::string eval_ticket, transfer_ticket_path, sim_a, sim_b;
  std::vector<std::string> report_traces;
  std::string report_out = "out";
  bool report_force = false;

  add_common(app.add_subcommand("dense", "train the unpruned baseline"), dense_args);
  add_common(app.add_subcommand("lth", "iterative magnitude pruning ticket"), lth_args);
  add_common(app.add_subcommand("colt", "cyclic overlapping ticket"), colt_args);

  auto* eval_cmd = app.add_subcommand("eval", "retrain a ticket and report accuracy");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_option("--ticket", eval_ticket, "ticket checkpoint")->required();

  auto* transfer_cmd = app.add_subcommand("transfer", "retrain a ticket on another dataset");
  add_common(transfer_cmd, transfer_args);
  transfer_cmd->add_option("--ticket", transfer_ticket_path, "ticket checkpoint")->required();

  auto* sim_cmd = app.add_subcommand("similarity", "compare two ticket files");
  sim_cmd->add_option("ticket_a", sim_a, "first ticket")->required();
  sim_cmd->add_option("ticket_b", sim_b, "second ticket")->required();

  auto* report_cmd = app.add_subcommand("report", "render trace CSVs as SVG charts");
  report_cmd->add_option("--trace", report_traces, "trace CSV file(s)")->required();
  report_cmd->add_option("--out", report_out, "output directory");
  report_cmd->add_flag("--force", report_force, "overwrite existing outputs");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand("dense")) return cmd_dense(dense_args);
    if (app.got_subcommand("lth")) return cmd_run(lth_args, false);
    if (app.got_subcommand("colt")) return cmd_run(colt_args, true);
    if (app.got_subcommand("eval")) return cmd_eval(eval_args, eval_ticket, false);
    if (app.got_subcommand("transfer")) return cmd_eval(transfer_args, transfer_ticket_path, true);
    if (app.got_subcommand("similarity")) return cmd_similarity(sim_a, sim_b);
    if (app.got_subcommand("report")) return cmd_report(report_traces, report_out, report_force);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
