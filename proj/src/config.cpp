#include "colt/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "colt/error.hpp"

namespace colt {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected integer, got '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected unsigned integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected on/off, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

void apply_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  auto& t = c.training;
  if (key == "experiment.name") c.name = value;
  else if (key == "model.arch") c.model.arch = arch_from_name(value);
  else if (key == "model.channels") c.model.channels = parse_int_list(key, value);
  else if (key == "model.hidden") c.model.hidden = parse_int_list(key, value);
  else if (key == "model.norm") {
    if (value == "none") c.model.norm = NormMode::none;
    else if (value == "per-batch") c.model.norm = NormMode::per_batch;
    else throw ConfigError("key 'model.norm': expected none or per-batch, got '" + value + "'");
  }
  else if (key == "dataset.kind") {
    if (value != "blobs" && value != "idx") {
      throw ConfigError("key 'dataset.kind': expected blobs or idx, got '" + value + "'");
    }
    c.dataset.kind = value;
  }
  else if (key == "dataset.classes") c.dataset.classes = parse_int(key, value);
  else if (key == "dataset.per_class") c.dataset.per_class = parse_int(key, value);
  else if (key == "dataset.shape") {
    auto dims = parse_int_list(key, value);
    if (dims.size() != 3) throw ConfigError("key 'dataset.shape': expected C,H,W");
    c.dataset.channels = dims[0];
    c.dataset.height = dims[1];
    c.dataset.width = dims[2];
  }
  else if (key == "dataset.separation") c.dataset.separation = parse_double(key, value);
  else if (key == "dataset.idx_train_images") c.dataset.idx_train_images = value;
  else if (key == "dataset.idx_train_labels") c.dataset.idx_train_labels = value;
  else if (key == "dataset.idx_test_images") c.dataset.idx_test_images = value;
  else if (key == "dataset.idx_test_labels") c.dataset.idx_test_labels = value;
  else if (key == "schedule.p_lth") c.p_lth = parse_double(key, value);
  else if (key == "schedule.p_colt") c.p_colt = parse_double(key, value);
  else if (key == "schedule.target_sparsity") c.target_sparsity = parse_double(key, value);
  else if (key == "schedule.max_rounds") c.max_rounds = parse_int(key, value);
  else if (key == "schedule.eligibility") {
    if (value == "conv-only") c.eligibility = EligibilityRule::conv_only;
    else if (value == "all-weights") c.eligibility = EligibilityRule::all_weights;
    else throw ConfigError("key 'schedule.eligibility': expected conv-only or all-weights");
  }
  else if (key == "schedule.stop_rule") {
    if (value != "sparsity" && value != "accuracy") {
      throw ConfigError("key 'schedule.stop_rule': expected sparsity or accuracy");
    }
    c.stop_rule = value;
  }
  else if (key == "training.epochs") t.epochs = parse_int(key, value);
  else if (key == "training.batch") t.batch_size = parse_int(key, value);
  else if (key == "training.lr") t.base_lr = parse_double(key, value);
  else if (key == "training.warmup") t.warmup = parse_bool(key, value);
  else if (key == "training.anneal_epochs") t.anneal_epochs = parse_int_list(key, value);
  else if (key == "training.anneal_factor") t.anneal_factor = parse_double(key, value);
  else if (key == "training.val_fraction") t.val_fraction = parse_double(key, value);
  else if (key == "training.optimizer") {
    if (value == "adam") t.opt.kind = OptimizerKind::adam;
    else if (value == "sgd") t.opt.kind = OptimizerKind::sgd;
    else throw ConfigError("key 'training.optimizer': expected adam or sgd");
  }
  else if (key == "training.momentum") t.opt.momentum = parse_double(key, value);
  else if (key == "training.beta1") t.opt.beta1 = parse_double(key, value);
  else if (key == "training.beta2") t.opt.beta2 = parse_double(key, value);
  else if (key == "training.eps") t.opt.eps = parse_double(key, value);
  else if (key == "training.weight_decay") t.opt.weight_decay = parse_double(key, value);
  else if (key == "seeds.init") c.seeds.init = parse_u64(key, value);
  else if (key == "seeds.data") c.seeds.data = parse_u64(key, value);
  else if (key == "seeds.head") c.seeds.head = parse_u64(key, value);
  else if (key == "output.dir") c.out_dir = value;
  else throw ConfigError("unknown key '" + key + "'");
}

void check_range(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("key '" + key + "': " + what);
}

void validate(const ExperimentConfig& c) {
  check_range(c.p_lth > 0.0 && c.p_lth < 1.0, "schedule.p_lth", "must lie in (0,1)");
  check_range(c.p_colt > 0.0 && c.p_colt < 1.0, "schedule.p_colt", "must lie in (0,1)");
  check_range(c.target_sparsity >= 0.0 && c.target_sparsity < 100.0,
              "schedule.target_sparsity", "must lie in [0,100)");
  check_range(c.max_rounds >= 0, "schedule.max_rounds", "must be >= 0");
  check_range(c.training.epochs >= 0, "training.epochs", "must be >= 0");
  check_range(c.training.batch_size >= 1, "training.batch", "must be >= 1");
  check_range(c.training.val_fraction >= 0.0 && c.training.val_fraction <= 0.5,
              "training.val_fraction", "must lie in [0,0.5]");
  check_range(c.training.base_lr > 0.0, "training.lr", "must be > 0");
  check_range(c.training.anneal_factor >= 1.0, "training.anneal_factor", "must be >= 1");
  if (c.dataset.kind == "blobs") {
    check_range(c.dataset.classes >= 2, "dataset.classes", "must be >= 2");
    check_range(c.dataset.per_class >= 2, "dataset.per_class", "must be >= 2");
    check_range(c.dataset.separation > 0.0, "dataset.separation", "must be > 0");
    check_range(c.dataset.channels >= 1 && c.dataset.height >= 1 && c.dataset.width >= 1,
                "dataset.shape", "must be positive");
  } else {
    for (const auto& [key, path] :
         {std::pair{"dataset.idx_train_images", c.dataset.idx_train_images},
          std::pair{"dataset.idx_train_labels", c.dataset.idx_train_labels},
          std::pair{"dataset.idx_test_images", c.dataset.idx_test_images},
          std::pair{"dataset.idx_test_labels", c.dataset.idx_test_labels}}) {
      if (path.empty()) throw ConfigError(std::string("key '") + key + "': required for idx datasets");
      if (!std::filesystem::exists(path)) {
        throw ConfigError(std::string("key '") + key + "': file '" + path + "' does not exist");
      }
    }
  }
  c.model.validate();
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_key(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate(c);
  return c;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "experiment.name = " << c.name << "\n";
  os << "model.arch = " << arch_name(c.model.arch) << "\n";
  os << "model.channels = " << join_ints(c.model.channels) << "\n";
  os << "model.hidden = " << join_ints(c.model.hidden) << "\n";
  os << "model.norm = " << (c.model.norm == NormMode::none ? "none" : "per-batch") << "\n";
  os << "dataset.kind = " << c.dataset.kind << "\n";
  os << "dataset.classes = " << c.dataset.classes << "\n";
  os << "dataset.per_class = " << c.dataset.per_class << "\n";
  os << "dataset.shape = " << c.dataset.channels << "," << c.dataset.height << ","
     << c.dataset.width << "\n";
  os << "dataset.separation = " << fmt_double(c.dataset.separation) << "\n";
  if (!c.dataset.idx_train_images.empty())
    os << "dataset.idx_train_images = " << c.dataset.idx_train_images << "\n";
  if (!c.dataset.idx_train_labels.empty())
    os << "dataset.idx_train_labels = " << c.dataset.idx_train_labels << "\n";
  if (!c.dataset.idx_test_images.empty())
    os << "dataset.idx_test_images = " << c.dataset.idx_test_images << "\n";
  if (!c.dataset.idx_test_labels.empty())
    os << "dataset.idx_test_labels = " << c.dataset.idx_test_labels << "\n";
  os << "schedule.p_lth = " << fmt_double(c.p_lth) << "\n";
  os << "schedule.p_colt = " << fmt_double(c.p_colt) << "\n";
  os << "schedule.target_sparsity = " << fmt_double(c.target_sparsity) << "\n";
  os << "schedule.max_rounds = " << c.max_rounds << "\n";
  os << "schedule.eligibility = " << eligibility_rule_name(c.eligibility) << "\n";
  os << "schedule.stop_rule = " << c.stop_rule << "\n";
  os << "training.epochs = " << c.training.epochs << "\n";
  os << "training.batch = " << c.training.batch_size << "\n";
  os << "training.lr = " << fmt_double(c.training.base_lr) << "\n";
  os << "training.warmup = " << (c.training.warmup ? "on" : "off") << "\n";
  os << "training.anneal_epochs = " << join_ints(c.training.anneal_epochs) << "\n";
  os << "training.anneal_factor = " << fmt_double(c.training.anneal_factor) << "\n";
  os << "training.val_fraction = " << fmt_double(c.training.val_fraction) << "\n";
  os << "training.optimizer = "
     << (c.training.opt.kind == OptimizerKind::adam ? "adam" : "sgd") << "\n";
  os << "training.momentum = " << fmt_double(c.training.opt.momentum) << "\n";
  os << "training.beta1 = " << fmt_double(c.training.opt.beta1) << "\n";
  os << "training.beta2 = " << fmt_double(c.training.opt.beta2) << "\n";
  os << "training.eps = " << fmt_double(c.training.opt.eps) << "\n";
  os << "training.weight_decay = " << fmt_double(c.training.opt.weight_decay) << "\n";
  os << "seeds.init = " << c.seeds.init << "\n";
  os << "seeds.data = " << c.seeds.data << "\n";
  os << "seeds.head = " << c.seeds.head << "\n";
  os << "output.dir = " << c.out_dir << "\n";
  return os.str();
}

PruneSchedule ExperimentConfig::lth_schedule() const {
  PruneSchedule s;
  s.prune_fraction = p_lth;
  s.eligibility = eligibility;
  s.target_sparsity = target_sparsity;
  s.max_rounds = max_rounds;
  return s;
}

PruneSchedule ExperimentConfig::colt_schedule() const {
  PruneSchedule s = lth_schedule();
  s.prune_fraction = p_colt;
  return s;
}

DataBundle ExperimentConfig::load_data() const {
  if (dataset.kind == "blobs") {
    return synthetic_blobs(dataset.classes, dataset.per_class, dataset.channels,
                           dataset.height, dataset.width, seeds.data, dataset.separation);
  }
  DataBundle b;
  b.train = load_idx(dataset.idx_train_images, dataset.idx_train_labels);
  b.train.split = SplitTag::train;
  b.test = load_idx(dataset.idx_test_images, dataset.idx_test_labels);
  b.test.split = SplitTag::test;
  return b;
}

}  // namespace colt
