#include "colt/model.hpp"

#include <cmath>

#include "colt/error.hpp"
#include "colt/ops.hpp"
#include "colt/rng.hpp"

namespace colt {

namespace {

constexpr int kConvKernel = 3;

Tensor xavier_uniform(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng) {
  const float bound = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
  std::vector<float> v(static_cast<size_t>(shape_numel(shape)));
  for (float& x : v) x = uniform_float(rng, -bound, bound);
  return Tensor::from_vector(std::move(shape), std::move(v));
}

}  // namespace

const char* arch_name(Arch a) { return a == Arch::mlp ? "mlp" : "conv3s"; }

Arch arch_from_name(const std::string& name) {
  if (name == "mlp") return Arch::mlp;
  if (name == "conv3s") return Arch::conv3s;
  throw ConfigError("unsupported arch '" + name + "' (expected mlp or conv3s)");
}

void ModelSpec::validate() const {
  if (num_classes < 2) throw ConfigError("model num_classes must be >= 2");
  if (in_channels < 1 || in_height < 1 || in_width < 1) {
    throw ConfigError("model input shape must be positive");
  }
  const auto& widths = arch == Arch::mlp ? hidden : channels;
  if (widths.empty()) throw ConfigError("model needs at least one hidden layer");
  for (int w : widths) {
    if (w < 1) throw ConfigError("model layer widths must be positive");
  }
}

Model Model::build(const ModelSpec& spec, uint64_t seed) {
  spec.validate();
  Model m;
  m.spec_ = spec;
  Rng rng = make_rng(seed);

  // Weights are drawn in layer order with the head strictly last, so two
  // builds differing only in num_classes share bit-identical non-head draws.
  if (spec.arch == Arch::conv3s) {
    int prev_c = spec.in_channels;
    for (size_t i = 0; i < spec.channels.size(); ++i) {
      const int ch = spec.channels[i];
      const std::string base = "conv" + std::to_string(i + 1);
      const int64_t fan_in = static_cast<int64_t>(prev_c) * kConvKernel * kConvKernel;
      const int64_t fan_out = static_cast<int64_t>(ch) * kConvKernel * kConvKernel;
      m.params_.add(base + ".weight", ParamKind::conv,
                    xavier_uniform({ch, prev_c, kConvKernel, kConvKernel}, fan_in, fan_out, rng));
      m.params_.add(base + ".bias", ParamKind::bias, Tensor::zeros({ch}));
      if (spec.norm == NormMode::per_batch) {
        m.params_.add("norm" + std::to_string(i + 1) + ".gamma", ParamKind::norm,
                      Tensor::full({ch}, 1.0f));
        m.params_.add("norm" + std::to_string(i + 1) + ".beta", ParamKind::norm,
                      Tensor::zeros({ch}));
      }
      prev_c = ch;
    }
    m.params_.add("head.weight", ParamKind::linear,
                  xavier_uniform({prev_c, spec.num_classes}, prev_c, spec.num_classes, rng));
    m.params_.add("head.bias", ParamKind::bias, Tensor::zeros({spec.num_classes}));
  } else {
    int prev = spec.in_channels * spec.in_height * spec.in_width;
    for (size_t i = 0; i < spec.hidden.size(); ++i) {
      const int width = spec.hidden[i];
      const std::string base = "fc" + std::to_string(i + 1);
      m.params_.add(base + ".weight", ParamKind::linear,
                    xavier_uniform({prev, width}, prev, width, rng));
      m.params_.add(base + ".bias", ParamKind::bias, Tensor::zeros({width}));
      prev = width;
    }
    m.params_.add("head.weight", ParamKind::linear,
                  xavier_uniform({prev, spec.num_classes}, prev, spec.num_classes, rng));
    m.params_.add("head.bias", ParamKind::bias, Tensor::zeros({spec.num_classes}));
  }
  return m;
}

Tensor Model::forward(const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != spec_.in_channels) {
    throw ShapeError("model expects [B," + std::to_string(spec_.in_channels) +
                     ",H,W] input, got " + shape_str(x.shape()));
  }
  // Inputs arrive in [0,1]; center them so the conv stack is not dominated
  // by the constant component.
  Tensor y = add_scalar(x, -0.5f);
  if (spec_.arch == Arch::conv3s) {
    for (size_t i = 0; i < spec_.channels.size(); ++i) {
      const std::string base = "conv" + std::to_string(i + 1);
      y = conv2d(y, params_.find(base + ".weight")->value, 1, 1);
      y = add_channel_bias(y, params_.find(base + ".bias")->value);
      if (spec_.norm == NormMode::per_batch) {
        y = batch_norm2d(y, params_.find("norm" + std::to_string(i + 1) + ".gamma")->value,
                         params_.find("norm" + std::to_string(i + 1) + ".beta")->value);
      }
      y = relu(y);
      y = max_pool2d(y, 2, 2);
    }
    y = global_avg_pool(y);
  } else {
    const int64_t flat = static_cast<int64_t>(spec_.in_channels) * spec_.in_height * spec_.in_width;
    if (x.dim(2) != spec_.in_height || x.dim(3) != spec_.in_width) {
      throw ShapeError("mlp input must be " + std::to_string(spec_.in_height) + "x" +
                       std::to_string(spec_.in_width) + ", got " + shape_str(x.shape()));
    }
    y = reshape(y, {x.dim(0), flat});
    for (size_t i = 0; i < spec_.hidden.size(); ++i) {
      const std::string base = "fc" + std::to_string(i + 1);
      y = matmul(y, params_.find(base + ".weight")->value);
      y = add_row_bias(y, params_.find(base + ".bias")->value);
      y = relu(y);
    }
  }
  y = matmul(y, params_.find("head.weight")->value);
  y = add_row_bias(y, params_.find("head.bias")->value);
  return y;
}

void Model::replace_head(int new_num_classes, uint64_t seed) {
  if (new_num_classes < 2) throw ConfigError("replacement head needs >= 2 classes");
  ParamTensor& hw = params_.at("head.weight");
  ParamTensor& hb = params_.at("head.bias");
  const int feat = feature_dim();
  Rng rng = make_rng(seed);
  Tensor w = xavier_uniform({feat, new_num_classes}, feat, new_num_classes, rng);
  w.set_requires_grad(true);
  hw.value = std::move(w);
  Tensor b = Tensor::zeros({new_num_classes});
  b.set_requires_grad(true);
  hb.value = std::move(b);
  params_.reset_initial("head.weight");
  params_.reset_initial("head.bias");
  spec_.num_classes = new_num_classes;
}

int Model::feature_dim() const {
  return spec_.arch == Arch::conv3s ? spec_.channels.back() : spec_.hidden.back();
}

}  // namespace colt
