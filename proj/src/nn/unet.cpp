#include "stinpaint/nn/unet.hpp"

#include <cmath>
#include <random>

#include "stinpaint/common/kv_config.hpp"

namespace stinpaint {
namespace {

using Index = Eigen::Index;

constexpr std::array<int, 6> kEncoderChannels{64, 128, 256, 512, 512, 512};
constexpr std::array<int, 6> kDecoderChannels{512, 512, 256, 128, 64, 1};

int out_extent(int in, int k, int s, int p) {
  const int span = in + 2 * p - k;
  return span < 0 ? 0 : span / s + 1;
}

std::string bn_name(const std::string& layer, const char* what) { return layer + ".bn." + what; }

template <typename S>
void init_layer(ParamStore<S>& store, const PartialConv3dLayer& layer, std::mt19937_64& rng) {
  const Shape5 ws = layer.weight_shape();
  const double fan_in = double(ws.c) * ws.t * ws.h * ws.w;
  const double w_bound = std::sqrt(6.0 / fan_in);
  const double b_bound = 1.0 / std::sqrt(fan_in);
  Tensor<S> w(ws);
  std::uniform_real_distribution<double> wdist(-w_bound, w_bound);
  for (Index i = 0; i < w.size(); ++i) w.vec()[i] = S(wdist(rng));
  Tensor<S> b(Shape5{1, layer.out_channels, 1, 1, 1});
  std::uniform_real_distribution<double> bdist(-b_bound, b_bound);
  for (Index i = 0; i < b.size(); ++i) b.vec()[i] = S(bdist(rng));
  store.add_parameter(layer.name + ".weight", std::move(w));
  store.add_parameter(layer.name + ".bias", std::move(b));
  if (layer.has_bn) {
    const Shape5 cs{1, layer.out_channels, 1, 1, 1};
    store.add_parameter(bn_name(layer.name, "gamma"), Tensor<S>(cs, S(1)));
    store.add_parameter(bn_name(layer.name, "beta"), Tensor<S>(cs, S(0)));
    store.add_buffer(bn_name(layer.name, "running_mean"), Tensor<S>(cs, S(0)));
    store.add_buffer(bn_name(layer.name, "running_var"), Tensor<S>(cs, S(1)));
  }
}

template <typename S>
struct Feature {
  Var value;
  Tensor<S> mask;
};

template <typename S>
Feature<S> apply_layer(Tape<S>& tape, UNetModel<S>& model, const BoundParams<S>& params,
                       const PartialConv3dLayer& layer, const Feature<S>& in, bool training) {
  auto pc = partial_conv3d(tape, in.value, in.mask, params[layer.name + ".weight"], params[layer.name + ".bias"],
                           layer.conv);
  Var h = pc.output;
  if (layer.has_bn) {
    BatchNormState<S> state;
    state.running_mean = &model.params.value(bn_name(layer.name, "running_mean"));
    state.running_var = &model.params.value(bn_name(layer.name, "running_var"));
    h = batch_norm(tape, h, params[bn_name(layer.name, "gamma")], params[bn_name(layer.name, "beta")], state,
                   training);
  }
  switch (layer.activation) {
    case Activation::kRelu: h = relu(tape, h); break;
    case Activation::kLeakyRelu: h = leaky_relu(tape, h, S(0.2)); break;
    case Activation::kNone: break;
  }
  return {h, std::move(pc.mask)};
}

}  // namespace

std::pair<int, int> parse_width_scale(const std::string& text) {
  const auto parts = split(text, '/');
  if (parts.empty() || parts.size() > 2) throw ParameterError("width_scale must look like a or a/b: " + text);
  const long long num = parse_int(parts[0]);
  const long long den = parts.size() == 2 ? parse_int(parts[1]) : 1;
  if (num < 1 || den < 1) throw ParameterError("width_scale must be positive: " + text);
  return {static_cast<int>(num), static_cast<int>(den)};
}

UNetConfig UNetConfig::standard(int temporal_dim, int height, int width, int scale_num, int scale_den) {
  UNetConfig cfg;
  cfg.temporal_dim = temporal_dim;
  cfg.height = height;
  cfg.width = width;
  cfg.scale_num = scale_num;
  cfg.scale_den = scale_den;
  const int tpad = 2 * ((temporal_dim - 1) / 4);
  for (int i = 0; i < 6; ++i) {
    LayerSpec& e = cfg.encoders[i];
    e.channels = kEncoderChannels[i];
    if (i < 4) {
      e.kernel = {1, 3, 3};
      e.stride = {1, 2, 2};
      e.padding = {0, 1, 1};
    } else {
      e.kernel = {temporal_dim, 3, 3};
      e.stride = {2, 2, 2};
      e.padding = {tpad, 1, 1};
    }
    LayerSpec& d = cfg.decoders[i];
    d.channels = kDecoderChannels[i];
    d.kernel = {1, 3, 3};
    d.stride = {1, 1, 1};
    d.padding = {0, 1, 1};
  }
  return cfg;
}

int UNetConfig::scaled(int channels) const {
  return std::max(1, static_cast<int>((static_cast<long long>(channels) * scale_num) / scale_den));
}

void UNetConfig::validate() const {
  if (temporal_dim < 1) throw ParameterError("temporal_dim must be >= 1");
  if (height < 1 || width < 1) throw ParameterError("spatial extent must be >= 1");
  if (scale_num < 1 || scale_den < 1) throw ParameterError("width_scale must be positive");
  if (decoders[5].channels != 1) throw ParameterError("decoder 6 must output one channel");
}

KvConfig UNetConfig::to_config() const {
  KvConfig cfg;
  cfg.add("temporal_dim", std::to_string(temporal_dim));
  cfg.add("height", std::to_string(height));
  cfg.add("width", std::to_string(width));
  cfg.add("width_scale", std::to_string(scale_num) + "/" + std::to_string(scale_den));
  return cfg;
}

UNetConfig UNetConfig::from_config(const KvConfig& cfg) {
  const auto [num, den] = parse_width_scale(cfg.get_string("width_scale", "1"));
  auto out = standard(static_cast<int>(cfg.require_int("temporal_dim")), static_cast<int>(cfg.get_int("height", 64)),
                      static_cast<int>(cfg.get_int("width", 64)), num, den);
  out.validate();
  return out;
}

template <typename S>
UNetModel<S> build_unet(const UNetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  UNetModel<S> model;
  model.config = cfg;
  std::array<int, 3> extent{cfg.temporal_dim, cfg.height, cfg.width};
  model.encoder_inputs.push_back(extent);
  int channels = 1;
  for (int i = 0; i < 6; ++i) {
    const LayerSpec& spec = cfg.encoders[i];
    PartialConv3dLayer layer;
    layer.name = "enc" + std::to_string(i + 1);
    layer.in_channels = channels;
    layer.out_channels = cfg.scaled(spec.channels);
    layer.kernel = spec.kernel;
    layer.conv.stride = spec.stride;
    layer.conv.padding = spec.padding;
    // Temporal clamps: the table's T-deep kernel can exceed a short padded input.
    if (layer.kernel[0] > extent[0] + 2 * layer.conv.padding[0]) layer.kernel[0] = extent[0] + 2 * layer.conv.padding[0];
    if (extent[0] == 1) layer.conv.stride[0] = 1;
    layer.has_bn = i != 0;
    layer.activation = Activation::kRelu;
    for (int a = 0; a < 3; ++a) {
      extent[a] = out_extent(extent[a], layer.kernel[a], layer.conv.stride[a], layer.conv.padding[a]);
      if (extent[a] < 1)
        throw ParameterError(layer.name + ": nonpositive output extent for T=" + std::to_string(cfg.temporal_dim));
    }
    channels = layer.out_channels;
    model.encoders.push_back(layer);
    model.encoder_outputs.push_back(extent);
    if (i < 5) model.encoder_inputs.push_back(extent);
  }

  for (int j = 0; j < 6; ++j) {
    const LayerSpec& spec = cfg.decoders[j];
    const int skip_channels = j == 5 ? 1 : model.encoders[4 - j].out_channels;
    PartialConv3dLayer layer;
    layer.name = "dec" + std::to_string(j + 1);
    layer.in_channels = channels + skip_channels;
    layer.out_channels = j == 5 ? 1 : cfg.scaled(spec.channels);
    layer.kernel = spec.kernel;
    layer.conv.stride = spec.stride;
    layer.conv.padding = spec.padding;
    layer.has_bn = j != 5;
    layer.activation = j == 5 ? Activation::kNone : Activation::kLeakyRelu;
    channels = layer.out_channels;
    model.decoders.push_back(layer);
  }

  std::mt19937_64 rng(seed);
  for (const auto& l : model.encoders) init_layer(model.params, l, rng);
  for (const auto& l : model.decoders) init_layer(model.params, l, rng);
  return model;
}

template <typename S>
UNetOutput<S> unet_forward(Tape<S>& tape, UNetModel<S>& model, const BoundParams<S>& params, const Tensor<S>& image,
                           const Tensor<S>& mask, bool training) {
  const Shape5 s = image.shape();
  if (!(mask.shape() == s)) throw ShapeError("unet_forward: image " + s.str() + " vs mask " + mask.shape().str());
  const auto& cfg = model.config;
  if (s.c != 1 || s.t != cfg.temporal_dim || s.h != cfg.height || s.w != cfg.width)
    throw ShapeError("unet_forward: input " + s.str() + " does not match model (T=" + std::to_string(cfg.temporal_dim) +
                     ", " + std::to_string(cfg.height) + "x" + std::to_string(cfg.width) + ")");

  std::vector<Feature<S>> skips;
  skips.push_back({tape.constant(Tensor<S>(s, image.vec().cwiseProduct(mask.vec()))), mask});
  for (const auto& layer : model.encoders) skips.push_back(apply_layer(tape, model, params, layer, skips.back(), training));

  UNetOutput<S> out;
  out.bottleneck_mask = skips.back().mask;
  Feature<S> h = skips.back();
  for (int j = 0; j < 6; ++j) {
    const Feature<S>& skip = skips[5 - j];
    const Shape5 ts = tape.shape(skip.value);
    Feature<S> up{upsample_nearest_to(tape, h.value, ts.t, ts.h, ts.w), upsample_mask_to(h.mask, ts.t, ts.h, ts.w)};
    Feature<S> joined{concat_channels(tape, up.value, skip.value), concat_masks(up.mask, skip.mask)};
    h = apply_layer(tape, model, params, model.decoders[j], joined, training);
  }
  out.prediction = h.value;
  out.output_mask = std::move(h.mask);
  return out;
}

Tensor<float> stack_blocks(const std::vector<const GridBlock*>& blocks) {
  if (blocks.empty()) throw ShapeError("stack_blocks: empty batch");
  const GridBlock& first = *blocks.front();
  Tensor<float> out(Shape5{static_cast<int>(blocks.size()), 1, first.frames(), first.rows(), first.cols()});
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (!blocks[i]->same_shape(first)) throw ShapeError("stack_blocks: blocks differ in shape");
    out.vec().segment(Index(i) * first.size(), first.size()) = blocks[i]->values();
  }
  return out;
}

Tensor<float> stack_masks(const std::vector<const MaskBlock*>& masks) {
  if (masks.empty()) throw ShapeError("stack_masks: empty batch");
  const MaskBlock& first = *masks.front();
  Tensor<float> out(Shape5{static_cast<int>(masks.size()), 1, first.frames(), first.rows(), first.cols()});
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (!masks[i]->same_shape(first)) throw ShapeError("stack_masks: masks differ in shape");
    out.vec().segment(Index(i) * first.size(), first.size()) = masks[i]->values().cast<float>();
  }
  return out;
}

GridBlock unstack_block(const Tensor<float>& batch, int index) {
  const Shape5 s = batch.shape();
  if (s.c != 1 || index < 0 || index >= s.n) throw ShapeError("unstack_block: bad index or channel count");
  GridBlock out(s.t, s.h, s.w);
  out.values() = batch.vec().segment(Index(index) * s.spatial(), s.spatial());
  return out;
}

GridBlock unet_predict(UNetModel<float>& model, const GridBlock& image, const MaskBlock& mask) {
  if (!image.same_shape(mask)) throw ShapeError("unet_predict: image and mask shapes differ");
  Tape<float> tape;
  const BoundParams<float> params(tape, model.params, false);
  const auto out = unet_forward(tape, model, params, stack_blocks({&image}), stack_masks({&mask}), false);
  return unstack_block(tape.value(out.prediction), 0);
}

GridBlock composite(const GridBlock& image, const MaskBlock& mask, const GridBlock& prediction) {
  if (!image.same_shape(mask) || !image.same_shape(prediction))
    throw ShapeError("composite: image, mask and prediction shapes differ");
  GridBlock out(image.frames(), image.rows(), image.cols());
  for (Index i = 0; i < image.size(); ++i)
    out.values()[i] = mask.values()[i] ? image.values()[i] : std::max(prediction.values()[i], 0.0f);
  return out;
}

template UNetModel<float> build_unet<float>(const UNetConfig&, std::uint64_t);
template UNetModel<double> build_unet<double>(const UNetConfig&, std::uint64_t);
template UNetOutput<float> unet_forward<float>(Tape<float>&, UNetModel<float>&, const BoundParams<float>&,
                                               const Tensor<float>&, const Tensor<float>&, bool);
template UNetOutput<double> unet_forward<double>(Tape<double>&, UNetModel<double>&, const BoundParams<double>&,
                                                 const Tensor<double>&, const Tensor<double>&, bool);

}  // namespace stinpaint
