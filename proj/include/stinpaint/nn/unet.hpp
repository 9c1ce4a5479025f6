#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stinpaint/common/kv_config.hpp"
#include "stinpaint/data/volume.hpp"
#include "stinpaint/nn/partial_conv.hpp"
#include "stinpaint/tensor/param_store.hpp"

namespace stinpaint {

struct LayerSpec {
  int channels = 1;
  std::array<int, 3> kernel{1, 3, 3};
  std::array<int, 3> stride{1, 1, 1};
  std::array<int, 3> padding{0, 1, 1};
};

/// Six-encoder / six-decoder layer table for a given temporal depth T.
/// Encoders 5 and 6 use a temporal kernel of T, temporal stride 2 and
/// temporal padding 2 * ((T - 1) / 4).
struct UNetConfig {
  int temporal_dim = 5;
  int height = 64;
  int width = 64;
  int scale_num = 1;  // channel multiplier scale_num / scale_den
  int scale_den = 1;
  std::array<LayerSpec, 6> encoders{};
  std::array<LayerSpec, 6> decoders{};

  static UNetConfig standard(int temporal_dim, int height = 64, int width = 64, int scale_num = 1, int scale_den = 1);

  int scaled(int channels) const;
  void validate() const;

  /// `temporal_dim`, `height`, `width`, `width_scale` (e.g. "1/8").
  KvConfig to_config() const;
  static UNetConfig from_config(const KvConfig& cfg);
};

/// Parses "a/b" or "a" into a positive rational.
std::pair<int, int> parse_width_scale(const std::string& text);

template <typename Scalar>
struct UNetModel {
  UNetConfig config;
  std::vector<PartialConv3dLayer> encoders;
  std::vector<PartialConv3dLayer> decoders;
  ParamStore<Scalar> params;
  /// (T, H, W) of each encoder input, index 0 = network input.
  std::vector<std::array<int, 3>> encoder_inputs;
  /// (T, H, W) of each encoder output.
  std::vector<std::array<int, 3>> encoder_outputs;
};

/// Resolves the layer table against the input extent, clamping a temporal
/// kernel that exceeds its padded input (and the temporal stride when the
/// input has one frame), then allocates Kaiming-uniform weights from `seed`.
/// Throws ParameterError naming the layer if an extent becomes nonpositive.
template <typename Scalar>
UNetModel<Scalar> build_unet(const UNetConfig& cfg, std::uint64_t seed);

template <typename Scalar>
struct UNetOutput {
  Var prediction;                   // (B, 1, T, H, W)
  Tensor<Scalar> bottleneck_mask;  // mask after encoder 6
  Tensor<Scalar> output_mask;      // mask after decoder 6
};

/// image and mask are (B, 1, T, H, W); the network sees image * mask.
template <typename Scalar>
UNetOutput<Scalar> unet_forward(Tape<Scalar>& tape, UNetModel<Scalar>& model, const BoundParams<Scalar>& params,
                                const Tensor<Scalar>& image, const Tensor<Scalar>& mask, bool training);

/// Batches blocks into a (B, 1, T, H, W) tensor and back.
Tensor<float> stack_blocks(const std::vector<const GridBlock*>& blocks);
Tensor<float> stack_masks(const std::vector<const MaskBlock*>& masks);
GridBlock unstack_block(const Tensor<float>& batch, int index);

/// Evaluation-mode prediction for a single block.
GridBlock unet_predict(UNetModel<float>& model, const GridBlock& image, const MaskBlock& mask);

/// out = mask * image + (1 - mask) * max(prediction, 0).
GridBlock composite(const GridBlock& image, const MaskBlock& mask, const GridBlock& prediction);

extern template UNetModel<float> build_unet<float>(const UNetConfig&, std::uint64_t);
extern template UNetModel<double> build_unet<double>(const UNetConfig&, std::uint64_t);

}  // namespace stinpaint
