#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "videogan/types.hpp"

namespace videogan {

enum class FusionMode { kDenseFusion, kWeightSharing, kNone };

std::string to_string(FusionMode mode);
/// Accepts "dense", "dense_fusion", "share", "weight_sharing" and "none".
FusionMode parse_fusion_mode(const std::string& text);

struct GeneratorConfig {
  int frame_size = 256;
  int base_channels = 64;
  int bottleneck_channels = 512;
  int downsample_stages = 5;
  int residual_blocks_per_stage = 1;
  FusionMode fusion_mode = FusionMode::kDenseFusion;
  // Width of the first layer of the discriminators and color validators.
  int critic_channels = 64;

  int downsample_factor() const { return 1 << downsample_stages; }
  int bottleneck_size() const { return frame_size / downsample_factor(); }
  int64_t fusion_length() const {
    return int64_t{bottleneck_channels} * bottleneck_size() * bottleneck_size();
  }
  /// Feature width after encoder stage k (k = 0 is the stem, k = stages is
  /// the bottleneck).
  int stage_channels(int k) const;
  void validate() const;
};

class ResidualBlockImpl : public torch::nn::Module {
 public:
  explicit ResidualBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(ResidualBlock);

/// 3x3 convolution, normalization, ReLU, then 2x nearest upsampling.
class UpsampleModuleImpl : public torch::nn::Module {
 public:
  UpsampleModuleImpl(int in_channels, int out_channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(UpsampleModule);

struct EncoderOutput {
  torch::Tensor code;
  // Pre-pooling activations of every stage, shallowest first.
  std::vector<torch::Tensor> skips;
};

class StreamEncoderImpl : public torch::nn::Module {
 public:
  // `shared_last_block`, when non-null, replaces the final residual block.
  StreamEncoderImpl(const GeneratorConfig& config, ResidualBlock shared_last_block);
  EncoderOutput forward(const torch::Tensor& x);

  ResidualBlock last_block() const { return last_block_; }

 private:
  torch::nn::Sequential stem_{nullptr};
  std::vector<torch::nn::Sequential> stage_convs_;
  std::vector<torch::nn::Sequential> stage_blocks_;
  ResidualBlock last_block_{nullptr};
};
TORCH_MODULE(StreamEncoder);

class StreamDecoderImpl : public torch::nn::Module {
 public:
  // `shared_first_up`, when non-null, replaces the deepest upsampling module.
  StreamDecoderImpl(const GeneratorConfig& config, int input_channels, UpsampleModule shared_first_up);
  /// `frame` is the stream's own input image; the output head sees it next to
  /// the decoded features, a full-resolution shortcut that carries absolute
  /// color past the normalized layers.
  torch::Tensor forward(const torch::Tensor& x, const std::vector<torch::Tensor>& skips, const torch::Tensor& frame);

  UpsampleModule first_up() const { return ups_.front(); }

 private:
  // Ordered deepest first.
  std::vector<UpsampleModule> ups_;
  std::vector<torch::nn::Sequential> merges_;
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(StreamDecoder);

/// Average-pools both bottleneck codes to 1x1, concatenates them, fuses with a
/// single 1x1 convolution to C*s*s channels and reshapes to C x s x s.
class DenseFusionBlockImpl : public torch::nn::Module {
 public:
  DenseFusionBlockImpl(int bottleneck_channels, int spatial);
  torch::Tensor forward(const torch::Tensor& source_code, const torch::Tensor& reference_code);
  /// The fused [N, C*s*s, 1, 1] activation before the reshape.
  torch::Tensor fuse(const torch::Tensor& source_code, const torch::Tensor& reference_code);

  torch::nn::Conv2d fusing_conv() const { return fuse_; }

 private:
  int channels_;
  int spatial_;
  torch::nn::Conv2d fuse_{nullptr};
};
TORCH_MODULE(DenseFusionBlock);

class XShapeGeneratorImpl : public torch::nn::Module {
 public:
  explicit XShapeGeneratorImpl(const GeneratorConfig& config);
  /// Both inputs are signed-range [N, 3, H, W]; returns (translated source,
  /// translated reference) of the same shape in [-1, 1].
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& source, const torch::Tensor& reference);

  const GeneratorConfig& config() const { return config_; }
  StreamEncoder source_encoder() const { return source_encoder_; }
  StreamEncoder reference_encoder() const { return reference_encoder_; }
  StreamDecoder source_decoder() const { return source_decoder_; }
  StreamDecoder reference_decoder() const { return reference_decoder_; }
  /// Null unless fusion_mode is kDenseFusion.
  DenseFusionBlock fusion() const { return fusion_; }

 private:
  GeneratorConfig config_;
  StreamEncoder source_encoder_{nullptr};
  StreamEncoder reference_encoder_{nullptr};
  StreamDecoder source_decoder_{nullptr};
  StreamDecoder reference_decoder_{nullptr};
  DenseFusionBlock fusion_{nullptr};
};
TORCH_MODULE(XShapeGenerator);

/// Downsample-upsample network returning one unbounded real/fake score per
/// pixel: [N, 3, H, W] -> [N, 1, H, W].
class PixelDiscriminatorImpl : public torch::nn::Module {
 public:
  PixelDiscriminatorImpl(int channels, int depth);
  torch::Tensor forward(const torch::Tensor& x);

  int depth() const { return depth_; }

 private:
  int depth_;
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(PixelDiscriminator);

struct ValidatorOutput {
  torch::Tensor hist;  // [N, 15]
  torch::Tensor iv;    // [N]
};

/// Scores an ordered frame pair: a 15-way relative-histogram regression head
/// and a scalar same-clip real/fake head over a shared convolutional trunk.
class ColorValidatorImpl : public torch::nn::Module {
 public:
  ColorValidatorImpl(int channels, int hist_length);
  ValidatorOutput forward(const torch::Tensor& first, const torch::Tensor& second);

 private:
  torch::nn::Sequential trunk_{nullptr};
  torch::nn::Linear hist_head_{nullptr};
  torch::nn::Linear iv_head_{nullptr};
};
TORCH_MODULE(ColorValidator);

/// G_AB, G_BA, D_A, D_B, C_A, C_B. D_X and C_X judge frames of domain X.
struct Networks {
  GeneratorConfig config;
  XShapeGenerator g_ab{nullptr};
  XShapeGenerator g_ba{nullptr};
  PixelDiscriminator d_a{nullptr};
  PixelDiscriminator d_b{nullptr};
  ColorValidator c_a{nullptr};
  ColorValidator c_b{nullptr};

  XShapeGenerator& generator(Domain from) { return from == Domain::kA ? g_ab : g_ba; }
  /// Named modules in a fixed order, used by checkpoints and hashing.
  std::vector<std::pair<std::string, std::shared_ptr<torch::nn::Module>>> named_modules() const;
};

int discriminator_depth(int frame_size);

/// Seeded N(0, 0.02) initialization of every network.
Networks build_models(const GeneratorConfig& config, uint64_t seed);

/// Parameters with storage shared between tied layers reported once.
std::vector<torch::Tensor> unique_parameters(const torch::nn::Module& module);
int64_t parameter_count(const torch::nn::Module& module);

/// Frame-level generator call in evaluation mode; frames are converted to the
/// signed range on entry and the outputs are signed-range frames.
std::pair<Frame, Frame> generator_forward(XShapeGenerator& generator, const FramePair& pair);

/// Frame-level validator call; returns the 15 histogram predictions and the
/// intra-video score.
std::pair<std::vector<double>, double> validator_forward(ColorValidator& validator, const Frame& first,
                                                         const Frame& second);

}  // namespace videogan
