#include "videogan/networks.hpp"

#include <unordered_set>

#include "videogan/errors.hpp"

namespace videogan {
namespace nn = torch::nn;
namespace F = torch::nn::functional;

std::string to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kDenseFusion: return "dense";
    case FusionMode::kWeightSharing: return "share";
    case FusionMode::kNone: return "none";
  }
  return "dense";
}

FusionMode parse_fusion_mode(const std::string& text) {
  if (text == "dense" || text == "dense_fusion") return FusionMode::kDenseFusion;
  if (text == "share" || text == "weight_sharing") return FusionMode::kWeightSharing;
  if (text == "none") return FusionMode::kNone;
  throw ConfigError("unknown fusion mode '" + text + "' (expected dense, share or none)");
}

int GeneratorConfig::stage_channels(int k) const {
  if (k >= downsample_stages) return bottleneck_channels;
  return std::min(base_channels << k, bottleneck_channels);
}

void GeneratorConfig::validate() const {
  if (downsample_stages < 1 || downsample_stages > 8) throw ConfigError("downsample_stages must be in [1, 8]");
  if (base_channels < 1 || bottleneck_channels < 1 || critic_channels < 1) {
    throw ConfigError("channel counts must be positive");
  }
  if (residual_blocks_per_stage < 1) throw ConfigError("residual_blocks_per_stage must be >= 1");
  if (frame_size < 8 || frame_size % downsample_factor() != 0) {
    throw ConfigError("frame_size " + std::to_string(frame_size) + " must be >= 8 and divisible by " +
                      std::to_string(downsample_factor()));
  }
  if (bottleneck_size() < 2) {
    throw ConfigError("bottleneck spatial size must be >= 2 (instance normalization needs more than one element)");
  }
}

namespace {

nn::Sequential conv_norm_relu(int in, int out, int kernel) {
  return nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in, out, kernel).padding(kernel / 2).bias(false)),
                        nn::InstanceNorm2d(nn::InstanceNorm2dOptions(out)), nn::ReLU());
}

void check_frames_tensor(const torch::Tensor& x, const char* what) {
  if (x.dim() != 4 || x.size(1) != 3) {
    throw ShapeError(std::string(what) + " must have shape [N, 3, H, W]");
  }
}

}  // namespace

ResidualBlockImpl::ResidualBlockImpl(int channels) {
  body_ = register_module(
      "body", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(channels, channels, 3).padding(1).bias(false)),
                             nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels)), nn::ReLU(),
                             nn::Conv2d(nn::Conv2dOptions(channels, channels, 3).padding(1).bias(false)),
                             nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels))));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) { return x + body_->forward(x); }

UpsampleModuleImpl::UpsampleModuleImpl(int in_channels, int out_channels) {
  body_ = register_module(
      "body", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 3).padding(1).bias(false)),
                             nn::InstanceNorm2d(nn::InstanceNorm2dOptions(out_channels)), nn::ReLU(),
                             nn::Upsample(nn::UpsampleOptions()
                                              .scale_factor(std::vector<double>{2.0, 2.0})
                                              .mode(torch::kNearest))));
}

torch::Tensor UpsampleModuleImpl::forward(const torch::Tensor& x) { return body_->forward(x); }

StreamEncoderImpl::StreamEncoderImpl(const GeneratorConfig& config, ResidualBlock shared_last_block) {
  const int stages = config.downsample_stages;
  stem_ = register_module("stem", conv_norm_relu(3, config.stage_channels(0), 7));
  for (int k = 0; k < stages; ++k) {
    const int out = config.stage_channels(k + 1);
    stage_convs_.push_back(
        register_module("stage" + std::to_string(k) + "_conv", conv_norm_relu(config.stage_channels(k), out, 3)));
    nn::Sequential blocks;
    const int count = k + 1 == stages ? config.residual_blocks_per_stage - 1 : config.residual_blocks_per_stage;
    for (int b = 0; b < count; ++b) blocks->push_back(ResidualBlock(out));
    stage_blocks_.push_back(register_module("stage" + std::to_string(k) + "_blocks", blocks));
  }
  last_block_ = shared_last_block.is_empty() ? ResidualBlock(config.bottleneck_channels) : shared_last_block;
  register_module("last_block", last_block_);
}

EncoderOutput StreamEncoderImpl::forward(const torch::Tensor& input) {
  EncoderOutput out;
  auto x = stem_->forward(input);
  for (size_t k = 0; k < stage_convs_.size(); ++k) {
    x = stage_convs_[k]->forward(x);
    out.skips.push_back(x);
    x = F::max_pool2d(x, F::MaxPool2dFuncOptions(2));
    if (!stage_blocks_[k]->is_empty()) x = stage_blocks_[k]->forward(x);
  }
  out.code = last_block_->forward(x);
  return out;
}

StreamDecoderImpl::StreamDecoderImpl(const GeneratorConfig& config, int input_channels,
                                     UpsampleModule shared_first_up) {
  int in = input_channels;
  for (int k = config.downsample_stages - 1; k >= 0; --k) {
    const int out = config.stage_channels(k + 1);
    UpsampleModule up = (k == config.downsample_stages - 1 && !shared_first_up.is_empty())
                            ? shared_first_up
                            : UpsampleModule(in, out);
    ups_.push_back(register_module("up" + std::to_string(k), up));
    merges_.push_back(register_module("merge" + std::to_string(k),
                                      conv_norm_relu(2 * out, config.stage_channels(k), 3)));
    in = config.stage_channels(k);
  }
  head_ = register_module("head", nn::Conv2d(nn::Conv2dOptions(config.stage_channels(0) + 3, 3, 7).padding(3)));
}

torch::Tensor StreamDecoderImpl::forward(const torch::Tensor& input, const std::vector<torch::Tensor>& skips,
                                         const torch::Tensor& frame) {
  if (skips.size() != ups_.size()) throw ShapeError("decoder received the wrong number of skip tensors");
  auto x = input;
  for (size_t i = 0; i < ups_.size(); ++i) {
    x = ups_[i]->forward(x);
    x = torch::cat({x, skips[skips.size() - 1 - i]}, 1);
    x = merges_[i]->forward(x);
  }
  return torch::tanh(head_->forward(torch::cat({x, frame}, 1)));
}

DenseFusionBlockImpl::DenseFusionBlockImpl(int bottleneck_channels, int spatial)
    : channels_(bottleneck_channels), spatial_(spatial) {
  fuse_ = register_module(
      "fuse", nn::Conv2d(nn::Conv2dOptions(2 * bottleneck_channels, bottleneck_channels * spatial * spatial, 1)));
}

torch::Tensor DenseFusionBlockImpl::fuse(const torch::Tensor& source_code, const torch::Tensor& reference_code) {
  const std::vector<int64_t> expected{source_code.size(0), channels_, spatial_, spatial_};
  if (source_code.dim() != 4 || !source_code.sizes().equals(expected) || !reference_code.sizes().equals(expected)) {
    throw ShapeError("dense fusion expects two [N, " + std::to_string(channels_) + ", " + std::to_string(spatial_) +
                     ", " + std::to_string(spatial_) + "] codes");
  }
  const auto pooled = torch::cat({F::adaptive_avg_pool2d(source_code, F::AdaptiveAvgPool2dFuncOptions(1)),
                                  F::adaptive_avg_pool2d(reference_code, F::AdaptiveAvgPool2dFuncOptions(1))},
                                 1);
  return fuse_->forward(pooled);
}

torch::Tensor DenseFusionBlockImpl::forward(const torch::Tensor& source_code, const torch::Tensor& reference_code) {
  const auto fused = fuse(source_code, reference_code);
  return fused.reshape({fused.size(0), channels_, spatial_, spatial_});
}

XShapeGeneratorImpl::XShapeGeneratorImpl(const GeneratorConfig& config) : config_(config) {
  config_.validate();
  const int code = config_.bottleneck_channels;
  ResidualBlock shared_block{nullptr};
  UpsampleModule shared_up{nullptr};
  if (config_.fusion_mode == FusionMode::kWeightSharing) {
    shared_block = ResidualBlock(code);
    shared_up = UpsampleModule(code, config_.stage_channels(config_.downsample_stages));
  }
  const int decoder_in = config_.fusion_mode == FusionMode::kDenseFusion ? 2 * code : code;
  source_encoder_ = register_module("source_encoder", StreamEncoder(config_, shared_block));
  reference_encoder_ = register_module("reference_encoder", StreamEncoder(config_, shared_block));
  if (config_.fusion_mode == FusionMode::kDenseFusion) {
    fusion_ = register_module("fusion", DenseFusionBlock(code, config_.bottleneck_size()));
  }
  source_decoder_ = register_module("source_decoder", StreamDecoder(config_, decoder_in, shared_up));
  reference_decoder_ = register_module("reference_decoder", StreamDecoder(config_, decoder_in, shared_up));
}

std::pair<torch::Tensor, torch::Tensor> XShapeGeneratorImpl::forward(const torch::Tensor& source,
                                                                     const torch::Tensor& reference) {
  check_frames_tensor(source, "generator source");
  check_frames_tensor(reference, "generator reference");
  if (!source.sizes().equals(reference.sizes())) throw ShapeError("generator inputs differ in shape");
  const int factor = config_.downsample_factor();
  if (source.size(2) % factor != 0 || source.size(3) % factor != 0) {
    throw ShapeError("generator input size must be divisible by " + std::to_string(factor));
  }
  if (config_.fusion_mode == FusionMode::kDenseFusion &&
      (source.size(2) != config_.frame_size || source.size(3) != config_.frame_size)) {
    throw ShapeError("dense fusion generator is built for " + std::to_string(config_.frame_size) + "x" +
                     std::to_string(config_.frame_size) + " frames");
  }
  auto src = source_encoder_->forward(source);
  auto ref = reference_encoder_->forward(reference);
  torch::Tensor src_in = src.code;
  torch::Tensor ref_in = ref.code;
  if (!fusion_.is_empty()) {
    const auto fused = fusion_->forward(src.code, ref.code);
    src_in = torch::cat({src.code, fused}, 1);
    ref_in = torch::cat({ref.code, fused}, 1);
  }
  return {source_decoder_->forward(src_in, src.skips, source),
          reference_decoder_->forward(ref_in, ref.skips, reference)};
}

PixelDiscriminatorImpl::PixelDiscriminatorImpl(int channels, int depth) : depth_(depth) {
  if (depth < 1) throw ConfigError("discriminator depth must be >= 1");
  const auto lrelu = [] { return nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)); };
  const auto up = [] {
    return nn::Upsample(nn::UpsampleOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest));
  };
  nn::Sequential body;
  body->push_back(nn::Conv2d(nn::Conv2dOptions(3, channels, 4).stride(2).padding(1)));
  body->push_back(lrelu());
  for (int i = 1; i < depth; ++i) {
    body->push_back(nn::Conv2d(nn::Conv2dOptions(channels << (i - 1), channels << i, 4).stride(2).padding(1).bias(false)));
    body->push_back(nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels << i)));
    body->push_back(lrelu());
  }
  for (int i = depth - 1; i >= 1; --i) {
    body->push_back(up());
    body->push_back(nn::Conv2d(nn::Conv2dOptions(channels << i, channels << (i - 1), 3).padding(1).bias(false)));
    body->push_back(nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels << (i - 1))));
    body->push_back(lrelu());
  }
  body->push_back(up());
  body->push_back(nn::Conv2d(nn::Conv2dOptions(channels, 1, 3).padding(1)));
  body_ = register_module("body", body);
}

torch::Tensor PixelDiscriminatorImpl::forward(const torch::Tensor& x) {
  check_frames_tensor(x, "discriminator input");
  const int factor = 1 << depth_;
  if (x.size(2) % factor != 0 || x.size(3) % factor != 0) {
    throw ShapeError("discriminator input size must be divisible by " + std::to_string(factor));
  }
  return body_->forward(x);
}

ColorValidatorImpl::ColorValidatorImpl(int channels, int hist_length) {
  nn::Sequential trunk;
  int in = 6;
  for (int i = 0; i < 4; ++i) {
    const int out = channels << i;
    trunk->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(2).padding(1)));
    trunk->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
    in = out;
  }
  trunk->push_back(nn::AdaptiveAvgPool2d(nn::AdaptiveAvgPool2dOptions(1)));
  trunk->push_back(nn::Flatten());
  trunk_ = register_module("trunk", trunk);
  hist_head_ = register_module("hist_head", nn::Linear(in, hist_length));
  iv_head_ = register_module("iv_head", nn::Linear(in, 1));
}

ValidatorOutput ColorValidatorImpl::forward(const torch::Tensor& first, const torch::Tensor& second) {
  check_frames_tensor(first, "validator input");
  check_frames_tensor(second, "validator input");
  if (!first.sizes().equals(second.sizes())) throw ShapeError("validator inputs differ in shape");
  const auto features = trunk_->forward(torch::cat({first, second}, 1));
  return {hist_head_->forward(features), iv_head_->forward(features).squeeze(1)};
}

std::vector<std::pair<std::string, std::shared_ptr<nn::Module>>> Networks::named_modules() const {
  return {{"g_ab", g_ab.ptr()}, {"g_ba", g_ba.ptr()}, {"d_a", d_a.ptr()},
          {"d_b", d_b.ptr()},   {"c_a", c_a.ptr()},   {"c_b", c_b.ptr()}};
}

int discriminator_depth(int frame_size) {
  int log2 = 0;
  while ((1 << (log2 + 1)) <= frame_size) ++log2;
  return std::clamp(log2 - 2, 1, 3);
}

namespace {

void initialize_weights(nn::Module& module) {
  torch::NoGradGuard no_grad;
  for (auto& child : module.modules()) {
    if (auto* conv = child->as<nn::Conv2d>()) {
      nn::init::normal_(conv->weight, 0.0, 0.02);
      if (conv->bias.defined()) nn::init::zeros_(conv->bias);
    } else if (auto* linear = child->as<nn::Linear>()) {
      nn::init::normal_(linear->weight, 0.0, 0.02);
      if (linear->bias.defined()) nn::init::zeros_(linear->bias);
    }
  }
}

}  // namespace

Networks build_models(const GeneratorConfig& config, uint64_t seed) {
  config.validate();
  torch::manual_seed(seed);
  Networks nets;
  nets.config = config;
  nets.g_ab = XShapeGenerator(config);
  nets.g_ba = XShapeGenerator(config);
  const int depth = discriminator_depth(config.frame_size);
  nets.d_a = PixelDiscriminator(config.critic_channels, depth);
  nets.d_b = PixelDiscriminator(config.critic_channels, depth);
  nets.c_a = ColorValidator(config.critic_channels, 15);
  nets.c_b = ColorValidator(config.critic_channels, 15);
  for (auto& [name, module] : nets.named_modules()) initialize_weights(*module);
  return nets;
}

std::vector<torch::Tensor> unique_parameters(const nn::Module& module) {
  std::vector<torch::Tensor> out;
  std::unordered_set<const void*> seen;
  for (const auto& p : module.parameters()) {
    if (seen.insert(p.unsafeGetTensorImpl()).second) out.push_back(p);
  }
  return out;
}

int64_t parameter_count(const nn::Module& module) {
  int64_t total = 0;
  for (const auto& p : unique_parameters(module)) total += p.numel();
  return total;
}

std::pair<Frame, Frame> generator_forward(XShapeGenerator& generator, const FramePair& pair) {
  if (pair.source.height() != pair.reference.height() || pair.source.width() != pair.reference.width()) {
    throw ShapeError("source and reference frames differ in size");
  }
  const bool was_training = generator->is_training();
  generator->eval();
  torch::NoGradGuard no_grad;
  auto [src, ref] = generator->forward(pair.source.to_signed().pixels().unsqueeze(0),
                                       pair.reference.to_signed().pixels().unsqueeze(0));
  generator->train(was_training);
  return {Frame(src[0].clamp(-1.0, 1.0), RangeTag::kSigned), Frame(ref[0].clamp(-1.0, 1.0), RangeTag::kSigned)};
}

std::pair<std::vector<double>, double> validator_forward(ColorValidator& validator, const Frame& first,
                                                         const Frame& second) {
  if (first.height() != second.height() || first.width() != second.width()) {
    throw ShapeError("validator frames differ in size");
  }
  torch::NoGradGuard no_grad;
  auto out = validator->forward(first.to_signed().pixels().unsqueeze(0), second.to_signed().pixels().unsqueeze(0));
  auto hist = out.hist[0].to(torch::kFloat64).contiguous();
  return {std::vector<double>(hist.data_ptr<double>(), hist.data_ptr<double>() + hist.numel()),
          out.iv[0].item<double>()};
}

}  // namespace videogan
