#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "videogan/data_pipeline.hpp"
#include "videogan/losses.hpp"
#include "videogan/networks.hpp"
#include "videogan/types.hpp"

namespace videogan {

struct TrainConfig {
  double learning_rate = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  int batch_size = 1;
  int epochs = 200;
  uint64_t seed = 0;
  LossWeights weights;
  int checkpoint_interval = 10;
  // First epoch of a linear decay to zero; negative keeps the rate constant.
  int decay_start_epoch = -1;

  void validate() const;
  double learning_rate_at(int epoch) const;
};

struct RunConfig {
  GeneratorConfig model;
  TrainConfig train;
};

/// All six networks plus one Adam instance per network group: both generators
/// jointly, and each discriminator and validator separately.
struct ModelBundle {
  RunConfig config;
  Networks nets;
  std::unique_ptr<torch::optim::Adam> opt_g;
  std::unique_ptr<torch::optim::Adam> opt_d_a;
  std::unique_ptr<torch::optim::Adam> opt_d_b;
  std::unique_ptr<torch::optim::Adam> opt_c_a;
  std::unique_ptr<torch::optim::Adam> opt_c_b;
  int64_t step = 0;
  int epoch = 0;

  std::vector<torch::Tensor> generator_parameters() const;
  std::vector<torch::Tensor> critic_parameters() const;
  void set_learning_rate(double lr);
};

ModelBundle make_bundle(const RunConfig& config);

/// A mini-batch of pairs from one domain, network-ready: signed-range
/// [N, 3, H, W] tensors plus the hist_rcd targets of the original frames.
struct PairBatch {
  Domain domain = Domain::kA;
  torch::Tensor source;
  torch::Tensor reference;
  torch::Tensor hist_rcd;  // [N, 15]
};

PairBatch make_batch(std::span<const FramePair> pairs, Domain domain);

/// One generator phase followed by one critic phase.
///
/// Generator phase: adversarial, histogram and intra-video terms in both
/// directions plus cycle and identity terms, weighted by config.weights,
/// updating only G_AB and G_BA. Critic phase: least-squares discriminator terms
/// for D_A/D_B, and for C_A/C_B the histogram regression on real same-clip
/// pairs plus the intra-video real/fake term, updating only the critics.
/// Throws DomainError on mislabeled batches and NumericError naming the first
/// non-finite term.
enum class TrainPhase { kGenerator, kCritic };
/// Called after each phase's optimizer update.
using PhaseHook = std::function<void(TrainPhase)>;

LossReport train_step(ModelBundle& bundle, const PairBatch& batch_a, const PairBatch& batch_b,
                      const PairBatch& real_a, const PairBatch& real_b, const PhaseHook& on_phase = {});

struct TrainOptions {
  // Empty disables checkpoints, metadata and logs.
  std::filesystem::path output_dir;
  // Called after every step with the global step index and its report.
  std::function<void(int64_t, const LossReport&)> on_step;
};

/// Epoch = one pass over the larger domain's pair stream, cycling the smaller.
/// Pair order, real-pair sampling and initialization are functions of the seed
/// only, so a run resumed from an epoch checkpoint replays the same steps.
void train_clips(ModelBundle& bundle, const std::vector<VideoClip>& clips_a, const std::vector<VideoClip>& clips_b,
                 const TrainOptions& options = {});

/// Loads both manifests at the configured frame size and trains. Writes
/// run.json, log.jsonl, checkpoint_epoch_XXXX.pt every checkpoint_interval
/// epochs and final.pt into output_dir.
ModelBundle train(const DatasetManifest& manifest_a, const DatasetManifest& manifest_b, const RunConfig& config,
                  const std::filesystem::path& output_dir,
                  const std::optional<std::filesystem::path>& resume_from = std::nullopt);

std::vector<VideoClip> load_domain_clips(const DatasetManifest& manifest, Domain domain, int frame_size,
                                         int downsample_factor);

enum class Direction { kAB, kBA };
Direction parse_direction(const std::string& text);
std::string to_string(Direction direction);
Domain source_domain(Direction direction);
Domain target_domain(Direction direction);

/// Maps signed-range (source, reference) batches to translated batches.
using PairTranslator =
    std::function<std::pair<torch::Tensor, torch::Tensor>(const torch::Tensor&, const torch::Tensor&)>;

PairTranslator generator_translator(XShapeGenerator generator);

/// Translates every non-reference frame paired with the clip's reference. The
/// reference's translation comes from the first pair. Output is a unit-range
/// clip labeled with the target domain.
VideoClip translate_clip(const PairTranslator& translator, const VideoClip& clip, Direction direction);
VideoClip translate_clip(ModelBundle& bundle, const VideoClip& clip, Direction direction);

inline constexpr int64_t kCheckpointVersion = 1;

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_checkpoint(const std::filesystem::path& path);

}  // namespace videogan
