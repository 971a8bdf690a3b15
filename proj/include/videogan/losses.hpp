#pragma once

#include <map>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace videogan {

/// Weights of the five objective terms. Defaults follow the usual
/// cycle-consistent training setup; `unit()` gives the plain unweighted sum.
struct LossWeights {
  double adv = 1.0;
  double cyc = 10.0;
  double idt = 5.0;
  double hist = 1.0;
  double iv = 1.0;

  static LossWeights unit() { return {1.0, 1.0, 1.0, 1.0, 1.0}; }
  void validate() const;
};

namespace loss_terms {
// Generator-side objective terms, one per direction where applicable.
inline constexpr const char* kAdvAB = "adv_AB";
inline constexpr const char* kAdvBA = "adv_BA";
inline constexpr const char* kHistAB = "hist_AB";
inline constexpr const char* kHistBA = "hist_BA";
inline constexpr const char* kIvAB = "iv_AB";
inline constexpr const char* kIvBA = "iv_BA";
inline constexpr const char* kCyc = "cyc";
inline constexpr const char* kIdt = "idt";
// Critic-side terms.
inline constexpr const char* kDiscA = "disc_A";
inline constexpr const char* kDiscB = "disc_B";
inline constexpr const char* kValHistA = "val_hist_A";
inline constexpr const char* kValHistB = "val_hist_B";
inline constexpr const char* kValIvA = "val_iv_A";
inline constexpr const char* kValIvB = "val_iv_B";
}  // namespace loss_terms

/// The eight terms that make up the generator objective.
const std::vector<std::string>& objective_terms();

struct LossReport {
  std::map<std::string, double> terms;
  double total = 0.0;         // weighted generator objective
  double critic_total = 0.0;  // sum of critic terms

  double at(const std::string& name) const;
};

// All losses average over elements so magnitudes do not depend on resolution.
// Empty inputs and mismatched shapes throw ShapeError.

/// mean((scores - 1)^2)
torch::Tensor adversarial_g(const torch::Tensor& scores_fake);
/// mean((real - 1)^2) + mean(fake^2)
torch::Tensor adversarial_d(const torch::Tensor& scores_real, const torch::Tensor& scores_fake);
/// Mean absolute reconstruction error, averaged over the two frames.
torch::Tensor cycle_loss(const torch::Tensor& source, const torch::Tensor& reference,
                         const torch::Tensor& reconstructed_source, const torch::Tensor& reconstructed_reference);
/// Mean absolute error between predicted and target relative histograms.
torch::Tensor hist_loss(const torch::Tensor& hist_pred, const torch::Tensor& target);
/// (fake - 1)^2, averaged over the batch.
torch::Tensor intra_video_g(const torch::Tensor& iv_fake);
/// (real - 1)^2 + fake^2, averaged over the batch.
torch::Tensor intra_video_c(const torch::Tensor& iv_real, const torch::Tensor& iv_fake);
/// Mean absolute error of a generator applied to frames already in its output
/// domain, averaged over the two frames.
torch::Tensor identity_loss(const torch::Tensor& output_source, const torch::Tensor& output_reference,
                            const torch::Tensor& source, const torch::Tensor& reference);

/// Weighted sum of the eight generator objective terms in `report`. Throws
/// ConfigError naming the first missing term.
double total_objective(const LossReport& report, const LossWeights& weights);
double term_weight(const std::string& term, const LossWeights& weights);

}  // namespace videogan
