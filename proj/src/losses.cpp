#include "videogan/losses.hpp"

#include <cmath>

#include "videogan/errors.hpp"

namespace videogan {
namespace {

void require_nonempty(const torch::Tensor& t, const char* what) {
  if (!t.defined() || t.numel() == 0) throw ShapeError(std::string(what) + " is empty");
}

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  require_nonempty(a, what);
  if (!a.sizes().equals(b.sizes())) throw ShapeError(std::string(what) + ": shape mismatch");
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {adv, cyc, idt, hist, iv}) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("loss weights must be finite and nonnegative");
  }
}

const std::vector<std::string>& objective_terms() {
  using namespace loss_terms;
  static const std::vector<std::string> terms{kAdvAB, kAdvBA, kHistAB, kHistBA, kIvAB, kIvBA, kCyc, kIdt};
  return terms;
}

double LossReport::at(const std::string& name) const {
  auto it = terms.find(name);
  if (it == terms.end()) throw ConfigError("loss report lacks term '" + name + "'");
  return it->second;
}

torch::Tensor adversarial_g(const torch::Tensor& scores_fake) {
  require_nonempty(scores_fake, "fake score map");
  return (scores_fake - 1.0).square().mean();
}

torch::Tensor adversarial_d(const torch::Tensor& scores_real, const torch::Tensor& scores_fake) {
  require_nonempty(scores_real, "real score map");
  require_nonempty(scores_fake, "fake score map");
  return (scores_real - 1.0).square().mean() + scores_fake.square().mean();
}

torch::Tensor cycle_loss(const torch::Tensor& source, const torch::Tensor& reference,
                         const torch::Tensor& reconstructed_source, const torch::Tensor& reconstructed_reference) {
  require_same_shape(source, reconstructed_source, "cycle loss source");
  require_same_shape(reference, reconstructed_reference, "cycle loss reference");
  return 0.5 * ((reconstructed_source - source).abs().mean() + (reconstructed_reference - reference).abs().mean());
}

torch::Tensor hist_loss(const torch::Tensor& hist_pred, const torch::Tensor& target) {
  require_same_shape(hist_pred, target, "histogram loss");
  return (hist_pred - target).abs().mean();
}

torch::Tensor intra_video_g(const torch::Tensor& iv_fake) {
  require_nonempty(iv_fake, "intra-video fake score");
  return (iv_fake - 1.0).square().mean();
}

torch::Tensor intra_video_c(const torch::Tensor& iv_real, const torch::Tensor& iv_fake) {
  require_nonempty(iv_real, "intra-video real score");
  require_nonempty(iv_fake, "intra-video fake score");
  return (iv_real - 1.0).square().mean() + iv_fake.square().mean();
}

torch::Tensor identity_loss(const torch::Tensor& output_source, const torch::Tensor& output_reference,
                            const torch::Tensor& source, const torch::Tensor& reference) {
  require_same_shape(output_source, source, "identity loss source");
  require_same_shape(output_reference, reference, "identity loss reference");
  return 0.5 * ((output_source - source).abs().mean() + (output_reference - reference).abs().mean());
}

double term_weight(const std::string& term, const LossWeights& weights) {
  using namespace loss_terms;
  if (term == kAdvAB || term == kAdvBA) return weights.adv;
  if (term == kHistAB || term == kHistBA) return weights.hist;
  if (term == kIvAB || term == kIvBA) return weights.iv;
  if (term == kCyc) return weights.cyc;
  if (term == kIdt) return weights.idt;
  throw ConfigError("'" + term + "' is not a generator objective term");
}

double total_objective(const LossReport& report, const LossWeights& weights) {
  double total = 0.0;
  for (const auto& term : objective_terms()) total += term_weight(term, weights) * report.at(term);
  return total;
}

}  // namespace videogan
