#include <fstream>

#include "doctest_torch.hpp"
#include "json.hpp"
#include "test_support.hpp"
#include "videogan/config.hpp"
#include "videogan/errors.hpp"
#include "videogan/histogram.hpp"
#include "videogan/trainer.hpp"

using namespace videogan;
using videogan::testing::random_clip;
using videogan::testing::TempDir;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config(uint64_t seed = 0) {
  RunConfig c;
  c.model.frame_size = 8;
  c.model.base_channels = 8;
  c.model.bottleneck_channels = 16;
  c.model.downsample_stages = 2;
  c.model.critic_channels = 8;
  c.train.seed = seed;
  c.train.epochs = 1;
  return c;
}

std::vector<VideoClip> clips(Domain domain, int count, int frames, uint64_t seed) {
  std::vector<VideoClip> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(random_clip(std::string(domain == Domain::kA ? "a" : "b") + std::to_string(i), frames, 8,
                              seed + i, domain));
  }
  return out;
}

struct Batches {
  PairBatch a, b, real_a, real_b;
};

Batches tiny_batches(uint64_t seed) {
  const auto ca = random_clip("a", 3, 8, seed, Domain::kA), cb = random_clip("b", 3, 8, seed + 1, Domain::kB);
  const auto pa = iterate_pairs(ca), pb = iterate_pairs(cb);
  const std::vector<FramePair> ra{sample_real_pair(ca, seed)}, rb{sample_real_pair(cb, seed)};
  return {make_batch(std::span(pa).first(1), Domain::kA), make_batch(std::span(pb).first(1), Domain::kB),
          make_batch(ra, Domain::kA), make_batch(rb, Domain::kB)};
}

std::vector<torch::Tensor> snapshot(const std::vector<torch::Tensor>& params) {
  std::vector<torch::Tensor> out;
  for (const auto& p : params) out.push_back(p.detach().clone());
  return out;
}

bool unchanged(const std::vector<torch::Tensor>& before, const std::vector<torch::Tensor>& params) {
  for (size_t i = 0; i < params.size(); ++i) {
    if (!torch::equal(before[i], params[i])) return false;
  }
  return true;
}

bool all_changed(const std::vector<torch::Tensor>& before, const std::vector<torch::Tensor>& params) {
  size_t changed = 0;
  for (size_t i = 0; i < params.size(); ++i) changed += !torch::equal(before[i], params[i]);
  return changed > 0;
}

std::vector<LossReport> run_steps(ModelBundle& bundle, const std::vector<VideoClip>& a,
                                  const std::vector<VideoClip>& b, const fs::path& out = {}) {
  std::vector<LossReport> reports;
  TrainOptions options{out, [&](int64_t, const LossReport& r) { reports.push_back(r); }};
  train_clips(bundle, a, b, options);
  return reports;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("training defaults") {
    const TrainConfig t;
    CHECK(t.learning_rate == 2e-4);
    CHECK(t.adam_beta1 == 0.5);
    CHECK(t.adam_beta2 == 0.999);
    CHECK(t.batch_size == 1);
    CHECK(t.epochs == 200);
    CHECK(t.learning_rate_at(150) == 2e-4);
  }

  TEST_CASE("training config validation and decay") {
    TrainConfig t;
    t.learning_rate = 0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = {};
    t.adam_beta1 = 1.0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = {};
    t.batch_size = 0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = {};
    t.epochs = 0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = {};
    t.epochs = 10;
    t.decay_start_epoch = 5;
    CHECK(t.learning_rate_at(4) == 2e-4);
    CHECK(t.learning_rate_at(5) == doctest::Approx(2e-4));
    CHECK(t.learning_rate_at(9) < t.learning_rate_at(6));
    CHECK(t.learning_rate_at(9) > 0.0);
  }

  TEST_CASE("make_batch carries signed frames and hist_rcd targets") {
    const auto clip = random_clip("c", 3, 8, 1);
    const auto pairs = iterate_pairs(clip);
    const auto batch = make_batch(pairs, Domain::kA);
    CHECK((batch.source.sizes() == torch::IntArrayRef{2, 3, 8, 8}));
    CHECK((batch.hist_rcd.sizes() == torch::IntArrayRef{2, 15}));
    CHECK(batch.source.min().item<float>() >= -1.0f);
    const auto rcd = relative_color_distribution(pairs[1].source, pairs[1].reference);
    for (int i = 0; i < 15; ++i) CHECK(batch.hist_rcd[1][i].item<double>() == doctest::Approx(rcd.values[i]));
    CHECK_THROWS_AS(make_batch(std::span<const FramePair>(), Domain::kA), ShapeError);
  }

  TEST_CASE("mislabeled batches are rejected") {
    auto bundle = make_bundle(tiny_config());
    auto x = tiny_batches(1);
    CHECK_THROWS_AS(train_step(bundle, x.b, x.a, x.real_a, x.real_b), DomainError);
    x.real_b.domain = Domain::kA;
    CHECK_THROWS_AS(train_step(bundle, x.a, x.b, x.real_a, x.real_b), DomainError);
    CHECK_THROWS_AS(train_clips(bundle, clips(Domain::kB, 1, 3, 1), clips(Domain::kB, 1, 3, 2)), DomainError);
    CHECK_THROWS_AS(train_clips(bundle, {}, clips(Domain::kB, 1, 3, 2)), DomainError);
  }

  TEST_CASE("a step reports every term and the weighted total") {
    auto bundle = make_bundle(tiny_config());
    const auto x = tiny_batches(2);
    const auto report = train_step(bundle, x.a, x.b, x.real_a, x.real_b);
    CHECK(report.terms.size() == 14);
    for (const auto& [name, value] : report.terms) {
      CHECK(std::isfinite(value));
      CHECK(value >= 0.0);
    }
    double expected = 0;
    for (const auto& name : objective_terms()) expected += term_weight(name, bundle.config.train.weights) * report.at(name);
    CHECK(report.total == doctest::Approx(expected).epsilon(1e-6));
    CHECK(bundle.step == 1);
  }

  TEST_CASE("identical seeds and data give identical reports") {
    auto first = make_bundle(tiny_config(3)), second = make_bundle(tiny_config(3));
    const auto x = tiny_batches(3);
    for (int i = 0; i < 3; ++i) {
      const auto r1 = train_step(first, x.a, x.b, x.real_a, x.real_b);
      const auto r2 = train_step(second, x.a, x.b, x.real_a, x.real_b);
      CHECK(r1.terms == r2.terms);
    }
  }

  TEST_CASE("each phase updates only its own parameters") {
    auto bundle = make_bundle(tiny_config(4));
    const auto x = tiny_batches(4);
    const auto gen = bundle.generator_parameters(), critic = bundle.critic_parameters();
    for (int step = 0; step < 3; ++step) {
      auto gen_before = snapshot(gen), critic_before = snapshot(critic);
      train_step(bundle, x.a, x.b, x.real_a, x.real_b, [&](TrainPhase phase) {
        if (phase == TrainPhase::kGenerator) {
          CHECK(unchanged(critic_before, critic));
          CHECK(all_changed(gen_before, gen));
          gen_before = snapshot(gen);
        } else {
          CHECK(unchanged(gen_before, gen));
          CHECK(all_changed(critic_before, critic));
        }
      });
    }
  }

  TEST_CASE("non-finite losses abort with the offending term") {
    auto bundle = make_bundle(tiny_config());
    auto x = tiny_batches(5);
    x.a.hist_rcd = torch::full_like(x.a.hist_rcd, std::nan(""));
    CHECK_THROWS_WITH_AS(train_step(bundle, x.a, x.b, x.real_a, x.real_b), doctest::Contains("hist_AB"), NumericError);
  }

  TEST_CASE("one epoch runs one step per pair of the longer domain") {
    auto bundle = make_bundle(tiny_config());
    CHECK(run_steps(bundle, clips(Domain::kA, 1, 4, 1), clips(Domain::kB, 1, 4, 2)).size() == 3);
    auto other = make_bundle(tiny_config());
    CHECK(run_steps(other, clips(Domain::kA, 1, 4, 1), clips(Domain::kB, 2, 4, 2)).size() == 6);
    auto batched = make_bundle([] {
      auto c = tiny_config();
      c.train.batch_size = 2;
      return c;
    }());
    CHECK(run_steps(batched, clips(Domain::kA, 1, 4, 1), clips(Domain::kB, 1, 4, 2)).size() == 2);
  }

  TEST_CASE("cycle loss falls on a one-clip toy set") {
    auto config = tiny_config(6);
    config.train.epochs = 67;  // 3 pairs per epoch, 201 steps
    config.train.learning_rate = 1e-3;
    auto bundle = make_bundle(config);
    const auto reports = run_steps(bundle, clips(Domain::kA, 1, 4, 7), clips(Domain::kB, 1, 4, 8));
    REQUIRE(reports.size() > 200);
    MESSAGE("cyc step 0 = " << reports.front().at("cyc") << ", step 200 = " << reports[200].at("cyc"));
    CHECK(reports[200].at("cyc") < reports.front().at("cyc"));
  }

  TEST_CASE("checkpoint round trip") {
    TempDir tmp("ckpt");
    auto config = tiny_config(8);
    config.train.epochs = 2;
    auto bundle = make_bundle(config);
    run_steps(bundle, clips(Domain::kA, 1, 3, 1), clips(Domain::kB, 1, 3, 2));
    save_checkpoint(bundle, tmp.path() / "c.pt");
    auto loaded = load_checkpoint(tmp.path() / "c.pt");
    CHECK(loaded.step == bundle.step);
    CHECK(loaded.epoch == 2);
    CHECK(to_json(loaded.config) == to_json(bundle.config));
    const auto p = bundle.generator_parameters(), q = loaded.generator_parameters();
    REQUIRE(p.size() == q.size());
    for (size_t i = 0; i < p.size(); ++i) CHECK(torch::equal(p[i], q[i]));
    const auto c1 = bundle.critic_parameters(), c2 = loaded.critic_parameters();
    for (size_t i = 0; i < c1.size(); ++i) CHECK(torch::equal(c1[i], c2[i]));

    std::ofstream(tmp.path() / "junk.pt") << "garbage";
    CHECK_THROWS_AS(load_checkpoint(tmp.path() / "junk.pt"), CheckpointError);
    CHECK_THROWS_AS(load_checkpoint(tmp.path() / "missing.pt"), CheckpointError);
  }

  TEST_CASE("resuming from an epoch checkpoint replays the uninterrupted run") {
    TempDir tmp("resume");
    auto config = tiny_config(9);
    config.train.epochs = 5;
    config.train.checkpoint_interval = 2;
    const auto a = clips(Domain::kA, 2, 3, 11), b = clips(Domain::kB, 2, 3, 12);

    auto full = make_bundle(config);
    const auto reference = run_steps(full, a, b, tmp.path() / "full");
    REQUIRE(reference.size() == 20);

    auto resumed = load_checkpoint(tmp.path() / "full" / "checkpoint_epoch_0002.pt");
    CHECK(resumed.step == 8);
    const auto tail = run_steps(resumed, a, b);
    REQUIRE(tail.size() == 12);
    for (size_t i = 0; i < tail.size(); ++i) {
      for (const auto& [name, value] : reference[8 + i].terms) {
        CHECK(std::abs(tail[i].at(name) - value) <= 1e-6 * std::max(1.0, std::abs(value)));
      }
    }
  }

  TEST_CASE("translate_clip keeps order and anchors on the reference") {
    const auto clip = random_clip("c", 5, 8, 3, Domain::kA);
    const PairTranslator identity = [](const torch::Tensor& s, const torch::Tensor& r) { return std::pair{s, r}; };
    const auto same = translate_clip(identity, clip, Direction::kAB);
    REQUIRE(same.size() == 5);
    CHECK(same.domain == Domain::kB);
    for (size_t i = 0; i < 5; ++i) {
      CHECK((same.frames[i].pixels() - clip.frames[i].pixels()).abs().max().item<double>() <= 1e-6);
    }

    auto bundle = make_bundle(tiny_config(10));
    const auto out0 = translate_clip(bundle, clip, Direction::kAB);
    auto moved = clip;
    moved.reference_index = 4;
    const auto out4 = translate_clip(bundle, moved, Direction::kAB);
    CHECK((out0.frames[2].pixels() - out4.frames[2].pixels()).abs().max().item<double>() > 1e-6);

    CHECK_THROWS_AS(translate_clip(bundle, clip, Direction::kBA), DomainError);
    CHECK_THROWS_AS(translate_clip(identity, random_clip("s", 1, 8, 1), Direction::kAB), ShapeError);
  }

  TEST_CASE("direction names") {
    CHECK(parse_direction("ab") == Direction::kAB);
    CHECK(parse_direction("ba") == Direction::kBA);
    CHECK(source_domain(Direction::kBA) == Domain::kB);
    CHECK(target_domain(Direction::kBA) == Domain::kA);
    CHECK_THROWS_AS(parse_direction("sideways"), ConfigError);
  }

  TEST_CASE("train writes metadata, log and checkpoints from manifests") {
    TempDir tmp("train");
    const auto ma = write_clips(clips(Domain::kA, 1, 4, 1), tmp.path() / "a", tmp.path() / "a.json");
    const auto mb = write_clips(clips(Domain::kB, 1, 4, 2), tmp.path() / "b", tmp.path() / "b.json");
    auto config = tiny_config(1);
    config.train.epochs = 2;
    config.train.checkpoint_interval = 1;
    const auto bundle = train(ma, mb, config, tmp.path() / "run");
    CHECK(bundle.step == 6);
    CHECK(fs::exists(tmp.path() / "run" / "final.pt"));
    CHECK(fs::exists(tmp.path() / "run" / "checkpoint_epoch_0001.pt"));
    CHECK(fs::exists(tmp.path() / "run" / "checkpoint_epoch_0002.pt"));

    const auto meta = nlohmann::json::parse(std::ifstream(tmp.path() / "run" / "run.json"));
    CHECK(meta["config"]["train"]["learning_rate"] == 2e-4);
    CHECK(meta["config"]["train"]["adam_beta1"] == 0.5);
    CHECK(meta["config"]["train"]["adam_beta2"] == 0.999);
    CHECK(meta["config"]["train"]["batch_size"] == 1);

    std::ifstream log(tmp.path() / "run" / "log.jsonl");
    int lines = 0;
    for (std::string line; std::getline(log, line);) {
      const auto record = nlohmann::json::parse(line);
      CHECK(record.contains("cyc"));
      CHECK(record.contains("total"));
      ++lines;
    }
    CHECK(lines == 6);

    auto mismatched = config;
    mismatched.model.base_channels = 16;
    CHECK_THROWS_AS(train(ma, mb, mismatched, tmp.path() / "bad", tmp.path() / "run" / "final.pt"), ConfigError);

    const auto wrong = write_clips(clips(Domain::kA, 1, 4, 3), tmp.path() / "w", tmp.path() / "w.json");
    CHECK_THROWS_AS(train(ma, wrong, config, tmp.path() / "bad2"), DomainError);
  }
}
