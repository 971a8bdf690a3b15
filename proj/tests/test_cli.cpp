#include <cstdlib>
#include <fstream>

#include "doctest_torch.hpp"
#include "json.hpp"
#include "test_support.hpp"
#include "videogan/cli.hpp"
#include "videogan/data_pipeline.hpp"
#include "videogan/image_io.hpp"

using namespace videogan;
using videogan::testing::TempDir;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) { return cli::run(args); }

nlohmann::json read_json(const fs::path& path) { return nlohmann::json::parse(std::ifstream(path)); }

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> tiny_model_flags() {
  return {"--frame-size", "16", "--base-channels", "8", "--bottleneck-channels", "16", "--stages", "2",
          "--critic-channels", "8"};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors") {
    CHECK(run({}) == cli::kExitUsage);
    CHECK(run({"frobnicate"}) == cli::kExitUsage);
    CHECK(run({"gradcheck", "--no-such-flag"}) == cli::kExitUsage);
    CHECK(run({"train", "--domain-a", "x.json"}) == cli::kExitUsage);
    CHECK(run({"train", "--domain-a", "a", "--domain-b", "b", "--fusion", "sideways"}) == cli::kExitUsage);
    CHECK(run({"--help"}) == cli::kExitOk);
  }

  TEST_CASE("gradcheck passes and writes its records") {
    TempDir tmp("cli_gradcheck");
    CHECK(run({"gradcheck", "--out", tmp.path().string()}) == cli::kExitOk);
    const auto rows = read_json(tmp.path() / "gradcheck.json");
    CHECK(rows.size() >= 8);
    for (const auto& row : rows) {
      CHECK(row["passed"] == true);
      CHECK(row["max_relative_error"].get<double>() <= 1e-4);
    }
    CHECK(read_json(tmp.path() / "resolved_config.json")["subcommand"] == "gradcheck");
  }

  TEST_CASE("synth, train, translate, evaluate") {
    TempDir tmp("cli_pipeline");
    const auto s = tmp.path() / "synth";
    REQUIRE(run({"synth", "--clips", "2", "--frames", "3", "--heldout", "1", "--frame-size", "16", "--seed", "4",
                 "--out", s.string()}) == cli::kExitOk);
    for (const char* f : {"domain_a.json", "domain_b.json", "heldout_a.json", "heldout_a_truth.json", "transform.json",
                          "resolved_config.json"}) {
      CHECK(fs::exists(s / f));
    }

    auto train_args = std::vector<std::string>{"train", "--domain-a", (s / "domain_a.json").string(), "--domain-b",
                                               (s / "domain_b.json").string(), "--epochs", "1", "--seed", "2",
                                               "--out", (tmp.path() / "run").string()};
    const auto model = tiny_model_flags();
    train_args.insert(train_args.end(), model.begin(), model.end());
    REQUIRE(run(train_args) == cli::kExitOk);
    CHECK(fs::exists(tmp.path() / "run" / "final.pt"));
    CHECK(fs::exists(tmp.path() / "run" / "log.jsonl"));
    const auto resolved = read_json(tmp.path() / "run" / "resolved_config.json");
    CHECK(resolved["train"]["epochs"] == 1);
    CHECK(resolved["model"]["frame_size"] == 16);

    const auto ckpt = (tmp.path() / "run" / "final.pt").string();
    CHECK(run({"translate", "--checkpoint", ckpt, "--manifest", (s / "heldout_a.json").string(), "--direction", "ab",
               "--out", (tmp.path() / "tr").string()}) == cli::kExitOk);
    const auto translated = load_manifest(tmp.path() / "tr" / "translated.json");
    CHECK(translated.clips.size() == 1);
    CHECK(translated.clips[0].domain == Domain::kB);

    // Domain-A clips cannot be translated B -> A.
    CHECK(run({"translate", "--checkpoint", ckpt, "--manifest", (s / "heldout_a.json").string(), "--direction", "ba",
               "--out", (tmp.path() / "tr2").string()}) == cli::kExitRuntime);

    CHECK(run({"evaluate", "--checkpoint", ckpt, "--manifest", (s / "heldout_a.json").string(), "--ground-truth",
               (s / "heldout_a_truth.json").string(), "--out", (tmp.path() / "ev").string()}) == cli::kExitOk);
    const auto report = read_json(tmp.path() / "ev" / "report.json");
    CHECK(report["clips"].size() == 1);
    CHECK(report["clips"][0].contains("color_target_error"));
    CHECK(fs::exists(tmp.path() / "ev" / "heldout0_grid.png"));

    CHECK(run({"evaluate", "--checkpoint", (tmp.path() / "nope.pt").string(), "--manifest",
               (s / "heldout_a.json").string(), "--out", (tmp.path() / "ev2").string()}) == cli::kExitRuntime);
  }

  TEST_CASE("config layering: defaults < file < flags") {
    TempDir tmp("cli_config");
    const auto s = tmp.path() / "synth";
    REQUIRE(run({"synth", "--clips", "1", "--frames", "2", "--heldout", "0", "--frame-size", "16", "--out",
                 s.string()}) == cli::kExitOk);
    std::ofstream(tmp.path() / "cfg.json")
        << R"({"train": {"learning_rate": 0.001, "epochs": 7}, "model": {"fusion_mode": "none"}})";
    auto args = std::vector<std::string>{"train", "--domain-a", (s / "domain_a.json").string(), "--domain-b",
                                         (s / "domain_b.json").string(), "--config", (tmp.path() / "cfg.json").string(),
                                         "--epochs", "1", "--out", (tmp.path() / "run").string()};
    const auto model = tiny_model_flags();
    args.insert(args.end(), model.begin(), model.end());
    REQUIRE(run(args) == cli::kExitOk);
    const auto resolved = read_json(tmp.path() / "run" / "resolved_config.json");
    CHECK(resolved["train"]["learning_rate"] == 0.001);
    CHECK(resolved["train"]["epochs"] == 1);
    CHECK(resolved["train"]["adam_beta1"] == 0.5);
    CHECK(resolved["model"]["fusion_mode"] == "none");

    std::ofstream(tmp.path() / "bad.json") << R"({"train": {"learning_rat": 0.001}})";
    args[6] = (tmp.path() / "bad.json").string();
    CHECK(run(args) == cli::kExitRuntime);
  }

  TEST_CASE("seeded runs are reproducible") {
    TempDir tmp("cli_seed");
    for (const char* dir : {"x", "y"}) {
      REQUIRE(run({"synth", "--clips", "2", "--frames", "2", "--heldout", "0", "--frame-size", "16", "--seed", "9",
                   "--out", (tmp.path() / dir).string()}) == cli::kExitOk);
    }
    const auto mx = load_manifest(tmp.path() / "x" / "domain_b.json");
    const auto my = load_manifest(tmp.path() / "y" / "domain_b.json");
    REQUIRE(mx.clips.size() == my.clips.size());
    for (size_t c = 0; c < mx.clips.size(); ++c) {
      CHECK(mx.clips[c].id == my.clips[c].id);
      CHECK(slurp(mx.root_path / mx.clips[c].frames[1]) == slurp(my.root_path / my.clips[c].frames[1]));
    }
  }

  TEST_CASE("prepare builds a manifest from clip folders") {
    TempDir tmp("cli_prepare");
    for (const char* clip : {"first", "second"}) {
      for (int f = 0; f < 3; ++f) {
        write_frame(videogan::testing::random_frame(8, 8, f), tmp.path() / "frames" / clip / (std::to_string(f) + ".png"));
      }
    }
    REQUIRE(run({"prepare", "--frames-dir", (tmp.path() / "frames").string(), "--domain", "B", "--out",
                 (tmp.path() / "out").string()}) == cli::kExitOk);
    const auto manifest = load_manifest(tmp.path() / "out" / "manifest.json");
    CHECK(manifest.clips.size() == 2);
    CHECK(manifest.frame_count() == 6);
    CHECK(manifest.clips[0].domain == Domain::kB);
    CHECK(run({"prepare", "--frames-dir", (tmp.path() / "missing").string(), "--domain", "A", "--out",
               (tmp.path() / "out2").string()}) == cli::kExitRuntime);
  }

  TEST_CASE("output root comes from the environment") {
    TempDir tmp("cli_env");
    ::setenv(cli::kOutputRootEnv, tmp.path().c_str(), 1);
    CHECK(run({"gradcheck"}) == cli::kExitOk);
    ::unsetenv(cli::kOutputRootEnv);
    CHECK(fs::exists(tmp.path() / "gradcheck" / "resolved_config.json"));
  }
}
