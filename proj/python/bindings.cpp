#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "videogan/cli.hpp"
#include "videogan/config.hpp"
#include "videogan/data_pipeline.hpp"
#include "videogan/errors.hpp"
#include "videogan/evaluation.hpp"
#include "videogan/histogram.hpp"
#include "videogan/losses.hpp"
#include "videogan/trainer.hpp"
#include "videogan/verification.hpp"

namespace py = pybind11;
using namespace videogan;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

torch::Tensor to_tensor(const FloatArray& array) {
  std::vector<int64_t> shape(array.shape(), array.shape() + array.ndim());
  return torch::from_blob(const_cast<float*>(array.data()), shape, torch::kFloat32).clone();
}

torch::Tensor to_tensor(const DoubleArray& array) {
  std::vector<int64_t> shape(array.shape(), array.shape() + array.ndim());
  return torch::from_blob(const_cast<double*>(array.data()), shape, torch::kFloat64).clone();
}

py::array to_numpy(const torch::Tensor& tensor) {
  const auto t = tensor.detach().contiguous();
  std::vector<py::ssize_t> shape(t.sizes().begin(), t.sizes().end());
  if (t.scalar_type() == torch::kFloat64) {
    py::array_t<double> out(shape);
    std::memcpy(out.mutable_data(), t.data_ptr<double>(), static_cast<size_t>(t.numel()) * sizeof(double));
    return out;
  }
  const auto f = t.to(torch::kFloat32).contiguous();
  py::array_t<float> out(shape);
  std::memcpy(out.mutable_data(), f.data_ptr<float>(), static_cast<size_t>(f.numel()) * sizeof(float));
  return out;
}

Frame to_frame(const FloatArray& array) { return Frame(to_tensor(array), RangeTag::kUnit); }

VideoClip to_clip(const FloatArray& frames, int reference_index = 0, Domain domain = Domain::kA) {
  const auto t = to_tensor(frames);
  if (t.dim() != 4) throw ShapeError("clip arrays must have shape (N, 3, H, W)");
  VideoClip clip{"clip", domain, {}, reference_index};
  for (int64_t i = 0; i < t.size(0); ++i) clip.frames.emplace_back(t[i], RangeTag::kUnit);
  clip.validate();
  return clip;
}

py::array clip_to_numpy(const VideoClip& clip) {
  std::vector<torch::Tensor> frames;
  for (const auto& f : clip.frames) frames.push_back(f.to_unit().pixels());
  return to_numpy(torch::stack(frames));
}

py::array histogram_array(const std::vector<double>& values, int bins) {
  py::array_t<double> out({3, bins});
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

ColorTransformSpec transform_from(const std::array<double, 3>& gain, const std::array<double, 3>& bias,
                                  const std::array<double, 3>& gamma) {
  ColorTransformSpec spec{gain, bias, gamma};
  spec.validate();
  return spec;
}

// Python-facing wrapper around a trained (or freshly initialized) bundle.
class Model {
 public:
  explicit Model(std::shared_ptr<ModelBundle> bundle) : bundle_(std::move(bundle)) {}

  static Model create(int frame_size, int base_channels, int bottleneck_channels, int downsample_stages,
                      int critic_channels, const std::string& fusion, uint64_t seed) {
    RunConfig config;
    config.model.frame_size = frame_size;
    config.model.base_channels = base_channels;
    config.model.bottleneck_channels = bottleneck_channels;
    config.model.downsample_stages = downsample_stages;
    config.model.critic_channels = critic_channels;
    config.model.fusion_mode = parse_fusion_mode(fusion);
    config.train.seed = seed;
    return Model(std::make_shared<ModelBundle>(make_bundle(config)));
  }

  static Model load(const std::filesystem::path& path) {
    return Model(std::make_shared<ModelBundle>(load_checkpoint(path)));
  }

  void save(const std::filesystem::path& path) const { save_checkpoint(*bundle_, path); }

  py::array translate_clip(const FloatArray& frames, const std::string& direction, int reference_index) {
    const auto dir = parse_direction(direction);
    const auto clip = to_clip(frames, reference_index, source_domain(dir));
    VideoClip out;
    {
      py::gil_scoped_release release;
      out = videogan::translate_clip(*bundle_, clip, dir);
    }
    return clip_to_numpy(out);
  }

  int64_t generator_parameter_count() const { return parameter_count(*bundle_->nets.g_ab); }
  std::string config_json() const { return to_json(bundle_->config).dump(); }
  int64_t step() const { return bundle_->step; }
  int epoch() const { return bundle_->epoch; }

 private:
  std::shared_ptr<ModelBundle> bundle_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Unpaired video-to-video translation: histograms, losses, metrics and models";

  static py::exception<Error> base(m, "VideoganError", PyExc_RuntimeError);
  py::register_exception<ManifestError>(m, "ManifestError", base.ptr());
  py::register_exception<ImageError>(m, "ImageError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<RangeError>(m, "RangeError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<CheckpointError>(m, "CheckpointError", base.ptr());

  m.attr("DIRECTIONS") = py::make_tuple("ab", "ba");

  // Histograms.
  m.def(
      "channel_histogram",
      [](const FloatArray& frame, int bins) { return histogram_array(channel_histogram(to_frame(frame), bins).mass, bins); },
      py::arg("frame"), py::arg("bins") = kHistogramBins,
      "Per-channel histogram, shape (3, bins); each row sums to 1.");
  m.def(
      "channel_histogram_counts",
      [](const FloatArray& frame, int bins) {
        const auto counts = channel_histogram_counts(to_frame(frame), bins);
        py::array_t<int64_t> out({3, bins});
        std::copy(counts.begin(), counts.end(), out.mutable_data());
        return out;
      },
      py::arg("frame"), py::arg("bins") = kHistogramBins);
  m.def(
      "absolute_histogram", [](const FloatArray& frame) { return absolute_histogram(to_frame(frame)).values; },
      py::arg("frame"), "15-element absolute histogram vector.");
  m.def(
      "relative_color_distribution",
      [](const FloatArray& source, const FloatArray& reference) {
        return relative_color_distribution(to_frame(source), to_frame(reference)).values;
      },
      py::arg("source"), py::arg("reference"), "hist(reference) - hist(source), 15 values.");
  m.def(
      "soft_channel_histogram",
      [](const DoubleArray& pixels, int bins, double temperature) {
        return to_numpy(soft_channel_histogram(to_tensor(pixels), bins, temperature));
      },
      py::arg("pixels"), py::arg("bins") = kHistogramBins, py::arg("temperature") = 0.05);

  // Losses on numpy inputs; each returns a float.
  auto scalar = [](const torch::Tensor& t) { return t.item<double>(); };
  m.def("adversarial_g", [=](const DoubleArray& fake) { return scalar(adversarial_g(to_tensor(fake))); },
        py::arg("scores_fake"));
  m.def(
      "adversarial_d",
      [=](const DoubleArray& real, const DoubleArray& fake) {
        return scalar(adversarial_d(to_tensor(real), to_tensor(fake)));
      },
      py::arg("scores_real"), py::arg("scores_fake"));
  m.def(
      "cycle_loss",
      [=](const DoubleArray& s, const DoubleArray& r, const DoubleArray& rs, const DoubleArray& rr) {
        return scalar(cycle_loss(to_tensor(s), to_tensor(r), to_tensor(rs), to_tensor(rr)));
      },
      py::arg("source"), py::arg("reference"), py::arg("reconstructed_source"), py::arg("reconstructed_reference"));
  m.def(
      "identity_loss",
      [=](const DoubleArray& os, const DoubleArray& orf, const DoubleArray& s, const DoubleArray& r) {
        return scalar(identity_loss(to_tensor(os), to_tensor(orf), to_tensor(s), to_tensor(r)));
      },
      py::arg("output_source"), py::arg("output_reference"), py::arg("source"), py::arg("reference"));
  m.def(
      "hist_loss",
      [=](const DoubleArray& pred, const DoubleArray& target) {
        return scalar(hist_loss(to_tensor(pred), to_tensor(target)));
      },
      py::arg("hist_pred"), py::arg("target"));
  m.def("intra_video_g", [=](const DoubleArray& fake) { return scalar(intra_video_g(to_tensor(fake))); },
        py::arg("iv_fake"));
  m.def(
      "intra_video_c",
      [=](const DoubleArray& real, const DoubleArray& fake) {
        return scalar(intra_video_c(to_tensor(real), to_tensor(fake)));
      },
      py::arg("iv_real"), py::arg("iv_fake"));
  m.def(
      "total_objective",
      [](const std::map<std::string, double>& terms, const std::array<double, 5>& weights) {
        LossReport report;
        report.terms = terms;
        return total_objective(report, LossWeights{weights[0], weights[1], weights[2], weights[3], weights[4]});
      },
      py::arg("terms"), py::arg("weights") = std::array<double, 5>{1.0, 10.0, 5.0, 1.0, 1.0},
      "Weighted sum of the eight generator terms; weights are (adv, cyc, idt, hist, iv).");

  // Data and metrics.
  m.def(
      "apply_color_transform",
      [](const FloatArray& frames, const std::array<double, 3>& gain, const std::array<double, 3>& bias,
         const std::array<double, 3>& gamma) {
        const auto spec = transform_from(gain, bias, gamma);
        const auto t = to_tensor(frames);
        if (t.dim() == 3) return to_numpy(apply_color_transform(Frame(t, RangeTag::kUnit), spec).pixels());
        return clip_to_numpy(apply_color_transform(to_clip(frames), spec));
      },
      py::arg("frames"), py::arg("gain") = std::array<double, 3>{1, 1, 1},
      py::arg("bias") = std::array<double, 3>{0, 0, 0}, py::arg("gamma") = std::array<double, 3>{1, 1, 1});
  m.def(
      "intra_video_consistency", [](const FloatArray& clip) { return intra_video_consistency(to_clip(clip)); },
      py::arg("clip"));
  m.def(
      "structural_similarity",
      [](const FloatArray& a, const FloatArray& b) { return structural_similarity(to_frame(a), to_frame(b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "content_preservation",
      [](const FloatArray& original, const FloatArray& translated) {
        return content_preservation(to_clip(original), to_clip(translated));
      },
      py::arg("original"), py::arg("translated"));
  m.def(
      "color_transfer_error",
      [](const FloatArray& translated, const FloatArray& truth) {
        return color_transfer_error(to_clip(translated), to_clip(truth));
      },
      py::arg("translated"), py::arg("ground_truth"));
  m.def(
      "hist_rcd_preservation",
      [](const FloatArray& original, const FloatArray& translated, int reference_index) {
        return hist_rcd_preservation(to_clip(original, reference_index), to_clip(translated, reference_index));
      },
      py::arg("original"), py::arg("translated"), py::arg("reference_index") = 0);
  m.def(
      "load_manifest",
      [](const std::filesystem::path& path) {
        const auto manifest = videogan::load_manifest(path);
        py::list clips;
        for (const auto& c : manifest.clips) {
          py::dict entry;
          entry["id"] = c.id;
          entry["domain"] = to_string(c.domain);
          entry["frames"] = c.frames;
          entry["reference_index"] = c.reference_index;
          clips.append(entry);
        }
        py::dict out;
        out["root"] = manifest.root_path;
        out["clips"] = clips;
        return out;
      },
      py::arg("path"));

  py::class_<GradcheckRow>(m, "GradcheckRow")
      .def_readonly("name", &GradcheckRow::name)
      .def_readonly("elements", &GradcheckRow::elements)
      .def_readonly("max_relative_error", &GradcheckRow::max_relative_error)
      .def_readonly("passed", &GradcheckRow::passed);
  m.def("run_gradcheck", &run_gradcheck_suite, py::arg("seed") = 0, py::arg("tolerance") = 1e-4,
        py::call_guard<py::gil_scoped_release>());

  py::class_<Model>(m, "Model")
      .def_static("create", &Model::create, py::arg("frame_size") = 64, py::arg("base_channels") = 16,
                  py::arg("bottleneck_channels") = 128, py::arg("downsample_stages") = 3,
                  py::arg("critic_channels") = 16, py::arg("fusion") = "dense", py::arg("seed") = 0)
      .def_static("load", &Model::load, py::arg("path"))
      .def("save", &Model::save, py::arg("path"))
      .def("translate_clip", &Model::translate_clip, py::arg("frames"), py::arg("direction") = "ab",
           py::arg("reference_index") = 0)
      .def_property_readonly("generator_parameter_count", &Model::generator_parameter_count)
      .def_property_readonly("config_json", &Model::config_json)
      .def_property_readonly("step", &Model::step)
      .def_property_readonly("epoch", &Model::epoch);

  m.def(
      "cli_run",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return cli::run(args);
      },
      py::arg("args"), "Runs one command-line subcommand and returns its exit status.");
}
