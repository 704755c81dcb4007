// mash: fit, sample, evaluate and inspect MASH shape representations.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mash/fitting.hpp"
#include "mash/io.hpp"
#include "mash/metrics.hpp"
#include "mash/orientation.hpp"
#include "mash/parallel.hpp"
#include "mash/sampler.hpp"

namespace {

using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

void apply_threads(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("MASH_THREADS")) threads = std::atoi(env);
  }
  mash::set_thread_count(threads > 0 ? threads : 0);
}

struct FitArgs {
  std::string input;
  std::string out;
  std::string report;
  std::size_t anchors = 400;
  int sh_degree = 2;
  int mask_degree = 3;
  int n_dir = mash::kDefaultDirections;
  int max_iters = 2000;
  std::uint64_t seed = 0;
  int threads = 0;
  bool quiet = false;
};

int run_fit(const FitArgs& a) {
  const mash::PointCloud cloud = mash::load_cloud(a.input);
  if (cloud.points.size() < a.anchors) {
    std::cerr << "error: " << cloud.points.size() << " input points is fewer than " << a.anchors
              << " anchors\n";
    return kExitError;
  }
  const mash::NormalizedCloud normalized = mash::normalize(cloud.points);

  mash::FitConfig cfg;
  cfg.anchors = a.anchors;
  cfg.sh_degree = a.sh_degree;
  cfg.mask_degree = a.mask_degree;
  cfg.n_dir = a.n_dir;
  cfg.max_iters = a.max_iters;
  cfg.seed = a.seed;
  if (!a.quiet) {
    cfg.on_iteration = [](const mash::IterationRecord& r) {
      if (r.iteration % 100 == 0) {
        std::cerr << "iter " << r.iteration << "  L=" << r.total << "  L_f=" << r.terms.fit
                  << "  coverage=" << r.coverage << "  stage=" << r.stage << '\n';
      }
    };
  }
  const mash::FitResult result = mash::fit(normalized.points, cfg);
  mash::save_mash(a.out, mash::denormalize_model(result.model, normalized.transform));
  if (!a.report.empty()) {
    std::ofstream csv(a.report);
    if (!csv) throw std::runtime_error("cannot write '" + a.report + "'");
    result.report.write_csv(csv);
  }
  if (!a.quiet) {
    std::cerr << (result.report.converged ? "converged" : "max iterations reached") << " after "
              << result.report.iterations.size() << " iterations\n";
  }
  return result.report.converged ? kExitOk : kExitNotConverged;
}

struct SampleArgs {
  std::string model;
  std::string out;
  int n_dir = 0;
  bool normals = false;
  int threads = 0;
};

int run_sample(const SampleArgs& a) {
  const mash::MashModel model = mash::load_mash(a.model);
  mash::SampleOptions opts;
  opts.n_dir = a.n_dir > 0 ? a.n_dir : model.n_dir;
  opts.with_normals = a.normals;
  const mash::SampleSet samples = mash::sample_model(model, opts);
  if (samples.total_points() == 0) {
    std::cerr << "error: model produced no samples\n";
    return kExitError;
  }
  if (a.normals) {
    mash::export_oriented_ply(mash::orient_samples(samples), a.out);
  } else {
    mash::write_file(a.out, mash::encode_ply(samples.all_points()));
  }
  return kExitOk;
}

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string out;
  double tau = mash::kDefaultFscoreTau;
  int threads = 0;
};

int run_eval(const EvalArgs& a) {
  const mash::PointCloud pred = mash::load_cloud(a.pred);
  const mash::PointCloud gt = mash::load_cloud(a.gt);
  if (pred.points.empty() || gt.points.empty()) {
    std::cerr << "error: empty point set\n";
    return kExitError;
  }
  // Both sets share the ground truth's normalisation.
  const mash::NormalizedCloud gt_n = mash::normalize(gt.points);
  std::vector<mash::Vec3> pred_n;
  pred_n.reserve(pred.points.size());
  for (const auto& p : pred.points) pred_n.push_back(gt_n.transform.apply(p));

  json j;
  j["cd_l1_x1000"] = 1000.0 * mash::chamfer_l1(pred_n, gt_n.points);
  j["cd_l2_x1000"] = 1000.0 * mash::chamfer_l2(pred_n, gt_n.points);
  j["fscore"] = mash::fscore(pred_n, gt_n.points, a.tau);
  j["tau"] = a.tau;
  j["hausdorff"] = mash::hausdorff(pred_n, gt_n.points);
  if (!pred.normals.empty() && !gt.normals.empty()) {
    j["s_cos"] = mash::normal_cosine(pred_n, pred.normals, gt_n.points, gt.normals);
  } else {
    j["s_cos"] = nullptr;
  }
  j["pred_points"] = pred.points.size();
  j["gt_points"] = gt.points.size();
  const std::string text = j.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    mash::write_file(a.out, text);
  }
  return kExitOk;
}

struct InfoArgs {
  std::string model;
  bool json_mode = false;
};

int run_info(const InfoArgs& a) {
  const mash::MashModel model = mash::load_mash(a.model);
  json anchors = json::array();
  double mean_c00 = 0.0;
  double mean_alpha = 0.0;
  for (const mash::Anchor& anchor : model.anchors) {
    const double alpha = mash::mask_angle(anchor, 0.0);
    mean_c00 += anchor.sh_coeffs[0];
    mean_alpha += alpha;
    anchors.push_back({{"position", {anchor.position.x(), anchor.position.y(), anchor.position.z()}},
                       {"rotation_angle", anchor.rotvec.norm()},
                       {"c00", anchor.sh_coeffs[0]},
                       {"mask_a0", anchor.mask_coeffs[0]}});
  }
  mean_c00 /= static_cast<double>(model.size());
  mean_alpha /= static_cast<double>(model.size());

  if (a.json_mode) {
    json j;
    j["anchors"] = model.size();
    j["mask_degree"] = model.mask_degree;
    j["sh_degree"] = model.sh_degree;
    j["n_dir"] = model.n_dir;
    j["param_count"] = model.param_count();
    j["mean_c00"] = mean_c00;
    j["mean_mask_angle_at_phi0"] = mean_alpha;
    j["per_anchor"] = anchors;
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "M = " << model.size() << "\nK = " << model.mask_degree
              << "\nL = " << model.sh_degree << "\nn_dir = " << model.n_dir
              << "\nN = " << model.param_count() << "\nmean C_0^0 = " << mean_c00
              << "\nmean mask angle at phi=0 = " << mean_alpha << " rad\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MASH: masked anchored spherical distance fitting"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "fit a MASH model to a point cloud");
  fit->add_option("--input", fit_args.input, "input point cloud (.ply/.obj/.xyz)")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--out", fit_args.out, "output .mash file")->required();
  fit->add_option("--report", fit_args.report, "per-iteration CSV report");
  fit->add_option("--anchors", fit_args.anchors, "anchor count M")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24));
  fit->add_option("--sh-degree", fit_args.sh_degree, "SH degree L")->check(CLI::Range(0, 6));
  fit->add_option("--mask-degree", fit_args.mask_degree, "mask degree K")->check(CLI::Range(0, 64));
  fit->add_option("--ndir", fit_args.n_dir, "pre-sampled directions per anchor")
      ->check(CLI::Range(16, 1 << 22));
  fit->add_option("--max-iters", fit_args.max_iters, "iteration limit")
      ->check(CLI::Range(1, 1 << 30));
  fit->add_option("--seed", fit_args.seed, "random seed");
  fit->add_option("--threads", fit_args.threads, "worker threads (default: MASH_THREADS or all cores)");
  fit->add_flag("--quiet", fit_args.quiet, "suppress progress output");

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "sample points (and oriented normals) from a model");
  sample->add_option("--model", sample_args.model, "input .mash file")->required();
  sample->add_option("--out", sample_args.out, "output .ply")->required();
  sample->add_option("--ndir", sample_args.n_dir, "directions per anchor (default: model's)")
      ->check(CLI::Range(16, 1 << 22));
  sample->add_flag("--normals", sample_args.normals, "export globally oriented normals");
  sample->add_option("--threads", sample_args.threads, "worker threads");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "compare predicted and ground-truth point sets");
  eval->add_option("--pred", eval_args.pred, "predicted points")->required()->check(CLI::ExistingFile);
  eval->add_option("--gt", eval_args.gt, "ground-truth points")->required()->check(CLI::ExistingFile);
  eval->add_option("--tau", eval_args.tau, "F-score distance threshold (normalised units)")
      ->check(CLI::PositiveNumber);
  eval->add_option("--out", eval_args.out, "output JSON (default: stdout)");
  eval->add_option("--threads", eval_args.threads, "worker threads");

  InfoArgs info_args;
  auto* info = app.add_subcommand("info", "print model dimensions and statistics");
  info->add_option("--model", info_args.model, "input .mash file")->required();
  info->add_flag("--json", info_args.json_mode, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*fit) {
      apply_threads(fit_args.threads);
      return run_fit(fit_args);
    }
    if (*sample) {
      apply_threads(sample_args.threads);
      return run_sample(sample_args);
    }
    if (*eval) {
      apply_threads(eval_args.threads);
      return run_eval(eval_args);
    }
    if (*info) return run_info(info_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
