// Runs the release acceptance checks and prints one PASS/FAIL line per check.
// Exit status is the number of failing checks (0 when all pass).

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mash/fitting.hpp"
#include "mash/io.hpp"
#include "mash/metrics.hpp"
#include "mash/orientation.hpp"
#include "mash/patch.hpp"
#include "mash/sampler.hpp"
#include "mash/sh_basis.hpp"
#include "support/gradcheck.hpp"
#include "support/shapes.hpp"

namespace {

namespace fs = std::filesystem;
using mash::Vec3;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "mash_acceptance";
  fs::create_directories(dir);
  return dir;
}

// Fitted shape with its dense reference surface, both in normalised coordinates.
struct ShapeRun {
  mash::FitResult result;
  std::vector<Vec3> dense_gt;
  double seconds = 0.0;
  double cd_x1000 = 0.0;
  double fscore = 0.0;
};

ShapeRun fit_shape(const std::vector<Vec3>& input, const std::vector<Vec3>& dense, std::size_t anchors,
                   int max_iters) {
  ShapeRun run;
  const auto normalized = mash::normalize(input);
  for (const Vec3& p : dense) run.dense_gt.push_back(normalized.transform.apply(p));
  mash::FitConfig cfg;
  cfg.anchors = anchors;
  cfg.max_iters = max_iters;
  cfg.seed = 1;
  const auto t0 = Clock::now();
  run.result = mash::fit(normalized.points, cfg);
  run.seconds = seconds_since(t0);
  mash::SampleOptions opt;
  opt.n_dir = 4000;
  const auto pred = mash::sample_model(run.result.model, opt).all_points();
  run.cd_x1000 = 1000.0 * mash::chamfer_l1(pred, run.dense_gt);
  run.fscore = mash::fscore(pred, run.dense_gt, 0.01);
  return run;
}

constexpr std::size_t kDensePoints = 300000;

std::optional<ShapeRun> g_sphere;

const ShapeRun& sphere_run() {
  if (!g_sphere) {
    g_sphere = fit_shape(mash::testing::sample_sphere(4096, 1.0, 101),
                         mash::testing::sample_sphere(kDensePoints, 1.0, 102), 20, 1000);
  }
  return *g_sphere;
}

Outcome gradient_check() {
  std::mt19937_64 rng(20240);
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t coords = 0;
  for (int t = 0; t < 20; ++t) {
    const auto model = mash::testing::random_model(4, mash::ShDegree(2), 3, 100, rng);
    const mash::TargetCloud targets(mash::testing::random_points(200, 1.0, rng));
    const auto sel = mash::select_rays(model, mash::fibonacci_presample(100), 12);
    const auto res = mash::testing::check_gradient(model, sel, targets, {1.0, 0.75, 0.5}, 1e-5);
    worst = std::max(worst, res.worst_rel);
    coords += res.checked;
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0 && coords == 20 * 4 * 22,
          "max rel err " + fmt("%.3g", worst) + " over " + std::to_string(coords) + " coords, " +
              fmt("%.1f", secs) + " s"};
}

Outcome parameter_count() {
  const auto model = mash::MashModel::zeros(400, mash::ShDegree(2), 3, 4000);
  const std::size_t n = model.param_count();
  const std::size_t bytes = mash::encode_mash(model).size();
  const bool sizes_ok = bytes == 70424 && mash::mash_file_size(400, 3, 2) == 70424;
  return {n == 8800 && mash::param_count(400, 3, 2) == 8800 && sizes_ok,
          "N = " + std::to_string(n) + ", file " + std::to_string(bytes) + " bytes"};
}

Outcome sh_orthonormality() {
  const mash::ShDegree d(2);
  const int n = 1'000'000;
  std::mt19937_64 rng(77);
  std::vector<double> gram(81, 0.0), y(9);
  for (int s = 0; s < n; ++s) {
    const Vec3 u = mash::testing::random_unit(rng);
    const double theta = std::acos(std::clamp(u.z(), -1.0, 1.0));
    const double phi = mash::wrap_two_pi(std::atan2(u.y(), u.x()));
    mash::eval_basis(d, theta, phi, y);
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j) gram[i * 9 + j] += y[i] * y[j];
  }
  double worst = 0.0;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j)
      worst = std::max(worst, std::abs(gram[i * 9 + j] * 4.0 * mash::kPi / n - (i == j ? 1.0 : 0.0)));
  return {worst < 5e-3, "max |G - I| " + fmt("%.2e", worst) + " with 1e6 samples"};
}

Outcome inversion_and_slerp() {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> u(-1.0, 1.0), u01(0.0, 1.0), uphi(0.0, 2 * mash::kPi);
  double worst_inv = 0.0, worst_angle = 0.0;
  int inv = 0;
  while (inv < 10000) {
    const auto a = mash::testing::random_anchor(mash::ShDegree(2), 3, rng);
    const double h = a.sh_coeffs[0] * mash::inversion_center_scale(mash::InversionCenter::constant_distance);
    const Vec3 q(u(rng), u(rng), u(rng));
    if ((q - Vec3(0, 0, -h)).norm() < 0.05) continue;
    const Vec3 back = mash::inverse_transform_point(a, mash::inverse_transform_point(a, q));
    worst_inv = std::max(worst_inv, (back - q).norm());
    ++inv;
  }
  for (int t = 0; t < 10000; ++t) {
    const auto a = mash::testing::random_anchor(mash::ShDegree(2), 3, rng);
    const mash::RayParam ray{u01(rng), uphi(rng), 0.0};
    const Vec3 r = mash::ray_direction(a, ray);
    const double angle = std::atan2(Vec3::UnitZ().cross(r).norm(), r.z());
    worst_angle = std::max(worst_angle, std::abs(angle - ray.omega * mash::mask_angle(a, ray.phi)));
  }
  return {worst_inv < 1e-9 && worst_angle < 1e-10,
          "involution err " + fmt("%.2e", worst_inv) + ", angle err " + fmt("%.2e", worst_angle)};
}

Outcome fibonacci_caps() {
  const int n = 4000;
  const auto dirs = mash::fibonacci_presample(n);
  std::vector<Vec3> units;
  for (const auto& d : dirs)
    units.emplace_back(std::sin(d.theta) * std::cos(d.phi), std::sin(d.theta) * std::sin(d.phi),
                       std::cos(d.theta));
  std::mt19937_64 rng(5);
  std::vector<Vec3> axes = {Vec3::UnitZ(), -Vec3::UnitZ(), Vec3::UnitX()};
  for (int i = 0; i < 7; ++i) axes.push_back(mash::testing::random_unit(rng));
  double worst = 0.0;
  // Caps of half-angle 60 degrees hold a quarter of the sphere.
  const double expected = 0.25 * n;
  for (const Vec3& axis : axes) {
    int count = 0;
    for (const Vec3& v : units) count += v.dot(axis) > 0.5;
    worst = std::max(worst, std::abs(count - expected) / expected);
  }
  return {worst <= 0.02, "worst cap deviation " + fmt("%.2f", 100 * worst) + "% over " +
                             std::to_string(axes.size()) + " caps"};
}

Outcome desk_fitting() {
  std::ostringstream detail;
  bool pass = true;
  const ShapeRun& s = sphere_run();
  const bool sphere_ok = s.cd_x1000 < 5.0 && s.result.report.iterations.size() <= 1000 && s.seconds < 600;
  pass &= sphere_ok;
  detail << "sphere CD " << fmt("%.2f", s.cd_x1000) << " (" << s.result.report.iterations.size()
         << " it, " << fmt("%.0f", s.seconds) << " s)";

  struct Shape {
    const char* name;
    std::vector<Vec3> input, dense;
  };
  const Shape shapes[] = {
      {"cube", mash::testing::sample_cube(8192, 1.0, 201), mash::testing::sample_cube(kDensePoints, 1.0, 202)},
      {"torus", mash::testing::sample_torus(8192, 1.0, 0.4, 301),
       mash::testing::sample_torus(kDensePoints, 1.0, 0.4, 302)},
  };
  for (const Shape& sh : shapes) {
    const ShapeRun r = fit_shape(sh.input, sh.dense, 100, mash::FitConfig{}.max_iters);
    const bool ok = r.cd_x1000 < 10.0 && r.fscore >= 0.95 && r.seconds < 600;
    pass &= ok;
    detail << "; " << sh.name << " CD " << fmt("%.2f", r.cd_x1000) << " F " << fmt("%.3f", r.fscore)
           << " (" << fmt("%.0f", r.seconds) << " s)";
  }
  return {pass, detail.str()};
}

Outcome schedule_conformance() {
  const auto& its = sphere_run().result.report.iterations;
  if (its.empty()) return {false, "empty report"};
  std::size_t first_cov = its.size();
  for (std::size_t i = 0; i < its.size(); ++i)
    if (its[i].coverage >= mash::kCoverageThreshold) {
      first_cov = i;
      break;
    }
  bool wb_zero_before = true, monotone = true;
  int transitions = 0;
  for (std::size_t i = 0; i < its.size(); ++i) {
    if (i < first_cov && (its[i].weights.boundary != 0.0 || its[i].stage != 1)) wb_zero_before = false;
    if (i > 0) {
      transitions += its[i].stage != its[i - 1].stage;
      monotone &= its[i].weights.coverage >= its[i - 1].weights.coverage;
      monotone &= its[i].weights.boundary >= its[i - 1].weights.boundary;
    }
  }
  const bool reached = first_cov < its.size();
  return {reached && wb_zero_before && transitions == 1 && monotone,
          "coverage >= 0.8 at iteration " + (reached ? std::to_string(its[first_cov].iteration) : "never") +
              ", transitions " + std::to_string(transitions) + ", w_b zero before: " +
              (wb_zero_before ? "yes" : "no") + ", ramps monotone: " + (monotone ? "yes" : "no")};
}

Outcome sphere_orientation() {
  const ShapeRun& s = sphere_run();
  mash::SampleOptions opt;
  opt.with_normals = true;
  const auto oriented = mash::orient_samples(mash::sample_model(s.result.model, opt));
  const fs::path path = work_dir() / "sphere_oriented.ply";
  mash::export_oriented_ply(oriented, path);
  const auto cloud = mash::load_cloud(path);
  if (cloud.points.empty() || cloud.normals.size() != cloud.points.size()) return {false, "bad export"};
  std::size_t outward = 0;
  double worst_unit = 0.0;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    // The sphere was centred at the origin before normalisation, so the radial
    // direction is measured from the origin in either frame.
    outward += cloud.normals[i].dot(cloud.points[i]) > 0.0;
    worst_unit = std::max(worst_unit, std::abs(cloud.normals[i].norm() - 1.0));
  }
  for (const Vec3& n : oriented.normals) worst_unit = std::max(worst_unit, std::abs(n.norm() - 1.0));
  const double frac = static_cast<double>(outward) / static_cast<double>(cloud.points.size());
  return {frac >= 0.99 && worst_unit < 1e-9,
          "outward " + fmt("%.4f", frac) + " of " + std::to_string(cloud.points.size()) +
              ", max ||n|-1| " + fmt("%.1e", worst_unit)};
}

Outcome metrics_oracle() {
  using namespace mash::testing;
  std::mt19937_64 rng(404);
  double worst = 0.0, worst_rigid = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto a = random_points(100, 1.0, rng), b = random_points(100, 1.0, rng);
    std::vector<Vec3> an, bn;
    for (int i = 0; i < 100; ++i) {
      an.push_back(random_unit(rng));
      bn.push_back(random_unit(rng));
    }
    const double l1 = 0.5 * (brute_directed_mean(a, b) + brute_directed_mean(b, a));
    const double l2 = 0.5 * (brute_directed_mean_sq(a, b) + brute_directed_mean_sq(b, a));
    const double hd = std::max(brute_directed_max(a, b), brute_directed_max(b, a));
    const double pr = brute_within_fraction(a, b, 0.3), rc = brute_within_fraction(b, a, 0.3);
    const double fs = pr + rc > 0 ? 2 * pr * rc / (pr + rc) : 0.0;
    double sa = 0.0, sb = 0.0;
    for (int i = 0; i < 100; ++i) {
      sa += std::abs(an[i].dot(bn[brute_nn_index(a[i], b)]));
      sb += std::abs(bn[i].dot(an[brute_nn_index(b[i], a)]));
    }
    const double cosine = 0.5 * (sa / 100 + sb / 100);
    worst = std::max({worst, std::abs(mash::chamfer_l1(a, b) - l1), std::abs(mash::chamfer_l2(a, b) - l2),
                      std::abs(mash::hausdorff(a, b) - hd), std::abs(mash::fscore(a, b, 0.3) - fs),
                      std::abs(mash::normal_cosine(a, an, b, bn) - cosine)});

    // Same rigid motion applied to both sets.
    const Eigen::Matrix3d rot = mash::rotation_matrix(random_unit(rng) * 2.0);
    const Vec3 shift = random_unit(rng) * 3.0;
    std::vector<Vec3> ra, rb, ran, rbn;
    for (int i = 0; i < 100; ++i) {
      ra.push_back(rot * a[i] + shift);
      rb.push_back(rot * b[i] + shift);
      ran.push_back(rot * an[i]);
      rbn.push_back(rot * bn[i]);
    }
    worst_rigid = std::max({worst_rigid, std::abs(mash::chamfer_l1(ra, rb) - mash::chamfer_l1(a, b)),
                            std::abs(mash::chamfer_l2(ra, rb) - mash::chamfer_l2(a, b)),
                            std::abs(mash::hausdorff(ra, rb) - mash::hausdorff(a, b)),
                            std::abs(mash::normal_cosine(ra, ran, rb, rbn) - mash::normal_cosine(a, an, b, bn))});
  }
  return {worst <= 1e-12 && worst_rigid <= 1e-9,
          "max brute-force diff " + fmt("%.1e", worst) + ", rigid diff " + fmt("%.1e", worst_rigid)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MASH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
  const fs::path dir = work_dir();
  const fs::path input = dir / "det_input.ply";
  mash::write_file(input, mash::encode_ply(mash::testing::sample_torus(3000, 1.0, 0.4, 17)));
  bool pass = true;
  std::ostringstream detail;
  for (int threads : {1, 2}) {
    std::string bytes[2];
    for (int k = 0; k < 2; ++k) {
      const fs::path out = dir / ("det_" + std::to_string(threads) + "_" + std::to_string(k) + ".mash");
      fs::remove(out);
      const int code = run_cli("fit --input " + input.string() + " --out " + out.string() +
                               " --anchors 30 --max-iters 200 --seed 42 --quiet --threads " +
                               std::to_string(threads));
      if (code != 0 && code != 2) return {false, "mash fit exited with " + std::to_string(code)};
      bytes[k] = mash::read_file(out);
    }
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
    pass &= same;
    detail << (threads > 1 ? ", " : "") << threads << " thread(s): " << (same ? "identical" : "DIFFERENT")
           << " (" << bytes[0].size() << " bytes)";
  }
  return {pass, detail.str()};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> checks[] = {
      {"gradient correctness", gradient_check},
      {"parameter count", parameter_count},
      {"SH orthonormality", sh_orthonormality},
      {"inversion involution and slerp linearity", inversion_and_slerp},
      {"Fibonacci uniformity", fibonacci_caps},
      {"desk-scale fitting", desk_fitting},
      {"schedule conformance", schedule_conformance},
      {"orientation", sphere_orientation},
      {"metrics oracle equivalence", metrics_oracle},
      {"determinism", cli_determinism},
  };
  int failures = 0, index = 0;
  for (const auto& [name, check] : checks) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << index << ". " << name << ": " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << '\n';
  return failures;
}
