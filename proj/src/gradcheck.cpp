#include "attrloss/gradcheck.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "attrloss/attribute_loss.hpp"
#include "attrloss/losses.hpp"
#include "attrloss/mlp.hpp"
#include "attrloss/rng.hpp"
#include "attrloss/types.hpp"

namespace attrloss {

namespace {

constexpr double kStep = 1e-5;

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic) + std::abs(numeric));
}

/// Central differences over one parameter block, comparing against the
/// analytic gradient stored alongside. Returns the worst relative error.
double check_block(std::span<double> block, std::span<const double> analytic,
                   const std::function<double()>& eval) {
  double worst = 0.0;
  for (std::size_t i = 0; i < block.size(); ++i) {
    const double saved = block[i];
    block[i] = saved + kStep;
    const double up = eval();
    block[i] = saved - kStep;
    const double down = eval();
    block[i] = saved;
    const double fd = (up - down) / (2.0 * kStep);
    worst = std::max(worst, rel_err(analytic[i], fd));
  }
  return worst;
}

Matrix random_matrix(Rng& rng, std::int64_t rows, std::int64_t cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& x : m.data) x = scale * rng.gaussian();
  return m;
}

BatchFeatures random_batch(Rng& rng, std::int64_t m, std::int64_t k, std::int64_t c,
                           std::int64_t h) {
  BatchFeatures batch;
  batch.features = random_matrix(rng, m, k);
  batch.attributes = Matrix(m, h);
  for (double& x : batch.attributes.data) x = rng.uniform(-0.4, 0.4);
  batch.labels.resize(static_cast<std::size_t>(m));
  for (auto& y : batch.labels) y = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(c)));
  return batch;
}

struct Dims {
  std::int64_t m, k, c, h;
};

Dims small_dims(Rng& rng) {
  return {static_cast<std::int64_t>(1 + rng.below(8)), static_cast<std::int64_t>(2 + rng.below(5)),
          static_cast<std::int64_t>(2 + rng.below(4)), static_cast<std::int64_t>(2 + rng.below(2))};
}

void corrupt_first(Matrix& g) {
  if (!g.data.empty()) g.data[0] += 1e-3;
}

double check_softmax(Rng& rng, bool corrupt) {
  const Dims d = small_dims(rng);
  BatchFeatures batch = random_batch(rng, d.m, d.k, d.c, d.h);
  Matrix w = random_matrix(rng, d.k, d.c);
  std::vector<double> b(static_cast<std::size_t>(d.c));
  for (double& x : b) x = 0.5 * rng.gaussian();

  SoftmaxLossResult res = softmax_loss(batch, w, b);
  if (corrupt) corrupt_first(res.grad_features);
  const auto eval = [&] { return softmax_loss(batch, w, b).value; };

  double worst = check_block(std::span<double>(batch.features.data),
                             std::span<const double>(res.grad_features.data), eval);
  worst = std::max(worst, check_block(std::span<double>(w.data),
                                      std::span<const double>(res.grad_w.data), eval));
  worst = std::max(worst, check_block(std::span<double>(b), std::span<const double>(res.grad_b),
                                      eval));
  return worst;
}

double check_center(Rng& rng, bool corrupt) {
  const Dims d = small_dims(rng);
  BatchFeatures batch = random_batch(rng, d.m, d.k, d.c, d.h);
  Matrix centers = random_matrix(rng, d.c, d.k);

  CenterLossResult res = center_loss(batch, centers);
  if (corrupt) corrupt_first(res.grad_features);
  const auto eval = [&] { return center_loss(batch, centers).value; };
  return check_block(std::span<double>(batch.features.data),
                     std::span<const double>(res.grad_features.data), eval);
}

double check_angular(Rng& rng, bool corrupt) {
  for (;;) {
    Dims d = small_dims(rng);
    d.k = std::max<std::int64_t>(d.k, 3);
    BatchFeatures batch = random_batch(rng, d.m, d.k, d.c, d.h);
    Matrix w = random_matrix(rng, d.k, d.c);
    const int margin = static_cast<int>(1 + rng.below(4));

    // Stay away from the arccos clamp and from tiny norms: finite
    // differences are only trustworthy on the smooth region.
    bool clean = true;
    for (std::int64_t i = 0; i < d.m && clean; ++i) {
      const double fn = norm2(batch.features.row(i));
      if (fn < 0.3) clean = false;
      for (std::int64_t j = 0; j < d.c && clean; ++j) {
        std::vector<double> col(static_cast<std::size_t>(d.k));
        for (std::int64_t r = 0; r < d.k; ++r) col[static_cast<std::size_t>(r)] = w(r, j);
        const double wn = norm2(col);
        if (wn < 0.3) clean = false;
        else if (std::abs(dot(batch.features.row(i), col) / (fn * wn)) > 0.995) clean = false;
      }
    }
    if (!clean) continue;

    AngularSoftmaxLossResult res = angular_softmax_loss(batch, w, margin);
    if (corrupt) corrupt_first(res.grad_features);
    const auto eval = [&] { return angular_softmax_loss(batch, w, margin).value; };
    double worst = check_block(std::span<double>(batch.features.data),
                               std::span<const double>(res.grad_features.data), eval);
    worst = std::max(worst, check_block(std::span<double>(w.data),
                                        std::span<const double>(res.grad_w.data), eval));
    return worst;
  }
}

double check_attribute(Rng& rng, bool corrupt) {
  for (;;) {
    const Dims d = small_dims(rng);
    if (d.m < 2) continue;
    BatchFeatures batch = random_batch(rng, d.m, d.k, d.c, d.h);
    Matrix g = random_matrix(rng, d.k, d.h);
    const double tau = 1.5;  // admits most cross-label pairs of the batch
    const PairSelection sel = select_pairs(batch, tau, std::nullopt, 0);
    if (sel.pairs.empty()) continue;

    AttributeLossGrads grads = attribute_loss_backward(batch, sel, g);
    if (corrupt) corrupt_first(grads.grad_features);
    const auto eval = [&] { return attribute_loss_forward(batch, sel, g); };
    double worst = check_block(std::span<double>(batch.features.data),
                               std::span<const double>(grads.grad_features.data), eval);
    worst = std::max(worst, check_block(std::span<double>(g.data),
                                        std::span<const double>(grads.grad_attr_map.data), eval));
    return worst;
  }
}

double check_backbone(Rng& rng, Activation act, bool corrupt) {
  for (;;) {
    MlpSpec spec;
    spec.activation = act;
    const std::int64_t layers = 2 + static_cast<std::int64_t>(rng.below(2));
    spec.layer_dims.push_back(static_cast<std::int64_t>(2 + rng.below(4)));
    for (std::int64_t l = 1; l < layers; ++l) {
      spec.layer_dims.push_back(static_cast<std::int64_t>(2 + rng.below(5)));
    }

    MlpTheta theta = init_mlp(spec, rng.next_u64());
    for (Matrix& w : theta.weights) {
      for (double& x : w.data) x = rng.gaussian();
    }
    for (auto& b : theta.biases) {
      for (double& x : b) x = 0.3 * rng.gaussian();
    }
    const std::int64_t m = 1 + static_cast<std::int64_t>(rng.below(6));
    const Matrix inputs = random_matrix(rng, m, spec.input_dim());
    const Matrix upstream = random_matrix(rng, m, spec.feature_dim());

    MlpCache cache;
    mlp_forward(spec, theta, inputs, &cache);
    if (act == Activation::relu) {
      // Finite differences straddle the relu kink when a preactivation sits
      // within the step of zero; redraw such instances.
      bool near_kink = false;
      for (std::size_t l = 0; l + 1 < cache.preactivations.size() && !near_kink; ++l) {
        for (double z : cache.preactivations[l].data) {
          if (std::abs(z) < 1e-3) {
            near_kink = true;
            break;
          }
        }
      }
      if (near_kink) continue;
    }

    // Scalar objective: fixed random weighting of the features.
    const auto eval = [&] {
      const Matrix f = mlp_forward(spec, theta, inputs, nullptr);
      double s = 0.0;
      for (std::size_t i = 0; i < f.data.size(); ++i) s += f.data[i] * upstream.data[i];
      return s;
    };

    MlpGrads grads = mlp_backward(spec, theta, cache, upstream);
    if (corrupt) corrupt_first(grads.weights[0]);
    double worst = 0.0;
    for (std::size_t l = 0; l < theta.weights.size(); ++l) {
      worst = std::max(worst, check_block(std::span<double>(theta.weights[l].data),
                                          std::span<const double>(grads.weights[l].data), eval));
      worst = std::max(worst, check_block(std::span<double>(theta.biases[l]),
                                          std::span<const double>(grads.biases[l]), eval));
    }
    return worst;
  }
}

}  // namespace

bool GradCheckReport::all_pass() const {
  for (const GradCheckRow& r : rows) {
    if (!r.pass) return false;
  }
  return !rows.empty();
}

std::string GradCheckReport::table() const {
  std::string out = "target                max_rel_err   instances  result\n";
  char buf[128];
  for (const GradCheckRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-20s  %.3e    %8lld  %s\n", r.target.c_str(), r.max_rel_err,
                  static_cast<long long>(r.instances), r.pass ? "PASS" : "FAIL");
    out += buf;
  }
  return out;
}

GradCheckReport run_gradcheck(std::uint64_t seed, std::int64_t instances_per_target,
                              bool corrupt) {
  GradCheckReport report;
  const auto run = [&](const std::string& name,
                       const std::function<double(Rng&, bool)>& check) {
    Rng rng(derive_seed(seed, "gradcheck." + name));
    GradCheckRow row;
    row.target = name;
    row.instances = instances_per_target;
    for (std::int64_t i = 0; i < instances_per_target; ++i) {
      // Only the first instance is corrupted; one bad component is enough
      // for the negative control.
      row.max_rel_err = std::max(row.max_rel_err, check(rng, corrupt && i == 0));
    }
    row.pass = row.max_rel_err < report.tolerance;
    report.rows.push_back(row);
  };

  run("softmax", [](Rng& r, bool c) { return check_softmax(r, c); });
  run("center", [](Rng& r, bool c) { return check_center(r, c); });
  run("angular_softmax", [](Rng& r, bool c) { return check_angular(r, c); });
  run("attribute_aware", [](Rng& r, bool c) { return check_attribute(r, c); });
  run("backbone.relu", [](Rng& r, bool c) { return check_backbone(r, Activation::relu, c); });
  run("backbone.tanh", [](Rng& r, bool c) { return check_backbone(r, Activation::tanh, c); });
  run("backbone.identity",
      [](Rng& r, bool c) { return check_backbone(r, Activation::identity, c); });
  return report;
}

}  // namespace attrloss
