#include "attrloss/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "attrloss/attributes.hpp"
#include "attrloss/parallel.hpp"
#include "attrloss/rng.hpp"

namespace attrloss {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine_similarity: length mismatch");
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na == 0.0 || nb == 0.0) throw DegenerateInputError("cosine_similarity: zero vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::vector<double> concat_paired_features(std::span<const double> f1,
                                           std::span<const double> f2) {
  if (f1.size() != f2.size()) throw DimensionError("concat_paired_features: length mismatch");
  std::vector<double> out;
  out.reserve(f1.size() * 2);
  out.insert(out.end(), f1.begin(), f1.end());
  out.insert(out.end(), f2.begin(), f2.end());
  return out;
}

GallerySplit make_gallery_split(const Matrix& features,
                                std::span<const std::int32_t> labels) {
  if (features.rows != static_cast<std::int64_t>(labels.size())) {
    throw DimensionError("make_gallery_split: label count mismatch");
  }
  std::vector<std::int64_t> gallery_rows;
  std::vector<std::int64_t> probe_rows;
  std::map<std::int32_t, bool> seen;
  for (std::int64_t i = 0; i < features.rows; ++i) {
    if (!seen[labels[static_cast<std::size_t>(i)]]) {
      seen[labels[static_cast<std::size_t>(i)]] = true;
      gallery_rows.push_back(i);
    } else {
      probe_rows.push_back(i);
    }
  }

  GallerySplit split;
  split.gallery_features = Matrix(static_cast<std::int64_t>(gallery_rows.size()), features.cols);
  split.probe_features = Matrix(static_cast<std::int64_t>(probe_rows.size()), features.cols);
  for (std::size_t r = 0; r < gallery_rows.size(); ++r) {
    const auto src = features.row(gallery_rows[r]);
    std::copy(src.begin(), src.end(), split.gallery_features.row(static_cast<std::int64_t>(r)).begin());
    split.gallery_labels.push_back(labels[static_cast<std::size_t>(gallery_rows[r])]);
  }
  for (std::size_t r = 0; r < probe_rows.size(); ++r) {
    const auto src = features.row(probe_rows[r]);
    std::copy(src.begin(), src.end(), split.probe_features.row(static_cast<std::int64_t>(r)).begin());
    split.probe_labels.push_back(labels[static_cast<std::size_t>(probe_rows[r])]);
  }
  return split;
}

namespace {

// Rank of the probe's true gallery entry: 1 + entries strictly more similar
// + equal-similarity entries at lower index.
std::int64_t probe_rank(const GallerySplit& split, std::int64_t probe) {
  const std::int64_t g = split.gallery_features.rows;
  const std::int32_t label = split.probe_labels[static_cast<std::size_t>(probe)];
  std::int64_t true_idx = -1;
  for (std::int64_t j = 0; j < g; ++j) {
    if (split.gallery_labels[static_cast<std::size_t>(j)] == label) {
      true_idx = j;
      break;
    }
  }
  if (true_idx < 0) throw DimensionError("gallery split: probe label missing from gallery");

  const auto probe_row = split.probe_features.row(probe);
  const double true_sim = cosine_similarity(probe_row, split.gallery_features.row(true_idx));
  std::int64_t rank = 1;
  for (std::int64_t j = 0; j < g; ++j) {
    if (j == true_idx) continue;
    const double s = cosine_similarity(probe_row, split.gallery_features.row(j));
    if (s > true_sim || (s == true_sim && j < true_idx)) ++rank;
  }
  return rank;
}

std::vector<std::int64_t> all_probe_ranks(const GallerySplit& split) {
  if (split.probe_features.rows == 0) throw DegenerateInputError("gallery split: no probes");
  std::vector<std::int64_t> ranks(static_cast<std::size_t>(split.probe_features.rows), 0);
  parallel_for(split.probe_features.rows,
               [&](std::int64_t p) { ranks[static_cast<std::size_t>(p)] = probe_rank(split, p); });
  return ranks;
}

}  // namespace

double rank_k_identification(const GallerySplit& split, std::int64_t k) {
  if (k < 1 || k > split.gallery_features.rows) {
    throw DimensionError("rank_k_identification: k outside [1, gallery size]");
  }
  const std::vector<std::int64_t> ranks = all_probe_ranks(split);
  const auto hits = std::count_if(ranks.begin(), ranks.end(),
                                  [k](std::int64_t r) { return r <= k; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

std::vector<double> cmc_curve(const GallerySplit& split) {
  const std::vector<std::int64_t> ranks = all_probe_ranks(split);
  const std::int64_t g = split.gallery_features.rows;
  std::vector<std::int64_t> hist(static_cast<std::size_t>(g) + 1, 0);
  for (std::int64_t r : ranks) hist[static_cast<std::size_t>(r)]++;
  std::vector<double> curve(static_cast<std::size_t>(g), 0.0);
  std::int64_t cum = 0;
  for (std::int64_t k = 1; k <= g; ++k) {
    cum += hist[static_cast<std::size_t>(k)];
    curve[static_cast<std::size_t>(k - 1)] =
        static_cast<double>(cum) / static_cast<double>(ranks.size());
  }
  return curve;
}

VerificationResult verification_accuracy(const std::vector<VerificationPair>& pairs) {
  if (pairs.empty()) throw DegenerateInputError("verification_accuracy: no pairs");
  std::vector<double> sims(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    sims[i] = cosine_similarity(pairs[i].f1, pairs[i].f2);
  }

  std::vector<double> sorted = sims;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> thresholds;
  thresholds.push_back(sorted.front() - 1.0);  // everything predicted same
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    thresholds.push_back(0.5 * (sorted[i] + sorted[i + 1]));
  }
  thresholds.push_back(sorted.back() + 1.0);  // nothing predicted same

  VerificationResult best;
  best.accuracy = -1.0;
  for (double t : thresholds) {
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const bool predicted_same = sims[i] > t;
      if (predicted_same == pairs[i].same) ++correct;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(pairs.size());
    if (acc > best.accuracy) {
      best.accuracy = acc;
      best.threshold = t;
    }
  }
  return best;
}

double spectral_norm(const Matrix& m, double rel_tol) {
  if (m.rows == 0 || m.cols == 0) return 0.0;
  const std::int64_t n = m.cols;
  // Power iteration on m^T m with a fixed seeded start vector.
  Rng rng(derive_seed(0xa77a10u, "spectral_norm"));
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.gaussian();
  double vn = norm2(v);
  for (double& x : v) x /= vn;

  std::vector<double> mv(static_cast<std::size_t>(m.rows));
  std::vector<double> mtmv(static_cast<std::size_t>(n));
  double sigma = 0.0;
  for (int it = 0; it < 10000; ++it) {
    for (std::int64_t i = 0; i < m.rows; ++i) mv[static_cast<std::size_t>(i)] = dot(m.row(i), v);
    for (std::int64_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::int64_t i = 0; i < m.rows; ++i) s += m(i, j) * mv[static_cast<std::size_t>(i)];
      mtmv[static_cast<std::size_t>(j)] = s;
    }
    const double lambda = norm2(mtmv);
    if (lambda == 0.0) return 0.0;
    const double next = std::sqrt(lambda);
    for (std::int64_t j = 0; j < n; ++j) v[static_cast<std::size_t>(j)] = mtmv[static_cast<std::size_t>(j)] / lambda;
    if (it > 0 && std::abs(next - sigma) <= rel_tol * std::max(1.0, next)) return next;
    sigma = next;
  }
  return sigma;
}

namespace {

// Eigenvalues of the small symmetric m^T m by cyclic Jacobi; used only for
// the nonsingularity report.
double smallest_singular_value(const Matrix& m) {
  const std::int64_t n = m.cols;
  if (n == 0 || m.rows < n) return 0.0;
  Matrix a(n, n);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::int64_t r = 0; r < m.rows; ++r) s += m(r, i) * m(r, j);
      a(i, j) = s;
    }
  }
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::int64_t p = 0; p < n; ++p) {
      for (std::int64_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off < 1e-30) break;
    for (std::int64_t p = 0; p < n; ++p) {
      for (std::int64_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = 0.5 * std::atan2(2.0 * a(p, q), a(q, q) - a(p, p));
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        for (std::int64_t r = 0; r < n; ++r) {
          const double arp = a(r, p), arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        for (std::int64_t r = 0; r < n; ++r) {
          const double apr = a(p, r), aqr = a(q, r);
          a(p, r) = c * apr - s * aqr;
          a(q, r) = s * apr + c * aqr;
        }
      }
    }
  }
  double min_ev = a(0, 0);
  for (std::int64_t i = 1; i < n; ++i) min_ev = std::min(min_ev, a(i, i));
  return std::sqrt(std::max(0.0, min_ev));
}

}  // namespace

Prop1Report verify_prop1(const Matrix& features, std::span<const std::int32_t> labels,
                         const Matrix& attributes, const Matrix& attr_map, double tau) {
  const std::int64_t n = features.rows;
  if (n != static_cast<std::int64_t>(labels.size()) || attributes.rows != n) {
    throw DimensionError("verify_prop1: row counts disagree");
  }
  if (attr_map.rows != features.cols || attr_map.cols != attributes.cols) {
    throw DimensionError("verify_prop1: G must be K x H");
  }
  if (tau <= 0.0) throw DimensionError("verify_prop1: tau must be positive");

  Prop1Report report;
  report.tau_used = tau;
  report.spectral_norm_g = spectral_norm(attr_map);
  report.smallest_singular_g = smallest_singular_value(attr_map);
  report.g_nonsingular = report.smallest_singular_g > 1e-12;

  const std::int64_t k = features.cols;
  const std::int64_t h = attributes.cols;

  // Exact maximum residual over all cross-label pairs within tau. max is
  // order-independent, so the row loop can run in parallel.
  std::vector<double> row_max(static_cast<std::size_t>(n), -1.0);
  parallel_for(n, [&](std::int64_t i) {
    std::vector<double> gdp(static_cast<std::size_t>(k));
    double best = -1.0;
    for (std::int64_t j = i + 1; j < n; ++j) {
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) continue;
      const double dp = attribute_distance(attributes.row(i), attributes.row(j));
      if (dp >= tau) continue;
      const double* pi = attributes.data.data() + i * h;
      const double* pj = attributes.data.data() + j * h;
      const double* fi = features.data.data() + i * k;
      const double* fj = features.data.data() + j * k;
      double s = 0.0;
      for (std::int64_t d = 0; d < k; ++d) {
        double gp = 0.0;
        for (std::int64_t a = 0; a < h; ++a) gp += attr_map(d, a) * (pi[a] - pj[a]);
        const double r = (fi[d] - fj[d]) - gp;
        s += r * r;
      }
      best = std::max(best, std::sqrt(s));
    }
    row_max[static_cast<std::size_t>(i)] = best;
  });
  double eps = -1.0;
  for (double v : row_max) eps = std::max(eps, v);
  report.epsilon_defined = eps >= 0.0;
  report.epsilon = report.epsilon_defined ? eps : 0.0;
  if (!report.epsilon_defined) return report;  // no qualifying pair: bounds are vacuous

  report.intra_bound = 2.0 * (report.spectral_norm_g * tau + report.epsilon);

  std::vector<std::int32_t> classes;
  for (std::int32_t y : labels) {
    if (std::find(classes.begin(), classes.end(), y) == classes.end()) classes.push_back(y);
  }
  std::sort(classes.begin(), classes.end());

  std::vector<std::vector<std::int64_t>> members(classes.size());
  for (std::int64_t i = 0; i < n; ++i) {
    const auto it = std::lower_bound(classes.begin(), classes.end(),
                                     labels[static_cast<std::size_t>(i)]);
    members[static_cast<std::size_t>(it - classes.begin())].push_back(i);
  }

  // Intra-class bound. The proof needs, for each intra-class pair, one
  // cross-label sample within tau of both endpoints; the check enforces
  // exactly that, so a satisfied condition plus a violated bound can only
  // mean broken arithmetic.
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    IntraClassCheck check;
    check.label = classes[ci];
    check.neighbor_condition = true;
    const auto& rows = members[ci];
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = a + 1; b < rows.size(); ++b) {
        const double dist = euclidean_distance(features.row(rows[a]), features.row(rows[b]));
        check.max_pairwise_distance = std::max(check.max_pairwise_distance, dist);
        if (!check.neighbor_condition) continue;
        bool found = false;
        for (std::int64_t g = 0; g < n && !found; ++g) {
          if (labels[static_cast<std::size_t>(g)] == check.label) continue;
          found = attribute_distance(attributes.row(rows[a]), attributes.row(g)) < tau &&
                  attribute_distance(attributes.row(rows[b]), attributes.row(g)) < tau;
        }
        if (!found) check.neighbor_condition = false;
      }
    }
    check.satisfied = !check.neighbor_condition || check.max_pairwise_distance < report.intra_bound;
    if (check.neighbor_condition && !check.satisfied) report.violation_count++;
    report.intra_checks.push_back(check);
  }

  // Centroid bound for identity pairs whose cross attribute distances all
  // lie under tau.
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    for (std::size_t cj = ci + 1; cj < classes.size(); ++cj) {
      bool all_within = true;
      for (std::int64_t a : members[ci]) {
        for (std::int64_t b : members[cj]) {
          if (attribute_distance(attributes.row(a), attributes.row(b)) >= tau) {
            all_within = false;
            break;
          }
        }
        if (!all_within) break;
      }
      if (!all_within) continue;

      std::vector<double> ca(static_cast<std::size_t>(k), 0.0);
      std::vector<double> cb(static_cast<std::size_t>(k), 0.0);
      for (std::int64_t a : members[ci]) add_scaled(std::span<double>(ca), features.row(a), 1.0);
      for (std::int64_t b : members[cj]) add_scaled(std::span<double>(cb), features.row(b), 1.0);
      for (double& x : ca) x /= static_cast<double>(members[ci].size());
      for (double& x : cb) x /= static_cast<double>(members[cj].size());

      CentroidPairCheck check;
      check.class_a = classes[ci];
      check.class_b = classes[cj];
      check.centroid_distance = euclidean_distance(ca, cb);
      check.bound = report.spectral_norm_g * tau + report.epsilon;
      check.satisfied = check.centroid_distance < check.bound;
      if (!check.satisfied) report.violation_count++;
      report.centroid_pairs.push_back(check);
    }
  }

  return report;
}

std::string Prop1Report::summary() const {
  std::ostringstream out;
  out.precision(17);
  out << "tau = " << tau_used << "\n";
  out << "epsilon_defined = " << (epsilon_defined ? "true" : "false") << "\n";
  if (epsilon_defined) out << "epsilon = " << epsilon << "\n";
  out << "spectral_norm_G = " << spectral_norm_g << "\n";
  out << "smallest_singular_G = " << smallest_singular_g << "\n";
  out << "G_nonsingular = " << (g_nonsingular ? "true" : "false") << "\n";
  if (!epsilon_defined) {
    out << "note = no cross-label pair within tau; bounds are vacuous\n";
    return out.str();
  }
  out << "intra_bound = " << intra_bound << "\n";
  std::int64_t checked = 0;
  for (const auto& c : intra_checks) checked += c.neighbor_condition ? 1 : 0;
  out << "intra_classes_checked = " << checked << " of " << intra_checks.size() << "\n";
  out << "centroid_pairs_checked = " << centroid_pairs.size() << "\n";
  out << "violations = " << violation_count << "\n";
  return out.str();
}

std::string Prop1Report::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "kind,class_a,class_b,value,bound,condition_met,satisfied\n";
  for (const auto& c : intra_checks) {
    out << "intra," << c.label << ",," << c.max_pairwise_distance << "," << intra_bound << ","
        << (c.neighbor_condition ? 1 : 0) << "," << (c.satisfied ? 1 : 0) << "\n";
  }
  for (const auto& c : centroid_pairs) {
    out << "centroid," << c.class_a << "," << c.class_b << "," << c.centroid_distance << ","
        << c.bound << ",1," << (c.satisfied ? 1 : 0) << "\n";
  }
  return out.str();
}

}  // namespace attrloss
