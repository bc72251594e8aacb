#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attrloss/types.hpp"

namespace attrloss {

/// Cosine of the angle between two nonzero vectors, clamped to [-1, 1].
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Concatenates two equal-length feature vectors into one of double length.
std::vector<double> concat_paired_features(std::span<const double> f1,
                                           std::span<const double> f2);

/// One gallery feature per identity plus the remaining probes.
struct GallerySplit {
  Matrix gallery_features;
  std::vector<std::int32_t> gallery_labels;  // unique
  Matrix probe_features;
  std::vector<std::int32_t> probe_labels;
};

/// First occurrence of each identity goes to the gallery, the rest probe.
GallerySplit make_gallery_split(const Matrix& features,
                                std::span<const std::int32_t> labels);

/// Fraction of probes whose true identity ranks among the k most similar
/// gallery entries; similarity ties break toward the lower gallery index.
double rank_k_identification(const GallerySplit& split, std::int64_t k);

/// Rank-k rate for every k up to the gallery size. Non-decreasing, ends at 1.
std::vector<double> cmc_curve(const GallerySplit& split);

struct VerificationPair {
  std::vector<double> f1;
  std::vector<double> f2;
  bool same = false;
};

struct VerificationResult {
  double accuracy = 0.0;
  double threshold = 0.0;
};

/// Best 0/1 accuracy of the rule "same iff cosine > threshold" over a sweep
/// of all midpoints of the sorted pair similarities (plus both all-same and
/// all-different sentinels).
VerificationResult verification_accuracy(const std::vector<VerificationPair>& pairs);

struct CentroidPairCheck {
  std::int32_t class_a = 0;
  std::int32_t class_b = 0;
  double centroid_distance = 0.0;
  double bound = 0.0;  // spectral_norm_G * tau + epsilon
  bool satisfied = false;
};

struct IntraClassCheck {
  std::int32_t label = 0;
  double max_pairwise_distance = 0.0;
  bool neighbor_condition = false;  // every intra pair has a common cross-label tau-neighbor
  bool satisfied = false;           // max distance < 2(M tau + eps); only meaningful when checked
};

/// Post-hoc verification of the feature-distance bounds implied by the
/// attribute residual maximum. A violated bound on exact inputs indicates
/// an implementation bug, which makes this a strong training oracle.
struct Prop1Report {
  bool epsilon_defined = false;
  double epsilon = 0.0;        // max residual over cross-label pairs within tau
  double spectral_norm_g = 0.0;
  double smallest_singular_g = 0.0;
  bool g_nonsingular = false;
  double tau_used = 0.0;
  double intra_bound = 0.0;    // 2 (M tau + eps)
  std::vector<IntraClassCheck> intra_checks;
  std::vector<CentroidPairCheck> centroid_pairs;
  std::int64_t violation_count = 0;

  std::string summary() const;
  std::string to_csv() const;
};

Prop1Report verify_prop1(const Matrix& features, std::span<const std::int32_t> labels,
                         const Matrix& attributes, const Matrix& attr_map, double tau);

/// Largest singular value by power iteration on G^T G from a seeded start
/// vector, to the given relative tolerance.
double spectral_norm(const Matrix& m, double rel_tol = 1e-10);

}  // namespace attrloss
