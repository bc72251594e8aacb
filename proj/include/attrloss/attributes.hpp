#pragma once

#include <span>
#include <vector>

namespace attrloss {

enum class Gender { male, female };
enum class Ethnicity { asian, caucasian };

/// Encodes (gender, ethnicity, age) as a 3-vector in [-1,1]^3:
/// male -> +1 / female -> -1; Asian -> +1 / Caucasian -> -1;
/// age truncated at 100 then mapped linearly, 0 -> -1 and 100 -> +1.
std::vector<double> encode_attributes(Gender gender, Ethnicity ethnicity, double age_years);

/// Euclidean distance between attribute vectors of equal length.
double attribute_distance(std::span<const double> p, std::span<const double> q);

}  // namespace attrloss
