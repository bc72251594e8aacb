#include "attrloss/attributes.hpp"

#include <algorithm>

#include "attrloss/matrix.hpp"

namespace attrloss {

std::vector<double> encode_attributes(Gender gender, Ethnicity ethnicity, double age_years) {
  const double g = (gender == Gender::male) ? 1.0 : -1.0;
  const double e = (ethnicity == Ethnicity::asian) ? 1.0 : -1.0;
  const double a = 2.0 * std::min(age_years, 100.0) / 100.0 - 1.0;
  return {g, e, a};
}

double attribute_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionError("attribute_distance: length mismatch");
  return euclidean_distance(p, q);
}

}  // namespace attrloss
