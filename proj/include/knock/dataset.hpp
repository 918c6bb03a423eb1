#ifndef KNOCK_DATASET_HPP_
#define KNOCK_DATASET_HPP_

#include <map>
#include <string>

#include <Eigen/Core>

namespace knock {

// Smallest knock intensity ever reported [bar]. The density models are only
// defined for strictly positive values.
inline constexpr double kPositivityFloor = 1e-6;

// One operating point's per-cycle knock intensities, in acquisition order.
struct KIDataset {
  std::string label;
  Eigen::VectorXd ki;
  std::map<std::string, std::string> metadata;

  Eigen::Index size() const { return ki.size(); }
};

// Throws DomainError unless every value is finite and > 0.
void require_positive(const Eigen::Ref<const Eigen::VectorXd> &samples);

}  // namespace knock

#endif  // KNOCK_DATASET_HPP_
