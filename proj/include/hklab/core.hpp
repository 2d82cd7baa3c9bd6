#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hklab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VertexId = std::size_t;
using VertexSet = std::vector<VertexId>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A named list of vertex functions over which inequalities are measured.
struct FunctionFamily {
  std::string id;
  std::vector<Vec> members;

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
  void append(const FunctionFamily& other);
};

inline void FunctionFamily::append(const FunctionFamily& other) {
  members.insert(members.end(), other.members.begin(), other.members.end());
  id = id.empty() ? other.id : id + "+" + other.id;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

}  // namespace hklab
