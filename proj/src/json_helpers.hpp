#pragma once

#include <nlohmann/json.hpp>

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace cfmpc::detail {

using nlohmann::json;

inline Eigen::Vector3d to_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument(what + ": expected an array of 3 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Eigen::VectorXd to_vecn(const json& j, int n, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw std::invalid_argument(what + ": expected an array of " +
                                std::to_string(n) + " numbers");
  }
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = j[i].get<double>();
  return v;
}

template <typename T>
T value_or(const json& j, const std::string& key, T fallback) {
  if (j.contains(key)) return j.at(key).get<T>();
  return fallback;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace cfmpc::detail
