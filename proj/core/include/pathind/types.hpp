// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pathind {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Named numeric parameters for built-in models and fields. Scalars are
/// stored as one-element vectors.
using Params = std::map<std::string, std::vector<double>>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent dimensions, bad step sizes, malformed configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A parameter or input outside its admissible set.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced during evaluation or simulation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a transform or field.
class DomainError : public Error {
 public:
  using Error::Error;
};

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

std::string format_point(double t, const Vec& x);

}  // namespace pathind
