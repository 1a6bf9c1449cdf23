#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace multikoop {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Variant { flat, hier };

inline std::string to_string(Variant v) { return v == Variant::flat ? "flat" : "hier"; }

inline Variant variant_from_string(const std::string& s) {
  if (s == "flat") return Variant::flat;
  if (s == "hier") return Variant::hier;
  throw std::invalid_argument("unknown variant '" + s + "' (expected flat|hier)");
}

// Base class for all toolkit errors. `code` is a stable machine-readable tag
// used by the CLI's error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg) : std::runtime_error(msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error("dimension", msg) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, double t) : Error("divergence", msg), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

class SingularityError : public Error {
 public:
  SingularityError(const std::string& msg, double smin) : Error("singularity", msg), smin_(smin) {}
  double smallest_singular_value() const { return smin_; }

 private:
  double smin_;
};

class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& msg, double rho) : Error("instability", msg), rho_(rho) {}
  double spectral_radius() const { return rho_; }

 private:
  double rho_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, double residual) : Error("convergence", msg), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error("data", msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("io", msg) {}
};

}  // namespace multikoop
