#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "gpcbf/dynamics.hpp"
#include "gpcbf/gp.hpp"

namespace gpcbf {

/// A drift estimate the synthesis and control stages can query: values,
/// Jacobians and a global curvature bound used for rigorous cell margins.
class DriftModel {
 public:
  virtual ~DriftModel() = default;

  virtual int dim() const = 0;
  virtual Vector value(const Vector& x) const = 0;
  /// (j, d) entry is d f_j / d x_d.
  virtual Matrix jacobian(const Vector& x) const = 0;
  /// result[j](d, e) bounds |d^2 f_j / dx_d dx_e| over the state box.
  virtual std::vector<Matrix> curvature_bound() const = 0;
};

/// The posterior mean mu of a fitted GP. Curvature follows from
/// |D_d D_e mu_j| <= c_de s_j sqrt(y_j^T A_j^-1 y_j) / (l_jd l_je) with
/// c_dd = sqrt(3), c_de = 1 otherwise.
class GPMeanDrift final : public DriftModel {
 public:
  explicit GPMeanDrift(std::shared_ptr<const GPPosterior> gp);

  int dim() const override { return gp_->dim(); }
  Vector value(const Vector& x) const override { return gp_->mean(x); }
  Matrix jacobian(const Vector& x) const override {
    return gp_->mean_jacobian(x);
  }
  std::vector<Matrix> curvature_bound() const override { return curvature_; }

  const GPPosterior& posterior() const { return *gp_; }

 private:
  std::shared_ptr<const GPPosterior> gp_;
  std::vector<Matrix> curvature_;
};

/// Closed-form drift with caller-supplied derivatives and curvature bound.
class AnalyticDrift final : public DriftModel {
 public:
  AnalyticDrift(int n, std::function<Vector(const Vector&)> value,
                std::function<Matrix(const Vector&)> jacobian,
                std::vector<Matrix> curvature);

  int dim() const override { return n_; }
  Vector value(const Vector& x) const override { return value_(x); }
  Matrix jacobian(const Vector& x) const override { return jacobian_(x); }
  std::vector<Matrix> curvature_bound() const override { return curvature_; }

 private:
  int n_;
  std::function<Vector(const Vector&)> value_;
  std::function<Matrix(const Vector&)> jacobian_;
  std::vector<Matrix> curvature_;
};

std::shared_ptr<const DriftModel> zero_drift(int n);

/// The true jet-engine drift with exact derivatives, curvature bounded over
/// `state_box`.
std::shared_ptr<const DriftModel> jet_engine_drift(const Box& state_box);

}  // namespace gpcbf
