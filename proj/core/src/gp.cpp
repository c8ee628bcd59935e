#include <cmath>
#include <stdexcept>

#include "gpcbf/gp.hpp"

namespace gpcbf {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::kSquaredExponential:
      return "squared-exponential";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "squared-exponential" || name == "se") {
    return KernelKind::kSquaredExponential;
  }
  throw std::invalid_argument("unknown kernel kind '" + name + "'");
}

void KernelSpec::validate() const {
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw std::invalid_argument("KernelSpec: signal_variance must be > 0");
  }
  if (length_scales.size() == 0) {
    throw std::invalid_argument("KernelSpec: no length scales");
  }
  for (Eigen::Index i = 0; i < length_scales.size(); ++i) {
    if (!(length_scales[i] > 0.0) || !std::isfinite(length_scales[i])) {
      throw std::invalid_argument("KernelSpec: length scale " +
                                  std::to_string(i) + " must be > 0");
    }
  }
}

double kernel_eval(const KernelSpec& k, const Vector& x, const Vector& xp) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double r = (x[i] - xp[i]) / k.length_scales[i];
    s += r * r;
  }
  return k.signal_variance * std::exp(-0.5 * s);
}

Vector kernel_gradient(const KernelSpec& k, const Vector& x, const Vector& xp) {
  const double kv = kernel_eval(k, x, xp);
  return -kv * (x - xp).cwiseQuotient(k.length_scales.cwiseAbs2());
}

GPPosterior GPPosterior::fit(const TrainingSet& data,
                             std::vector<KernelSpec> kernels) {
  const int n = static_cast<int>(kernels.size());
  if (n == 0) throw std::invalid_argument("GPPosterior::fit: no kernels");
  if (data.size() > 0 && data.dim() != n) {
    throw std::invalid_argument(
        "GPPosterior::fit: one kernel per state dimension required");
  }
  if (!(data.noise_std >= 0.0)) {
    throw std::invalid_argument("GPPosterior::fit: noise_std < 0");
  }
  for (const auto& k : kernels) {
    k.validate();
    if (k.dim() != n) {
      throw std::invalid_argument(
          "GPPosterior::fit: kernel length scales do not match state dim");
    }
  }

  GPPosterior gp;
  gp.data_ = data;
  if (gp.data_.size() == 0) {
    gp.data_.states.resize(0, n);
    gp.data_.targets.resize(0, n);
  }
  const int count = gp.data_.size();
  const double noise_var = data.noise_std * data.noise_std;

  for (int j = 0; j < n; ++j) {
    Output out;
    out.kernel = kernels[j];
    Matrix gram(count, count);
    for (int a = 0; a < count; ++a) {
      const Vector xa = gp.data_.state(a);
      gram(a, a) = out.kernel.signal_variance;
      for (int b = 0; b < a; ++b) {
        const double v = kernel_eval(out.kernel, xa, gp.data_.state(b));
        gram(a, b) = v;
        gram(b, a) = v;
      }
    }
    gram.diagonal().array() += noise_var;

    double jitter = 0.0;
    for (;;) {
      Matrix shifted = gram;
      shifted.diagonal().array() += jitter;
      out.llt.compute(shifted);
      const bool ok = out.llt.info() == Eigen::Success &&
                      (count == 0 || out.llt.rcond() >= kMinReciprocalCondition);
      if (ok) break;
      jitter = (jitter == 0.0) ? kJitterStart : jitter * 10.0;
      if (jitter > kJitterMax * (1.0 + 1e-12)) {
        const double rcond =
            out.llt.info() == Eigen::Success ? out.llt.rcond() : 0.0;
        throw IllConditionedError(
            "Gram system for output " + std::to_string(j) +
                " is indefinite or ill-conditioned (rcond " +
                std::to_string(rcond) + ") after jitter escalation",
            j, rcond);
      }
    }
    out.jitter = jitter;
    const Vector y = gp.data_.targets.col(j);
    out.alpha = count > 0 ? Vector(out.llt.solve(y)) : Vector();
    out.target_energy = count > 0 ? y.dot(out.alpha) : 0.0;
    gp.outputs_.push_back(std::move(out));
  }
  return gp;
}

std::vector<KernelSpec> GPPosterior::kernels() const {
  std::vector<KernelSpec> ks;
  for (const auto& o : outputs_) ks.push_back(o.kernel);
  return ks;
}

void GPPosterior::set_alpha(int j, const Vector& alpha) {
  if (alpha.size() != num_samples()) {
    throw std::invalid_argument("GPPosterior::set_alpha: size mismatch");
  }
  outputs_[j].alpha = alpha;
  outputs_[j].target_energy =
      num_samples() > 0 ? data_.targets.col(j).dot(alpha) : 0.0;
}

void GPPosterior::note_query(const Vector& x) const {
  if (domain_ && !domain_->contains(x, 1e-12)) {
    extrapolations_->fetch_add(1, std::memory_order_relaxed);
  }
}

Vector GPPosterior::cross_covariance(int j, const Vector& x) const {
  const int count = num_samples();
  Vector kbar(count);
  for (int i = 0; i < count; ++i) {
    kbar[i] = kernel_eval(outputs_[j].kernel, x, data_.state(i));
  }
  return kbar;
}

double GPPosterior::mean(int j, const Vector& x) const {
  note_query(x);
  if (num_samples() == 0) return 0.0;
  return cross_covariance(j, x).dot(outputs_[j].alpha);
}

double GPPosterior::variance(int j, const Vector& x) const {
  note_query(x);
  const double prior = outputs_[j].kernel.signal_variance;
  if (num_samples() == 0) return prior;
  Vector v = cross_covariance(j, x);
  outputs_[j].llt.matrixL().solveInPlace(v);
  const double var = prior - v.squaredNorm();
  if (var < 0.0) {
    if (var < -1e-9 * prior) {
      throw std::runtime_error("GPPosterior::variance: negative variance " +
                               std::to_string(var) + " beyond roundoff");
    }
    return 0.0;
  }
  return var;
}

Vector GPPosterior::mean(const Vector& x) const {
  Vector mu(dim());
  for (int j = 0; j < dim(); ++j) mu[j] = mean(j, x);
  return mu;
}

Vector GPPosterior::variance(const Vector& x) const {
  Vector var(dim());
  for (int j = 0; j < dim(); ++j) var[j] = variance(j, x);
  return var;
}

Matrix GPPosterior::mean_jacobian(const Vector& x) const {
  const int n = dim();
  Matrix jac = Matrix::Zero(n, x.size());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < num_samples(); ++i) {
      jac.row(j) += outputs_[j].alpha[i] *
                    kernel_gradient(outputs_[j].kernel, x, data_.state(i))
                        .transpose();
    }
  }
  return jac;
}

Vector GPPosterior::variance_gradient(int j, const Vector& x) const {
  const int count = num_samples();
  if (count == 0) return Vector::Zero(x.size());
  // d/dx [k(x,x) - kbar^T A^-1 kbar] = -2 J^T A^-1 kbar
  const Vector w = outputs_[j].llt.solve(cross_covariance(j, x));
  Vector grad = Vector::Zero(x.size());
  for (int i = 0; i < count; ++i) {
    grad -= 2.0 * w[i] * kernel_gradient(outputs_[j].kernel, x, data_.state(i));
  }
  return grad;
}

Vector GPPosterior::gradient_variance(int j, const Vector& x) const {
  const KernelSpec& k = outputs_[j].kernel;
  const int n = static_cast<int>(x.size());
  const int count = num_samples();
  Vector out(n);
  const Vector kbar = count ? cross_covariance(j, x) : Vector();
  for (int d = 0; d < n; ++d) {
    const double l2 = k.length_scales[d] * k.length_scales[d];
    double v = k.signal_variance / l2;
    if (count) {
      Vector dk(count);
      for (int i = 0; i < count; ++i) dk[i] = -(x[d] - data_.states(i, d)) / l2 * kbar[i];
      v -= outputs_[j].llt.matrixL().solve(dk).squaredNorm();
    }
    out[d] = std::max(v, 0.0);
  }
  return out;
}

}  // namespace gpcbf
