#include "zoflow/backend.hpp"

#include <cmath>
#include <string>

namespace zoflow {

Eigen::Index Condition::dim() const {
  if (const auto* af = std::get_if<AffineField>(&payload)) return af->b.size();
  return std::get<std::shared_ptr<const GaussianMixture>>(payload)->dim();
}

Condition make_affine_condition(std::string tag, Mat A, Vec b) {
  if (A.rows() != A.cols() || A.rows() != b.size() || b.size() == 0) {
    throw InvalidArgument("affine condition '" + tag + "': A must be square and match b");
  }
  if (!A.allFinite() || !b.allFinite()) {
    throw InvalidArgument("affine condition '" + tag + "': non-finite entries");
  }
  return Condition{std::move(tag), AffineField{std::move(A), std::move(b)}};
}

Condition make_mixture_condition(std::string tag, GaussianMixture mixture) {
  return Condition{std::move(tag), std::make_shared<const GaussianMixture>(std::move(mixture))};
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kAffine: return "affine";
    case BackendKind::kGaussianMixture: return "gaussian-mixture";
    case BackendKind::kDdimNoisePred: return "ddim-noise-pred";
  }
  return "unknown";
}

BackendKind parse_backend_kind(std::string_view name) {
  if (name == "affine") return BackendKind::kAffine;
  if (name == "gaussian-mixture") return BackendKind::kGaussianMixture;
  if (name == "ddim-noise-pred") return BackendKind::kDdimNoisePred;
  throw InvalidArgument("unknown backend kind '" + std::string(name) + "'");
}

VelocityBackend::VelocityBackend(Eigen::Index dim) : dim_(dim) {
  if (dim < 1) throw InvalidArgument("backend dimension must be >= 1");
}

Vec VelocityBackend::evaluate(const Vec& z, double t, const Condition& c) const {
  require_dim(z, dim_, "velocity state");
  if (!accepts(c)) {
    throw InvalidArgument("condition '" + c.tag + "' is not compatible with a " +
                          std::string(to_string(kind())) + " backend");
  }
  if (c.dim() != dim_) {
    throw InvalidArgument("condition '" + c.tag + "' has dimension " + std::to_string(c.dim()) +
                          ", backend expects " + std::to_string(dim_));
  }
  return evaluate_unchecked(z, t, c);
}

Vec AffineBackend::evaluate_unchecked(const Vec& z, double, const Condition& c) const {
  const auto& f = std::get<AffineField>(c.payload);
  return f.A * z + f.b;
}

bool AffineBackend::accepts(const Condition& c) const {
  return std::holds_alternative<AffineField>(c.payload);
}

Vec MixtureVelocityBackend::evaluate_unchecked(const Vec& z, double t, const Condition& c) const {
  const auto& gmm = *std::get<std::shared_ptr<const GaussianMixture>>(c.payload);
  const auto post = gmm.posterior(z, 1.0 - t, t);
  return post.eps - post.x0;
}

bool MixtureVelocityBackend::accepts(const Condition& c) const {
  return std::holds_alternative<std::shared_ptr<const GaussianMixture>>(c.payload);
}

Vec MixtureNoiseBackend::evaluate_unchecked(const Vec& z, double alpha_bar, const Condition& c) const {
  const auto& gmm = *std::get<std::shared_ptr<const GaussianMixture>>(c.payload);
  return gmm.posterior(z, std::sqrt(alpha_bar), std::sqrt(1.0 - alpha_bar)).eps;
}

bool MixtureNoiseBackend::accepts(const Condition& c) const {
  return std::holds_alternative<std::shared_ptr<const GaussianMixture>>(c.payload);
}

std::shared_ptr<const VelocityBackend> make_backend(BackendKind kind, Eigen::Index dim) {
  switch (kind) {
    case BackendKind::kAffine: return std::make_shared<AffineBackend>(dim);
    case BackendKind::kGaussianMixture: return std::make_shared<MixtureVelocityBackend>(dim);
    case BackendKind::kDdimNoisePred: return std::make_shared<MixtureNoiseBackend>(dim);
  }
  throw InvalidArgument("make_backend: unknown kind");
}

Vec eval_velocity(const VelocityBackend& backend, const Vec& z, double t, const Condition& c) {
  return backend.evaluate(z, t, c);
}

Vec flow_step(const VelocityBackend& backend, const Vec& z, double t, const Condition& c, double delta_t) {
  if (t + delta_t < -1e-12) throw InvalidArgument("flow_step: step would cross t = 0");
  return z + eval_velocity(backend, z, t, c) * delta_t;
}

Vec ddim_step(const VelocityBackend& backend, const Vec& z, std::size_t index, const DdimSchedule& sched,
              const Condition& c) {
  if (backend.kind() != BackendKind::kDdimNoisePred) {
    throw InvalidArgument("ddim_step requires a noise-prediction backend");
  }
  const auto coef = ddim_coefficients(sched, index);
  return coef.state_coef * z + coef.noise_coef * backend.evaluate(z, sched.alpha(index), c);
}

}  // namespace zoflow
