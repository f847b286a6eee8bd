#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>

#include "zoflow/linalg.hpp"
#include "zoflow/mixture.hpp"
#include "zoflow/schedule.hpp"

namespace zoflow {

/// v(z) = A z + b, independent of t.
struct AffineField {
  Mat A;
  Vec b;
};

using ConditionPayload = std::variant<AffineField, std::shared_ptr<const GaussianMixture>>;

/// A condition carries the analytic parameters of the field it selects.
struct Condition {
  std::string tag;
  ConditionPayload payload;

  Eigen::Index dim() const;
};

Condition make_affine_condition(std::string tag, Mat A, Vec b);
Condition make_mixture_condition(std::string tag, GaussianMixture mixture);

enum class BackendKind { kAffine, kGaussianMixture, kDdimNoisePred };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view name);

/// Pure evaluation of a conditional velocity (or, for kDdimNoisePred, a
/// noise prediction) at (z, t, c). Implementations hold no mutable state.
class VelocityBackend {
 public:
  explicit VelocityBackend(Eigen::Index dim);
  virtual ~VelocityBackend() = default;

  virtual BackendKind kind() const = 0;
  Eigen::Index dim() const { return dim_; }

  /// Checks dimensions and payload compatibility, then dispatches.
  Vec evaluate(const Vec& z, double t, const Condition& c) const;

 protected:
  virtual Vec evaluate_unchecked(const Vec& z, double t, const Condition& c) const = 0;
  virtual bool accepts(const Condition& c) const = 0;

 private:
  Eigen::Index dim_;
};

class AffineBackend final : public VelocityBackend {
 public:
  using VelocityBackend::VelocityBackend;
  BackendKind kind() const override { return BackendKind::kAffine; }

 protected:
  Vec evaluate_unchecked(const Vec& z, double t, const Condition& c) const override;
  bool accepts(const Condition& c) const override;
};

/// Exact marginal velocity E[eps - x0 | z_t = z] of the linear path
/// z_t = (1 - t) x0 + t eps with x0 drawn from the condition's mixture.
class MixtureVelocityBackend final : public VelocityBackend {
 public:
  using VelocityBackend::VelocityBackend;
  BackendKind kind() const override { return BackendKind::kGaussianMixture; }

 protected:
  Vec evaluate_unchecked(const Vec& z, double t, const Condition& c) const override;
  bool accepts(const Condition& c) const override;
};

/// Exact noise prediction E[eps | z] for the variance-preserving path
/// z = sqrt(abar) x0 + sqrt(1 - abar) eps. The scalar argument is abar.
class MixtureNoiseBackend final : public VelocityBackend {
 public:
  using VelocityBackend::VelocityBackend;
  BackendKind kind() const override { return BackendKind::kDdimNoisePred; }

 protected:
  Vec evaluate_unchecked(const Vec& z, double alpha_bar, const Condition& c) const override;
  bool accepts(const Condition& c) const override;
};

std::shared_ptr<const VelocityBackend> make_backend(BackendKind kind, Eigen::Index dim);

Vec eval_velocity(const VelocityBackend& backend, const Vec& z, double t, const Condition& c);

/// One explicit Euler step z + v_t(z, c) * delta_t.
Vec flow_step(const VelocityBackend& backend, const Vec& z, double t, const Condition& c, double delta_t);

/// One rearranged DDIM step from index t to t - 1.
Vec ddim_step(const VelocityBackend& backend, const Vec& z, std::size_t index, const DdimSchedule& sched,
              const Condition& c);

}  // namespace zoflow
