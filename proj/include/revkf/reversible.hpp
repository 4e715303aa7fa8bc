#pragma once

// Reversible MEKF: a gravity-recovery step between prediction and update.
//
// The measured field direction M pins the orientation to a one-parameter
// family of rotations. A scalar surface constraint (the normal component of
// the global specific force) cuts that circle in at most two points; the one
// nearest the prediction supplies a gravity vector free of external
// acceleration, which replaces the raw accelerometer reading in the update.
//
// Family members r(theta) map global vectors into the sensor frame, i.e.
// r = q^-1 for the filter's orientation q.

#include "revkf/mekf.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace revkf::rev {

template <typename T>
struct RotationFamily {
  Vec3<T> axis;            // unit, sensor frame
  UnitQuaternion<T> base;  // base * b_hat = axis
  bool antiparallel{false};

  /// quat_exp(theta * axis) * base.
  UnitQuaternion<T> member(const T& theta) const;
  /// Twist angle of r * base^-1 about the axis, in [0, 2 pi).
  T angle_of(const UnitQuaternion<T>& r) const;
};

/// Every rotation r with r * b_hat = M_hat. Antiparallel inputs pick an axis
/// perpendicular to b for the base and set the flag.
template <typename T>
RotationFamily<T> rotation_family(const Vec3<T>& b, const Vec3<T>& M);

/// f(theta) = <A, r(theta) direction> = offset + a cos(theta) + b sin(theta).
template <typename T>
struct ConstraintCurve {
  T offset{0};
  T a{0};
  T b{0};

  T operator()(const T& theta) const;
  T amplitude() const;
};

template <typename T>
ConstraintCurve<T> constraint_curve(const RotationFamily<T>& family, const Vec3<T>& A, const Vec3<T>& direction);

template <typename T>
struct SurfaceSolution {
  std::vector<T> thetas;  // 0, 1 (tangent) or 2 roots in [0, 2 pi)
  ConstraintCurve<T> curve;
  T tolerance{0};  // absolute tolerance used on f
};

/// Roots of f(theta) = c on the family.
template <typename T>
SurfaceSolution<T> solve_surface_constraint(const RotationFamily<T>& family, const Vec3<T>& A,
                                            const Vec3<T>& direction, const T& c);

enum class ConstraintReading { Tangency, Kinematic };

/// Position, velocity and step the kinematic reading of the constraint uses.
template <typename T>
struct ConstraintKinematics {
  Vec3<T> p{Vec3<T>::Zero()};
  Vec3<T> v{Vec3<T>::Zero()};
  T dt{1};
};

/// Target normal component of R^-1 A. Tangency: <g, n>. Kinematic: the value
/// that lands the next semi-implicit Euler position on the plane.
template <typename T>
T constraint_target(const SurfaceModel<T>& surface, const ConstraintKinematics<T>& kin, ConstraintReading reading);

enum class LinAlgMode { Corrected, NoIntersection, PredictionOutside, DefaultKept };

const char* to_string(LinAlgMode mode);

template <typename T>
struct Candidate {
  T theta;
  UnitQuaternion<T> q;  // orientation (sensor -> global)
  T distance;           // geodesic distance to the prediction
};

template <typename T>
struct LinAlgOutcome {
  LinAlgMode mode{LinAlgMode::NoIntersection};
  Vec3<T> A_g{Vec3<T>::Zero()};  // accelerometer vector handed to the update
  UnitQuaternion<T> q_sel{};     // selected orientation; prediction when not corrected
  std::vector<Candidate<T>> candidates;
  bool antiparallel{false};
  T default_distance{0};  // detection only: prediction to default rotation

  /// Distance from the prediction to the selected candidate; 0 unless corrected.
  T correction_angle() const;
};

/// Candidates on a family, sorted by distance to pred_q with ties going to
/// the larger <R(q) z, tie_axis>.
template <typename T>
std::vector<Candidate<T>> family_candidates(const UnitQuaternion<T>& pred_q, const RotationFamily<T>& family,
                                            const SurfaceSolution<T>& solution, const Vec3<T>& tie_axis);

/// Rotation family from (b, M), surface constraint, nearest candidate.
/// No intersection returns A unchanged.
template <typename T>
LinAlgOutcome<T> linalg_gravity(const UnitQuaternion<T>& pred_q, const Vec3<T>& A, const Vec3<T>& M,
                                const SurfaceModel<T>& surface, const ConstraintKinematics<T>& kin,
                                ConstraintReading reading = ConstraintReading::Tangency);

/// Detection rules on an already built family: default rotation maximizing
/// <r^-1 A, g_hat>, capture region {f >= c - slack}, then the gamma test.
template <typename T>
LinAlgOutcome<T> detect_on_family(const UnitQuaternion<T>& pred_q, const Vec3<T>& A,
                                  const RotationFamily<T>& family, const Vec3<T>& direction, const T& c,
                                  const Vec3<T>& g, const T& gamma, const Vec3<T>& tie_axis);

/// Real-data heuristic: the raw magnetometer is replaced by the predicted view
/// of `pseudo_reference`, then detect_on_family decides raw A or A_g.
template <typename T>
LinAlgOutcome<T> detect_and_correct(const UnitQuaternion<T>& pred_q, const Vec3<T>& A,
                                    const SurfaceModel<T>& surface, const T& gamma,
                                    const ConstraintKinematics<T>& kin,
                                    ConstraintReading reading = ConstraintReading::Tangency,
                                    const Vec3<T>& pseudo_reference = Vec3<T>(T(0), T(1), T(0)));

template <typename T>
struct RevOptions {
  mekf::FilterOptions filter{};
  ConstraintReading reading{ConstraintReading::Tangency};
  std::optional<T> gamma;  // set: detection heuristic with pseudo-magnetometer
  Vec3<T> pseudo_reference{T(0), T(1), T(0)};
};

template <typename T>
struct StepResult {
  mekf::FilterState<T> state;
  LinAlgOutcome<T> outcome;
};

/// predict -> LinAlg (or detection) -> update with A_g -> dead reckoning.
template <typename T>
StepResult<T> revmekf_step(const mekf::FilterState<T>& state, const sensors::ImuSample<T>& sample,
                           const SurfaceModel<T>& surface, const mekf::NoiseMatrices<T>& noise,
                           const RevOptions<T>& options = {});

// Reversibility harness.

/// One step of input as a group element h = exp(-omega dt) plus the
/// direction readings. h acts on vectors by rotation, on elements by left
/// multiplication.
template <typename T>
struct GroupMeasurement {
  UnitQuaternion<T> h{};
  Vec3<T> A{Vec3<T>::Zero()};
  Vec3<T> M{Vec3<T>::Zero()};
  T dt{1};
};

template <typename T>
GroupMeasurement<T> to_group_measurement(const sensors::ImuSample<T>& sample);

template <typename T>
sensors::ImuSample<T> to_sample(const GroupMeasurement<T>& m, const T& t = T(0));

/// (g h, g A, g M).
template <typename T>
GroupMeasurement<T> act(const UnitQuaternion<T>& g, const GroupMeasurement<T>& m);

/// (h^-1, h^-1 A, h^-1 M).
template <typename T>
GroupMeasurement<T> reverse_measurement(const GroupMeasurement<T>& m);

/// Geodesic distance between orientations plus |bias difference|; P is not compared.
template <typename T>
T state_distance(const mekf::FilterState<T>& a, const mekf::FilterState<T>& b);

template <typename T>
using FilterFn = std::function<mekf::FilterState<T>(const mekf::FilterState<T>&, const GroupMeasurement<T>&)>;

template <typename T>
struct ReversalErrors {
  T exact;
  T perturbed;
};

/// Runs f forward on m, then on the reversed measurement (exact) and on the
/// reversed measurement with epsilon * perturbation added to (A, M).
template <typename T>
ReversalErrors<T> check_reversibility(const FilterFn<T>& f, const mekf::FilterState<T>& u,
                                      const GroupMeasurement<T>& m, const T& epsilon,
                                      const Vec6<T>& perturbation);

/// Forward over the whole sequence, then backward over the reversed
/// measurements in reverse order.
template <typename T>
T check_sequence_reversibility(const FilterFn<T>& f, const mekf::FilterState<T>& u,
                               const std::vector<GroupMeasurement<T>>& ms);

}  // namespace revkf::rev
