#pragma once

#include "metamorph/design.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace metamorph {

// Opening angles, radians internally; pi is flat.
struct FoldState {
  std::vector<double> gamma;

  static FoldState flat(const Structure& s);
  static FoldState from_degrees(const std::vector<double>& deg);
  std::vector<double> degrees() const;
  size_t size() const { return gamma.size(); }
  bool is_lattice(double tol = 1e-9) const;
  // Wrapped to [0, 2pi) with lattice values snapped exactly.
  FoldState normalized() const;
};

// Ordered cube poses in the global frame.
struct ShapeMatrix {
  std::vector<Vec3> centers;
  std::vector<Mat3> orientations;
  bool lattice = false;

  std::vector<Vec3i> lattice_centers() const;
  size_t size() const { return centers.size(); }
};

struct Tolerances {
  double solve = 1e-9;          // closure residual inf-norm
  double singular_rel = 1e-8;   // null singular values relative to the largest
  double manifold = 1e-6;       // on-manifold check for analysis entry points
  double lattice_snap = 1e-6;   // center snapping at lattice states

  // Defaults, then METAMORPH_TOL (scales solve and manifold), then `flag`.
  static Tolerances resolve(std::optional<double> flag = std::nullopt);
};

// Fixed-offset hinge transform: rotation by (pi - gamma) about the local z
// axis followed by the offset d along the local x axis.
Mat4 hinge_transform(double d, double gamma);

// Pose of cube_b relative to cube_a's home placement when the hinge opens to
// gamma, expressed in the home frame.
Rigid hinge_motion(const HingeSpec& h, double gamma);

std::vector<Vec6> loop_residual(const Structure& s, const FoldState& q);
double residual_inf(const Structure& s, const FoldState& q);

// d(residual)/d(gamma), (6 * loops) x hinges.
MatX closure_jacobian(const Structure& s, const FoldState& q);

struct KinematicsReport {
  std::vector<Vec6> residuals;
  MatX jacobian;
  std::vector<double> singular_values;  // descending, padded with zeros to the hinge count
  int null_dim = 0;
  MatX null_basis;
};

KinematicsReport dof_analysis(const Structure& s, const FoldState& q, const Tolerances& tol = {});

// Null space dimension of J restricted to `cols` (all columns if empty).
int restricted_null_dim(const MatX& J, const std::vector<int>& cols, double rel_tol);
MatX restricted_null_basis(const MatX& J, const std::vector<int>& cols, double rel_tol);

struct BifurcationReport {
  bool is_bifurcation = false;
  int extra_dof = 0;
};
BifurcationReport detect_bifurcation(const Structure& s, const FoldState& q, int baseline_dof,
                                     const Tolerances& tol = {});

struct SolverOptions {
  double lambda0 = 1e-3;
  int max_iter = 200;
  double tol = 1e-9;
};

// Damped least squares on the hinges in `free_hinges`; everything else is
// held at its value in `start`.
FoldState solve_free(const Structure& s, const FoldState& start, const std::vector<int>& free_hinges,
                     const SolverOptions& opt = {});

// Driven hinges take the given angles; all other hinges are free.
FoldState solve_closure(const Structure& s, const std::vector<std::pair<int, double>>& driven,
                        const FoldState& seed, const SolverOptions& opt = {});

struct DriveSchedule {
  std::vector<int> driven;                       // hinge ids
  std::vector<std::vector<double>> waypoints;    // radians, one row per waypoint
};

struct KinePath {
  std::vector<FoldState> states;
  std::vector<int> active_hinges;
  int path_dof = 0;
  DriveSchedule schedule;
};

struct ContinueOptions {
  double max_step = deg2rad(2.0);
  double min_step = deg2rad(0.125);
  bool check_collision = true;
  std::vector<int> locked;   // hinges held fixed besides the driven ones
  SolverOptions solver;
  double endpoint_tol = 1e-9;
  // Optional full states, one per waypoint, used to seed the corrector so
  // that singular points on the way do not switch branches.
  std::vector<FoldState> guide;
};

KinePath continue_path(const Structure& s, const FoldState& from, const DriveSchedule& schedule,
                       const std::optional<FoldState>& to, const ContinueOptions& opt = {});

// Active hinges and the max restricted null dimension over interior states.
void annotate_path(const Structure& s, KinePath& path, const Tolerances& tol = {});

ShapeMatrix forward_placement(const Structure& s, const FoldState& q, const Tolerances& tol = {});
// Cube poses without the on-manifold check (tree placement).
std::vector<Rigid> cube_poses(const Structure& s, const FoldState& q);

// Closest distance between the two level-2 hinge axes bounding level-1 link
// `link_index`.
double level2_link_length(const Structure& s, const FoldState& q, int link_index);

struct ClosedForm8R {
  double drive_deg = 0;
  double printed_deg = 0;        // the printed sin^-1 relation
  double printed_comp_deg = 0;   // 180 minus the printed value
  std::vector<double> numeric_deg;  // solved ring state, ring order
  bool numeric_ok = false;
  double discrepancy_deg = 0;    // |printed - numeric| on the paired hinge
  double tetrahedral_deg = 0;    // arccos(-1/3) reference
};

// The symmetric branch of the flat level-1 8R ring: hinges m2, m4, m6, m8
// held at the drive angle, the others solved.
ClosedForm8R closed_form_8R(double gamma_drive_deg);

// Literal local-frame move: v_new = t v_local + d with t the rotation about
// a coordinate axis written in the passive form used by the shape matrices.
Vec3 local_axis_move(char axis, double angle_deg, const Vec3& v_local, const Vec3& d);

}  // namespace metamorph
