#include "metamorph/kinematics.hpp"

#include "metamorph/collision.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

namespace metamorph {

FoldState FoldState::flat(const Structure& s) {
  FoldState q;
  q.gamma.assign(s.hinges.size(), kPi);
  return q;
}

FoldState FoldState::from_degrees(const std::vector<double>& deg) {
  FoldState q;
  for (double d : deg) q.gamma.push_back(deg2rad(d));
  return q;
}

std::vector<double> FoldState::degrees() const {
  std::vector<double> out;
  for (double g : gamma) out.push_back(rad2deg(g));
  return out;
}

bool FoldState::is_lattice(double tol) const {
  for (double g : gamma) {
    double k = g / (kPi / 2);
    if (std::abs(k - std::round(k)) > tol) return false;
  }
  return true;
}

FoldState FoldState::normalized() const {
  FoldState q;
  for (double g : gamma) {
    double k = g / (kPi / 2);
    double r = std::round(k);
    double v;
    if (std::abs(k - r) < 1e-7) {
      long m = static_cast<long>(r) % 4;
      if (m < 0) m += 4;
      v = static_cast<double>(m) * kPi / 2;
    } else {
      v = std::fmod(g, 2 * kPi);
      if (v < 0) v += 2 * kPi;
    }
    q.gamma.push_back(v);
  }
  return q;
}

std::vector<Vec3i> ShapeMatrix::lattice_centers() const {
  std::vector<Vec3i> out;
  for (const auto& c : centers) out.push_back(round_vec(c));
  return out;
}

Tolerances Tolerances::resolve(std::optional<double> flag) {
  Tolerances t;
  double scale = 0;
  if (const char* env = std::getenv("METAMORPH_TOL")) {
    char* end = nullptr;
    double v = std::strtod(env, &end);
    if (end != env && v > 0) scale = v;
  }
  if (flag && *flag > 0) scale = *flag;
  if (scale > 0) {
    t.solve = scale;
    t.manifold = std::max(scale, t.manifold);
  }
  return t;
}

Mat4 hinge_transform(double d, double gamma) {
  double th = kPi - gamma;
  Mat4 T = Mat4::Identity();
  T(0, 0) = std::cos(th);
  T(0, 1) = -std::sin(th);
  T(1, 0) = std::sin(th);
  T(1, 1) = std::cos(th);
  T(0, 3) = d * std::cos(th);
  T(1, 3) = d * std::sin(th);
  return T;
}

Rigid hinge_motion(const HingeSpec& h, double gamma) { return screw_rotation(h.axis, h.anchor, kPi - gamma); }

namespace {

Rigid step_motion(const Structure& s, const LoopStep& st, const FoldState& q) {
  const HingeSpec& h = s.hinges[static_cast<size_t>(st.hinge)];
  double th = kPi - q.gamma[static_cast<size_t>(st.hinge)];
  return screw_rotation(h.axis, h.anchor, st.sign > 0 ? th : -th);
}

Vec6 residual_of(const Rigid& P) {
  Vec6 r;
  r.head<3>() = so3_log(P.R);
  r.tail<3>() = P.t;
  return r;
}

}  // namespace

std::vector<Vec6> loop_residual(const Structure& s, const FoldState& q) {
  std::vector<Vec6> out;
  for (const auto& lp : s.loops) {
    Rigid P;
    for (const auto& st : lp.steps) P = P * step_motion(s, st, q);
    out.push_back(residual_of(P));
  }
  return out;
}

double residual_inf(const Structure& s, const FoldState& q) {
  double m = 0;
  for (const auto& r : loop_residual(s, q)) m = std::max(m, r.cwiseAbs().maxCoeff());
  return m;
}

MatX closure_jacobian(const Structure& s, const FoldState& q) {
  MatX J = MatX::Zero(6 * static_cast<long>(s.loops.size()), static_cast<long>(s.hinges.size()));
  for (size_t li = 0; li < s.loops.size(); ++li) {
    const Loop& lp = s.loops[li];
    Rigid P;
    std::vector<Rigid> prefix;
    for (const auto& st : lp.steps) {
      prefix.push_back(P);
      P = P * step_motion(s, st, q);
    }
    Vec3 phi = so3_log(P.R);
    Mat3 Jinv = so3_left_jacobian_inv(phi);
    for (size_t i = 0; i < lp.steps.size(); ++i) {
      const LoopStep& st = lp.steps[i];
      const HingeSpec& h = s.hinges[static_cast<size_t>(st.hinge)];
      const Rigid& A = prefix[i];
      Vec3 w = A.R * h.axis;
      Vec3 v = A.R * (h.anchor.cross(h.axis)) + A.t.cross(w);
      // dtheta = -dgamma, sign flips for reversed traversal
      double k = -static_cast<double>(st.sign);
      Vec6 col;
      col.head<3>() = Jinv * w * k;
      col.tail<3>() = (v - P.t.cross(w)) * k;
      J.block<6, 1>(6 * static_cast<long>(li), st.hinge) += col;
    }
  }
  return J;
}

namespace {

MatX select_cols(const MatX& J, const std::vector<int>& cols) {
  if (cols.empty()) return J;
  MatX out(J.rows(), static_cast<long>(cols.size()));
  for (size_t i = 0; i < cols.size(); ++i) out.col(static_cast<long>(i)) = J.col(cols[i]);
  return out;
}

}  // namespace

int restricted_null_dim(const MatX& J, const std::vector<int>& cols, double rel_tol) {
  MatX A = select_cols(J, cols);
  if (A.cols() == 0) return 0;
  if (A.rows() == 0) return static_cast<int>(A.cols());
  Eigen::JacobiSVD<MatX> svd(A);
  const VecX& sv = svd.singularValues();
  double smax = sv.size() ? sv(0) : 0;
  int rank = 0;
  for (long i = 0; i < sv.size(); ++i)
    if (smax > 0 && sv(i) >= rel_tol * smax) ++rank;
  return static_cast<int>(A.cols()) - rank;
}

MatX restricted_null_basis(const MatX& J, const std::vector<int>& cols, double rel_tol) {
  MatX A = select_cols(J, cols);
  Eigen::JacobiSVD<MatX> svd(A, Eigen::ComputeFullV);
  const VecX& sv = svd.singularValues();
  double smax = sv.size() ? sv(0) : 0;
  int rank = 0;
  for (long i = 0; i < sv.size(); ++i)
    if (smax > 0 && sv(i) >= rel_tol * smax) ++rank;
  return svd.matrixV().rightCols(A.cols() - rank);
}

KinematicsReport dof_analysis(const Structure& s, const FoldState& q, const Tolerances& tol) {
  KinematicsReport rep;
  rep.residuals = loop_residual(s, q);
  double m = 0;
  for (const auto& r : rep.residuals) m = std::max(m, r.cwiseAbs().maxCoeff());
  if (m > tol.manifold) throw Error(ErrorCode::NotOnManifold, "closure residual " + std::to_string(m));
  rep.jacobian = closure_jacobian(s, q);
  long n = rep.jacobian.cols();
  if (rep.jacobian.rows() == 0) {
    rep.singular_values.assign(static_cast<size_t>(n), 0.0);
    rep.null_dim = static_cast<int>(n);
    rep.null_basis = MatX::Identity(n, n);
    return rep;
  }
  Eigen::JacobiSVD<MatX> svd(rep.jacobian, Eigen::ComputeFullV);
  const VecX& sv = svd.singularValues();
  for (long i = 0; i < sv.size(); ++i) rep.singular_values.push_back(sv(i));
  while (static_cast<long>(rep.singular_values.size()) < n) rep.singular_values.push_back(0.0);
  double smax = rep.singular_values.empty() ? 0 : rep.singular_values.front();
  int nd = 0;
  for (double v : rep.singular_values)
    if (!(smax > 0 && v >= tol.singular_rel * smax)) ++nd;
  rep.null_dim = nd;
  rep.null_basis = svd.matrixV().rightCols(nd);
  return rep;
}

BifurcationReport detect_bifurcation(const Structure& s, const FoldState& q, int baseline_dof, const Tolerances& tol) {
  auto rep = dof_analysis(s, q, tol);
  BifurcationReport b;
  b.is_bifurcation = rep.null_dim > baseline_dof;
  b.extra_dof = std::max(0, rep.null_dim - baseline_dof);
  return b;
}

FoldState solve_free(const Structure& s, const FoldState& start, const std::vector<int>& free_hinges,
                     const SolverOptions& opt) {
  FoldState q = start;
  auto stack = [&](const FoldState& x) {
    auto res = loop_residual(s, x);
    VecX r(6 * static_cast<long>(res.size()));
    for (size_t i = 0; i < res.size(); ++i) r.segment<6>(6 * static_cast<long>(i)) = res[i];
    return r;
  };
  VecX r = stack(q);
  if (r.size() == 0 || r.cwiseAbs().maxCoeff() < opt.tol) return q;
  if (free_hinges.empty())
    throw Error(ErrorCode::DrivenOverconstrained, "no free hinges and closure fails");
  double lambda = opt.lambda0;
  double cost = r.squaredNorm();
  for (int it = 0; it < opt.max_iter; ++it) {
    MatX J = select_cols(closure_jacobian(s, q), free_hinges);
    MatX A = J.transpose() * J;
    VecX g = J.transpose() * r;
    A.diagonal().array() += lambda;
    VecX d = -A.ldlt().solve(g);
    FoldState trial = q;
    for (size_t i = 0; i < free_hinges.size(); ++i)
      trial.gamma[static_cast<size_t>(free_hinges[i])] += d(static_cast<long>(i));
    VecX rt = stack(trial);
    double ct = rt.squaredNorm();
    if (ct < cost) {
      q = trial;
      r = rt;
      cost = ct;
      lambda = std::max(lambda / 10.0, 1e-12);
      if (r.cwiseAbs().maxCoeff() < opt.tol) return q;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  MatX J = select_cols(closure_jacobian(s, q), free_hinges);
  double grad = (J.transpose() * r).norm();
  double scale = std::max(1.0, J.norm()) * r.norm();
  if (grad < 1e-6 * scale && r.cwiseAbs().maxCoeff() > 1e-6)
    throw Error(ErrorCode::DrivenOverconstrained,
                "residual stalls at " + std::to_string(r.cwiseAbs().maxCoeff()) + " with zero gradient");
  throw Error(ErrorCode::NoConvergence, "residual " + std::to_string(r.cwiseAbs().maxCoeff()));
}

FoldState solve_closure(const Structure& s, const std::vector<std::pair<int, double>>& driven, const FoldState& seed,
                        const SolverOptions& opt) {
  FoldState q = seed;
  std::vector<bool> is_driven(s.hinges.size(), false);
  for (auto [h, v] : driven) {
    if (h < 0 || h >= s.hinge_count()) throw Error(ErrorCode::BadIndex, "driven hinge out of range");
    q.gamma[static_cast<size_t>(h)] = v;
    is_driven[static_cast<size_t>(h)] = true;
  }
  std::vector<int> free;
  for (int h = 0; h < s.hinge_count(); ++h)
    if (!is_driven[static_cast<size_t>(h)]) free.push_back(h);
  return solve_free(s, q, free, opt);
}

std::vector<Rigid> cube_poses(const Structure& s, const FoldState& q) {
  std::vector<Rigid> G(s.cubes.size());
  for (const auto& e : s.tree) {
    const HingeSpec& h = s.hinges[static_cast<size_t>(e.hinge)];
    Rigid M = hinge_motion(h, q.gamma[static_cast<size_t>(e.hinge)]);
    const Rigid& P = G[static_cast<size_t>(e.parent - 1)];
    G[static_cast<size_t>(e.cube - 1)] = e.sign > 0 ? P * M : P * M.inverse();
  }
  return G;
}

ShapeMatrix forward_placement(const Structure& s, const FoldState& q, const Tolerances& tol) {
  if (q.size() != s.hinges.size()) throw Error(ErrorCode::BadIndex, "state length does not match hinge count");
  double m = residual_inf(s, q);
  if (m > tol.manifold) throw Error(ErrorCode::NotOnManifold, "closure residual " + std::to_string(m));
  auto G = cube_poses(s, q);
  ShapeMatrix M;
  M.lattice = q.is_lattice(1e-9);
  for (size_t i = 0; i < s.cubes.size(); ++i) {
    Vec3 c = G[i].apply(s.cubes[i].home.cast<double>());
    Mat3 R = G[i].R;
    if (M.lattice) {
      Vec3 r = round_vec(c).cast<double>();
      if ((r - c).cwiseAbs().maxCoeff() > tol.lattice_snap)
        throw Error(ErrorCode::NotLattice, "center off lattice at a lattice state");
      c = r;
      R = R.array().round().matrix();
    }
    M.centers.push_back(c);
    M.orientations.push_back(R);
  }
  return M;
}

namespace {

std::vector<int> active_of(const std::vector<FoldState>& states, double tol) {
  std::vector<int> out;
  if (states.empty()) return out;
  size_t n = states.front().size();
  for (size_t h = 0; h < n; ++h) {
    double g0 = states.front().gamma[h];
    for (const auto& st : states) {
      if (std::abs(st.gamma[h] - g0) > tol) {
        out.push_back(static_cast<int>(h));
        break;
      }
    }
  }
  return out;
}

}  // namespace

void annotate_path(const Structure& s, KinePath& path, const Tolerances& tol) {
  path.active_hinges = active_of(path.states, 1e-9);
  path.path_dof = 0;
  if (path.active_hinges.empty()) return;
  for (size_t i = 1; i + 1 < path.states.size(); ++i) {
    MatX J = closure_jacobian(s, path.states[i]);
    path.path_dof = std::max(path.path_dof, restricted_null_dim(J, path.active_hinges, tol.singular_rel));
  }
  if (path.states.size() <= 2) {
    // no interior samples: use the midpoint of the straight chord
    FoldState mid = path.states.front();
    for (size_t h = 0; h < mid.size(); ++h)
      mid.gamma[h] = 0.5 * (path.states.front().gamma[h] + path.states.back().gamma[h]);
    if (residual_inf(s, mid) < 1e-6) {
      MatX J = closure_jacobian(s, mid);
      path.path_dof = restricted_null_dim(J, path.active_hinges, tol.singular_rel);
    }
  }
}

KinePath continue_path(const Structure& s, const FoldState& from, const DriveSchedule& schedule,
                       const std::optional<FoldState>& to, const ContinueOptions& opt) {
  KinePath path;
  path.schedule = schedule;
  path.states.push_back(from);
  const size_t nd = schedule.driven.size();
  std::vector<bool> fixed(s.hinges.size(), false);
  for (int h : schedule.driven) fixed[static_cast<size_t>(h)] = true;
  for (int h : opt.locked) fixed[static_cast<size_t>(h)] = true;
  std::vector<int> free;
  for (int h = 0; h < s.hinge_count(); ++h)
    if (!fixed[static_cast<size_t>(h)]) free.push_back(h);

  auto check = [&](const FoldState& q, int step) {
    if (!opt.check_collision) return;
    auto G = cube_poses(s, q);
    std::vector<Vec3> c;
    std::vector<Mat3> R;
    for (size_t i = 0; i < s.cubes.size(); ++i) {
      c.push_back(G[i].apply(s.cubes[i].home.cast<double>()));
      R.push_back(G[i].R);
    }
    auto pairs = overlapping_pairs(c, R);
    if (!pairs.empty())
      throw Error(ErrorCode::CollisionOnPath,
                  "cubes " + std::to_string(pairs[0].first) + " and " + std::to_string(pairs[0].second) +
                      " intersect at step " + std::to_string(step),
                  step);
  };

  FoldState cur = from;
  int step = 0;
  for (size_t w = 1; w < schedule.waypoints.size(); ++w) {
    const auto& a = schedule.waypoints[w - 1];
    const auto& b = schedule.waypoints[w];
    double span = 0;
    for (size_t i = 0; i < nd; ++i) span = std::max(span, std::abs(b[i] - a[i]));
    int n = std::max(1, static_cast<int>(std::ceil(span / opt.max_step - 1e-9)));
    // fixed grid of n sub-steps; each may be subdivided on failure
    for (int k = 1; k <= n; ++k) {
      double t0 = static_cast<double>(k - 1) / n, t1 = static_cast<double>(k) / n;
      double h = t1 - t0;
      double t = t0;
      while (t < t1 - 1e-15) {
        double tn = std::min(t1, t + h);
        FoldState trial = cur;
        if (opt.guide.size() == schedule.waypoints.size()) {
          const auto& ga = opt.guide[w - 1].gamma;
          const auto& gb = opt.guide[w].gamma;
          for (int f : free) {
            size_t fi = static_cast<size_t>(f);
            trial.gamma[fi] = ga[fi] + (gb[fi] - ga[fi]) * tn;
          }
        }
        for (size_t i = 0; i < nd; ++i)
          trial.gamma[static_cast<size_t>(schedule.driven[i])] = a[i] + (b[i] - a[i]) * tn;
        try {
          FoldState solved = solve_free(s, trial, free, opt.solver);
          double jump = 0;
          for (int f : free) {
            size_t fi = static_cast<size_t>(f);
            jump = std::max(jump, std::abs(solved.gamma[fi] - cur.gamma[fi]));
          }
          if (jump > std::max(4.0 * span * (tn - t), deg2rad(20.0))) throw Error(ErrorCode::NoConvergence, "branch jump");
          cur = solved;
          t = tn;
          ++step;
          path.states.push_back(cur);
          check(cur, step);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::CollisionOnPath) throw;
          h *= 0.5;
          if (h * span < opt.min_step - 1e-12 && span > 0)
            throw Error(ErrorCode::NoConvergence, std::string("continuation stalled: ") + e.what(), step);
          if (span == 0) throw;
        }
      }
    }
  }
  if (to) {
    double m = 0;
    for (size_t h = 0; h < cur.size(); ++h) {
      double d = std::remainder(cur.gamma[h] - to->gamma[h], 2 * kPi);
      m = std::max(m, std::abs(d));
    }
    if (m > std::max(opt.endpoint_tol, 1e-9))
      throw Error(ErrorCode::WrongEndpoint, "path ends " + std::to_string(rad2deg(m)) + " deg from target");
  }
  annotate_path(s, path);
  return path;
}

double level2_link_length(const Structure& s, const FoldState& q, int link_index) {
  if (s.levels() < 2) throw Error(ErrorCode::BadIndex, "structure has no level-2 links");
  if (link_index < 0 || link_index >= static_cast<int>(s.links.size()))
    throw Error(ErrorCode::BadIndex, "no link " + std::to_string(link_index));
  double m = residual_inf(s, q);
  if (m > 1e-6) throw Error(ErrorCode::NotOnManifold, "closure residual " + std::to_string(m));
  auto G = cube_poses(s, q);
  std::vector<const HingeSpec*> bound;
  for (const auto& h : s.hinges) {
    if (h.level != 2) continue;
    if (s.cube(h.cube_a).link == link_index || s.cube(h.cube_b).link == link_index) bound.push_back(&h);
  }
  if (bound.size() < 2) throw Error(ErrorCode::BadIndex, "link is not bounded by two level-2 hinges");
  auto world_axis = [&](const HingeSpec& h) {
    int c = s.cube(h.cube_a).link == link_index ? h.cube_a : h.cube_b;
    const Rigid& P = G[static_cast<size_t>(c - 1)];
    return std::pair<Vec3, Vec3>{P.apply(h.anchor), P.R * h.axis};
  };
  auto [p1, u1] = world_axis(*bound[0]);
  auto [p2, u2] = world_axis(*bound[1]);
  // closest points, clamped to the finite hinge edges (length 2)
  Vec3 w0 = p1 - p2;
  double b = u1.dot(u2), d = u1.dot(w0), e = u2.dot(w0);
  double den = 1 - b * b;
  double sc = 0, tc = 0;
  if (den > 1e-12) {
    sc = (b * e - d) / den;
    tc = (e - b * d) / den;
  } else {
    tc = e;
  }
  sc = std::clamp(sc, -1.0, 1.0);
  tc = std::clamp(tc, -1.0, 1.0);
  return ((p1 + sc * u1) - (p2 + tc * u2)).norm();
}

ClosedForm8R closed_form_8R(double gamma_drive_deg) {
  ClosedForm8R out;
  out.drive_deg = gamma_drive_deg;
  double g = deg2rad(gamma_drive_deg);
  double sn = std::sin(g), cs = std::cos(g);
  out.printed_deg = rad2deg(std::asin(sn * sn / (1 + cs * cs)));
  out.printed_comp_deg = 180.0 - out.printed_deg;
  out.tetrahedral_deg = rad2deg(std::acos(-1.0 / 3.0));
  Structure s = build_structure(ring8_design());
  // seed on the all-90 state, walk the drive angle from 90 deg in small steps
  FoldState q = FoldState::from_degrees(std::vector<double>(8, 90.0));
  try {
    double cur = 90.0;
    double target = gamma_drive_deg;
    int n = std::max(1, static_cast<int>(std::ceil(std::abs(target - cur) / 1.0)));
    for (int k = 1; k <= n; ++k) {
      double v = deg2rad(cur + (target - cur) * k / n);
      q = solve_closure(s, {{1, v}, {3, v}, {5, v}, {7, v}}, q);
    }
    out.numeric_deg = q.degrees();
    out.numeric_ok = true;
    out.discrepancy_deg = std::abs(out.printed_deg - out.numeric_deg[0]);
  } catch (const Error&) {
    out.numeric_ok = false;
  }
  return out;
}

Vec3 local_axis_move(char axis, double angle_deg, const Vec3& v_local, const Vec3& d) {
  double a = deg2rad(angle_deg);
  double c = std::cos(a), sn = std::sin(a);
  // snap exact lattice angles
  if (std::abs(c) < 1e-15) c = 0;
  if (std::abs(sn) < 1e-15) sn = 0;
  Mat3 t = Mat3::Identity();
  switch (axis) {
    case 'x': t << 1, 0, 0, 0, c, sn, 0, -sn, c; break;
    case 'y': t << c, 0, -sn, 0, 1, 0, sn, 0, c; break;
    default: t << c, sn, 0, -sn, c, 0, 0, 0, 1; break;
  }
  return t * v_local + d;
}

}  // namespace metamorph
