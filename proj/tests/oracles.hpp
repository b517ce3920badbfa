#pragma once

// Reference computations shared by the tests and the acceptance runner.
// The reference values are rebuilt from the closure residual and the
// placement alone, never from the engine's Jacobian or graph search.

#include "metamorph/shapespace.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using namespace metamorph;

inline std::vector<double> flat_residuals(const Structure& s, const FoldState& q) {
  std::vector<double> out;
  for (const auto& r : loop_residual(s, q))
    for (int k = 0; k < 6; ++k) out.push_back(r(k));
  return out;
}

// Central differences of the loop residual.
inline MatX fd_jacobian(const Structure& s, const FoldState& q, double h = 1e-6) {
  const size_t m = flat_residuals(s, q).size();
  MatX J(static_cast<long>(m), static_cast<long>(q.size()));
  for (size_t j = 0; j < q.size(); ++j) {
    FoldState a = q, b = q;
    a.gamma[j] += h;
    b.gamma[j] -= h;
    auto ra = flat_residuals(s, a), rb = flat_residuals(s, b);
    for (size_t i = 0; i < m; ++i) J(static_cast<long>(i), static_cast<long>(j)) = (ra[i] - rb[i]) / (2 * h);
  }
  return J;
}

// Rank cut at 1e-8 of the largest singular value; central differences are
// accurate to about 1e-10 here, well below the cut.
inline int fd_null_dim(const Structure& s, const FoldState& q) {
  MatX J = fd_jacobian(s, q);
  Eigen::JacobiSVD<MatX> svd(J);
  VecX sv = svd.singularValues();
  double top = sv.size() ? sv(0) : 0.0;
  int rank = 0;
  for (long i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-8 * std::max(top, 1.0);
  return static_cast<int>(q.size()) - rank;
}

// Largest entrywise |a - f| / max(1, |f|).
inline double max_rel_error(const MatX& a, const MatX& f) {
  double worst = 0;
  for (long r = 0; r < a.rows(); ++r)
    for (long c = 0; c < a.cols(); ++c)
      worst = std::max(worst, std::abs(a(r, c) - f(r, c)) / std::max(1.0, std::abs(f(r, c))));
  return worst;
}

struct BruteForce {
  size_t candidates = 0;
  size_t closed_free = 0;          // closing, collision-free lattice states
  std::set<std::string> reachable;  // keys joined to the flat state by single-hinge drives
};

// Every {0,90,180,270} assignment of an 8-hinge ring, closure and overlap
// checked, then joined wherever driving one differing hinge (the others
// that differ free, the rest locked) carries one state to the other.
inline BruteForce ring_brute_force(const Structure& s) {
  BruteForce out;
  const int n = s.hinge_count();
  std::vector<std::vector<int>> states;
  std::vector<std::string> keys;
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 4;
  for (long c = 0; c < total; ++c) {
    ++out.candidates;
    std::vector<int> k;
    long x = c;
    for (int i = 0; i < n; ++i) {
      k.push_back(static_cast<int>(x % 4));
      x /= 4;
    }
    std::vector<double> d;
    for (int v : k) d.push_back(90.0 * v);
    FoldState q = FoldState::from_degrees(d);
    if (residual_inf(s, q) > 1e-9) continue;
    ShapeMatrix m = forward_placement(s, q);
    if (!coincident_pairs(m.lattice_centers()).empty()) continue;
    states.push_back(k);
    keys.push_back(canonicalize(m));
  }
  out.closed_free = states.size();
  auto rad = [](const std::vector<int>& k) {
    FoldState q;
    for (int v : k) q.gamma.push_back(deg2rad(90.0 * v));
    return q;
  };
  const size_t count = states.size();
  std::vector<std::vector<size_t>> adj(count);
  for (size_t a = 0; a < count; ++a)
    for (size_t b = a + 1; b < count; ++b) {
      std::vector<int> diff;
      for (int h = 0; h < n; ++h)
        if (states[a][static_cast<size_t>(h)] != states[b][static_cast<size_t>(h)]) diff.push_back(h);
      bool linked = false;
      for (int d : diff) {
        for (int sg : {1, -1}) {
          FoldState qa = rad(states[a]), qb = rad(states[b]);
          int delta = ((states[b][static_cast<size_t>(d)] - states[a][static_cast<size_t>(d)]) % 4 + 4) % 4;
          double span = sg > 0 ? delta * 90.0 : (delta - 4) * 90.0;
          DriveSchedule sc;
          sc.driven = {d};
          sc.waypoints = {{qa.gamma[static_cast<size_t>(d)]}, {qa.gamma[static_cast<size_t>(d)] + deg2rad(span)}};
          ContinueOptions co;
          for (int h = 0; h < n; ++h)
            if (std::find(diff.begin(), diff.end(), h) == diff.end()) co.locked.push_back(h);
          co.endpoint_tol = 1e-6;
          try {
            continue_path(s, qa, sc, qb, co);
            linked = true;
            break;
          } catch (const Error&) {
          }
        }
        if (linked) break;
      }
      if (linked) {
        adj[a].push_back(b);
        adj[b].push_back(a);
      }
    }
  size_t flat = 0;
  for (size_t i = 0; i < count; ++i)
    if (std::all_of(states[i].begin(), states[i].end(), [](int v) { return v == 2; })) flat = i;
  std::vector<char> seen(count, 0);
  std::queue<size_t> q;
  q.push(flat);
  seen[flat] = 1;
  while (!q.empty()) {
    size_t u = q.front();
    q.pop();
    for (size_t v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        q.push(v);
      }
  }
  for (size_t i = 0; i < count; ++i)
    if (seen[i]) out.reachable.insert(keys[i]);
  return out;
}

// Random on-manifold state: a random walk along the null space from flat.
inline FoldState random_manifold_state(const Structure& s, std::mt19937_64& rng, int steps = 6) {
  std::normal_distribution<double> n(0.0, 1.0);
  FoldState q = FoldState::flat(s);
  for (int k = 0; k < steps; ++k) {
    KinematicsReport rep = dof_analysis(s, q);
    if (rep.null_dim == 0) break;
    VecX c(rep.null_dim);
    for (int i = 0; i < rep.null_dim; ++i) c(i) = n(rng);
    VecX dir = rep.null_basis * c;
    dir /= dir.cwiseAbs().maxCoeff();
    FoldState next = q;
    for (size_t i = 0; i < q.size(); ++i) next.gamma[i] += deg2rad(4.0) * dir(static_cast<long>(i));
    std::vector<int> all(q.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    try {
      q = solve_free(s, next, all);
    } catch (const Error&) {
      break;
    }
  }
  return q;
}

}  // namespace oracle
