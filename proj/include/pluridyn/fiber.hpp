#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pluridyn/endomorphism.hpp"
#include "pluridyn/parallel.hpp"
#include "pluridyn/projective.hpp"

namespace pluridyn {

struct FiberOptions {
  double dedup_radius = 1e-7;
  double residual_tol = 1e-9;
  int rounds = 3;
  int oversample = 8;
  std::uint64_t seed = 0x66696272ULL;
  /// Return a short fiber (flagged) instead of throwing IncompleteFiber.
  bool allow_incomplete = false;
};

/// f^{-1}(a) with multiplicities. `flagged` marks fibers whose count needed
/// a multiplicity probe or that came back short (allow_incomplete).
struct Fiber {
  ProjPoint base;
  std::vector<ProjPoint> points;
  std::vector<int> multiplicities;
  std::vector<double> residuals;
  bool flagged = false;

  int total_multiplicity() const;
};

Fiber fiber(const HomEndo& f, const ProjPoint& a, const FiberOptions& opts = {});

/// One draw from f^{-1}(a), each point chosen with probability m/d^k.
ProjPoint random_preimage(const HomEndo& f, const ProjPoint& a, std::uint64_t seed, const FiberOptions& opts = {});
ProjPoint pick_preimage(const Fiber& fib, Rng& rng);

/// Projective Newton for f^n(z) = a from the start z0. Returns the converged
/// unit representative or nullopt. `sigma_ratio` receives the smallest over
/// largest singular value of the final Newton matrix when given.
std::optional<HVec> newton_preimage(const HomEndo& f, int n, const ProjPoint& a, HVec z0, double* sigma_ratio = nullptr);

/// Local inverse of f^depth on a Euclidean ball in the chart of the center
/// (largest coordinate), continued from a chosen preimage of the center.
class InverseBranch {
 public:
  InverseBranch(const HomEndo& f, const ProjPoint& center, double radius, const ProjPoint& branch_seed, int depth = 1);

  ProjPoint operator()(const ProjPoint& x) const;
  /// Largest pairwise fs_distance among images of boundary and interior probes.
  double image_diameter(int probes = 48) const;
  int chart() const { return chart_; }
  double radius() const { return radius_; }

 private:
  HVec continue_along(const HVec& from_w, const HVec& to_w, HVec z, bool check_jacobian) const;

  const HomEndo* f_;
  ProjPoint center_;
  HVec center_w_;
  double radius_;
  int chart_;
  int depth_;
  HVec seed_z_;
};

struct TreeNode {
  ProjPoint point;
  double weight = 0.0;
  int parent = -1;
};

/// Levels of d^{-kn} (f^n)^* delta_a. Exact mode keeps every leaf; otherwise
/// each level is reduced to at most `cap` nodes by systematic resampling.
struct BackwardTree {
  ProjPoint root;
  int depth = 0;
  bool exact = true;
  bool pruned = false;
  int incomplete_fibers = 0;
  std::vector<std::vector<TreeNode>> levels;

  const std::vector<TreeNode>& leaves() const { return levels.back(); }
};

struct TreeOptions {
  std::size_t cap = 1u << 16;
  std::uint64_t seed = 0;
  Parallel par;
  FiberOptions fiber;
};

BackwardTree backward_tree(const HomEndo& f, const ProjPoint& a, int n, const TreeOptions& opts = {});

/// JSON object with root, depth, leaf coordinates and weights.
std::string tree_to_json(const BackwardTree& tree);

}  // namespace pluridyn
