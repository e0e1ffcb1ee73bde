#pragma once

// Dispersion-free hidden-variable states of a qubit: for each lambda in
// [-1/2, 1/2] a reflection-antisymmetric partition of the sphere of
// directions, so that every spin projection takes a definite value +-1 and
// the lambda-average recovers the quantum mean e.r.
//
// Pointwise rule with u = e.r:
//   u > 0: s = +1 iff u >= 2 lambda
//   u < 0: s = +1 iff u > -2 lambda
//   u = 0: the u -> 0+ rule (s = +1 iff lambda <= 0) when e points along a
//          fixed secondary frame orthogonal to r, the u -> 0- rule
//          (s = +1 iff lambda > 0) otherwise.
// On the equator this keeps s(-e) = -s(e) and a zero lambda-mean.

#include "qfilt/statespace.hpp"

#include <string>
#include <vector>

namespace qfilt::bell {

/// Unit vector, validated to 1e-12.
class Direction {
 public:
  explicit Direction(const Vec3& e);
  const Vec3& vec() const { return e_; }
  Direction operator-() const { return Direction(Vec3(-e_)); }

 private:
  Vec3 e_;
};

/// Hidden spin value s_lambda(e) in {-1, +1}; requires |lambda| <= 1/2.
int s_lambda(const Direction& e, double lambda, const BlochVector& r);

/// Zero-one probability <P(e)>_lambda = (1 + s_lambda(e)) / 2.
int chi_plus(const Direction& e, double lambda, const BlochVector& r);

/// Exact lambda-average of s_lambda(e) by integrating the step function
/// between its breakpoints.
double lambda_mean(const Direction& e, const BlochVector& r);
/// Midpoint rule with n nodes on [-1/2, 1/2].
double lambda_mean_midpoint(const Direction& e, const BlochVector& r, int n);

struct DiscontinuityWitness {
  double separation = 0.0;  // angle between the two directions
  Vec3 e_plus = Vec3::Zero();
  Vec3 e_minus = Vec3::Zero();
  int s_plus = 0;
  int s_minus = 0;
};

struct DiscontinuityReport {
  bool has_boundary = false;
  /// "circle" (e.r = 2 lambda), "equator" (e.r = 0) or "no boundary".
  std::string boundary;
  Vec3 e_boundary = Vec3::Zero();
  std::vector<DiscontinuityWitness> witnesses;
  /// Largest |s_plus - s_minus| over the witnesses.
  int jump = 0;
};

/// Straddles the boundary of the +1 set: the circle e.r = 2 lambda for
/// lambda > 0 (needs 2 lambda <= |r|), the equator e.r = 0 for lambda <= 0.
DiscontinuityReport discontinuity_probe(double lambda, const BlochVector& r,
                                        const std::vector<double>& separations);

/// M[chi_lambda^+(e) chi_lambda^+(f)], exact in lambda.
double second_moment(const Direction& e, const Direction& f, const BlochVector& r);

struct AffinityPoint {
  double alpha = 0.0;
  double moment = 0.0;
  double interpolated = 0.0;
  double deviation = 0.0;
};

struct AffinityReport {
  std::vector<AffinityPoint> points;
  double max_deviation = 0.0;
};

/// Compares the moment at r = alpha r1 + (1 - alpha) r2 with the alpha
/// interpolation of the endpoint moments.
AffinityReport affinity_sweep(const Direction& e, const Direction& f, const BlochVector& r1,
                              const BlochVector& r2,
                              const std::vector<double>& alphas = {0.0, 0.25, 0.5, 0.75, 1.0});

/// n directions on a Fibonacci spiral.
std::vector<Direction> fibonacci_directions(int n);

}  // namespace qfilt::bell
