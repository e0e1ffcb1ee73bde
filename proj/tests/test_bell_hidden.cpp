#include "generators.hpp"

#include "qfilt/bell_hidden.hpp"

#include <doctest.h>

#include <cmath>

using namespace qfilt;
using namespace qfilt::bell;

namespace {

// The set algebra written literally: S_lambda(r) = {e : e.r < 2 lambda},
// S^+(r) = {e.r > 0}, S^-(r) = {e.r < 0};
// S_lambda^+ = [S^+ \ S_lambda(r)] u [S^- \ S_{-lambda}(r)].
// Only used away from ties, where the tie-breaking choice is irrelevant.
int set_algebra_oracle(const Vec3& e, double lambda, const Vec3& r) {
  const double u = e.dot(r);
  const bool in_lambda = u < 2 * lambda;
  const bool in_minus_lambda = u < -2 * lambda;
  const bool plus = (u > 0 && !in_lambda) || (u < 0 && !in_minus_lambda);
  return plus ? 1 : -1;
}

}  // namespace

TEST_CASE("pointwise rule against the set algebra") {
  for (std::uint64_t c = 0; c < 2000; ++c) {
    auto rng = gen::stream(2000 + c);
    const Vec3 e = gen::on_sphere(rng);
    const Vec3 r = gen::in_ball(rng);
    const double lambda = rng.uniform() - 0.5;
    const double u = e.dot(r);
    if (std::abs(u - 2 * lambda) < 1e-12 || std::abs(u + 2 * lambda) < 1e-12 || std::abs(u) < 1e-12) continue;
    const Direction d(e);
    CHECK(s_lambda(d, lambda, BlochVector(r)) == set_algebra_oracle(e, lambda, r));
    CHECK(s_lambda(-d, lambda, BlochVector(r)) == -s_lambda(d, lambda, BlochVector(r)));
    CHECK(chi_plus(d, lambda, BlochVector(r)) + chi_plus(-d, lambda, BlochVector(r)) == 1);
  }
}

TEST_CASE("antisymmetry including the equator") {
  const BlochVector r(0, 0, 1);
  for (int i = 0; i < 36; ++i) {
    const double a = i * M_PI / 18;
    const Direction e(Vec3(std::cos(a), std::sin(a), 0.0));
    for (double lambda : {-0.5, -0.2, 0.0, 0.3, 0.5}) CHECK(s_lambda(-e, lambda, r) == -s_lambda(e, lambda, r));
  }
}

TEST_CASE("polar direction is +1 below lambda = 1/2") {
  const BlochVector r(0, 0, 1);
  const Direction e(Vec3(0, 0, 1));
  for (double lambda = -0.5; lambda < 0.5; lambda += 0.01) CHECK(s_lambda(e, lambda, r) == 1);
  CHECK_THROWS(s_lambda(e, 0.6, r));
}

TEST_CASE("lambda mean") {
  const BlochVector ez(0, 0, 1);
  CHECK(lambda_mean(Direction(Vec3(1, 0, 0)), ez) == doctest::Approx(0.0));
  CHECK(lambda_mean(Direction(Vec3(0, 0, 1)), ez) == doctest::Approx(1.0).epsilon(1e-15));
  for (const auto& e : fibonacci_directions(100)) {
    CHECK(std::abs(lambda_mean(e, ez) - e.vec().z()) <= 1e-12);
  }
  for (std::uint64_t c = 0; c < 20; ++c) {
    auto rng = gen::stream(2600 + c);
    const Direction e(gen::on_sphere(rng));
    const BlochVector r(gen::in_ball(rng));
    CHECK(std::abs(lambda_mean(e, r) - e.vec().dot(r.vec())) <= 1e-12);
    // midpoint rule converges at rate 1/n: two breakpoints, each costing at most h
    CHECK(std::abs(lambda_mean_midpoint(e, r, 100000) - e.vec().dot(r.vec())) <= 2.0 / 100000 + 1e-12);
  }
}

TEST_CASE("discontinuity") {
  const BlochVector ez(0, 0, 1);
  const DiscontinuityReport rep = discontinuity_probe(0.1, ez, {1e-2, 1e-4, 1e-8});
  CHECK(rep.has_boundary);
  CHECK(rep.boundary == "circle");
  CHECK(rep.e_boundary.z() == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(rep.jump == 2);
  for (const auto& w : rep.witnesses) {
    CHECK(w.s_plus != w.s_minus);
    const double ang = std::acos(std::clamp(w.e_plus.dot(w.e_minus), -1.0, 1.0));
    CHECK(ang <= w.separation * 1.0001 + 1e-12);
  }
  const DiscontinuityReport none = discontinuity_probe(0.49, BlochVector(0, 0, 0.1), {1e-4});
  CHECK(!none.has_boundary);
  CHECK(none.boundary == "no boundary");
  const DiscontinuityReport eq = discontinuity_probe(-0.2, ez, {1e-6});
  CHECK(eq.has_boundary);
  CHECK(eq.jump == 2);
}

TEST_CASE("second moment and affinity") {
  const Direction ez(Vec3(0, 0, 1)), ex(Vec3(1, 0, 0));
  for (std::uint64_t c = 0; c < 20; ++c) {
    auto rng = gen::stream(2800 + c);
    const Direction e(gen::on_sphere(rng));
    const BlochVector r(gen::in_ball(rng));
    // chi is an indicator, so chi^2 = chi
    CHECK(second_moment(e, e, r) == doctest::Approx(0.5 * (1.0 + e.vec().dot(r.vec()))).epsilon(1e-12));
  }
  const AffinityReport col = affinity_sweep(ez, ez, BlochVector(0, 0, 0.9), BlochVector(0, 0, -0.3));
  CHECK(col.max_deviation <= 1e-9);
  const AffinityReport col2 = affinity_sweep(ez, -ez, BlochVector(0, 0, 0.7), BlochVector(0, 0, 0.2));
  CHECK(col2.max_deviation <= 1e-9);
  const AffinityReport orth = affinity_sweep(ez, ex, BlochVector(0.6, 0, 0.8), BlochVector(0.8, 0, 0.6));
  CHECK(orth.max_deviation > 1e-3);
  CHECK(orth.points.size() == 5);
}
