#include "get/projection.hpp"

#include <doctest.h>

#include <array>
#include <random>

using namespace get;

TEST_CASE("heaviside branch and band-center values") {
  ProjectionParams p;  // T=0.5, eps=0.02, alpha=1e-3

  // band center: odd terms vanish
  CHECK(heaviside(0.5, p) == doctest::Approx(0.5005).epsilon(1e-14));
  // branch values and continuity at the band edges
  CHECK(heaviside(0.5 + 0.02, p) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(heaviside(0.5 - 0.02, p) == doctest::Approx(0.001).epsilon(1e-9));
  CHECK(heaviside(10.0, p) == 1.0);
  CHECK(heaviside(-10.0, p) == 0.001);
  // direct substitution at T + eps/2
  const double expected = 3.0 * 0.999 / 4.0 * (0.5 - 1.0 / 24.0) + 0.5005;
  CHECK(heaviside(0.51, p) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.84390625).epsilon(1e-8));
}

TEST_CASE("heaviside with epsilon = 0 is the pure step, boundary solid") {
  ProjectionParams p;
  p.epsilon = 0.0;
  CHECK(heaviside(0.5, p) == 1.0);  // phi = T belongs to the structure
  CHECK(heaviside(0.5 + 1e-12, p) == 1.0);
  CHECK(heaviside(0.5 - 1e-12, p) == 0.001);
  CHECK_THROWS_AS(heaviside_derivative(0.5, p), DefinitionError);
}

TEST_CASE("heaviside derivative: bump inside the band, zero outside") {
  ProjectionParams p;
  CHECK(heaviside_derivative(0.5 + 0.02, p) == 0.0);
  CHECK(heaviside_derivative(0.5 - 0.02, p) == 0.0);
  CHECK(heaviside_derivative(0.6, p) == 0.0);
  CHECK(heaviside_derivative(0.5, p) == doctest::Approx(37.4625).epsilon(1e-12));

  // central finite differences at 50 interior band points
  for (int i = 1; i < 50; ++i) {
    const double phi = 0.5 - 0.02 + 0.04 * i / 50.0;
    const double step = 1e-7;
    const double fd = (heaviside(phi + step, p) - heaviside(phi - step, p)) / (2.0 * step);
    const double an = heaviside_derivative(phi, p);
    CHECK(std::abs(an - fd) / std::max(std::abs(fd), 1e-10) < 1e-6);
  }
}

TEST_CASE("heaviside is monotone, C1 at band edges, and stays in range") {
  ProjectionParams p;
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(0.40, 0.60);
  double prev_phi = 0.0, prev_val = -1.0;
  std::vector<double> phis;
  for (int i = 0; i < 300; ++i) phis.push_back(u(rng));
  std::sort(phis.begin(), phis.end());
  for (double phi : phis) {
    const double v = heaviside(phi, p);
    CHECK(v >= p.alpha_floor);
    CHECK(v <= 1.0);
    if (prev_val >= 0.0 && phi > prev_phi) CHECK(v >= prev_val);
    prev_phi = phi;
    prev_val = v;
  }
  // derivative also vanishes at the edges (C1)
  CHECK(heaviside_derivative(0.52, p) == 0.0);
  CHECK(heaviside_derivative(0.48, p) == 0.0);
  CHECK(heaviside_derivative(0.52 - 1e-9, p) < 1e-2);
}

TEST_CASE("element density is the nodal heaviside mean") {
  ProjectionParams p;
  std::array<double, 4> solid = {2.0, 1.5, 3.0, 0.9};
  CHECK(element_density(solid, p) == 1.0);
  std::array<double, 4> hollow = {0.0, 0.1, 0.2, 0.3};
  CHECK(element_density(hollow, p) == doctest::Approx(0.001).epsilon(1e-12));
  std::array<double, 4> mixed = {2.0, 2.0, 0.0, 0.0};
  CHECK(element_density(mixed, p) == doctest::Approx(0.5005).epsilon(1e-12));

  std::array<double, 8> hex = {2, 2, 2, 2, 0, 0, 0, 0};
  CHECK(element_density(hex, p) == doctest::Approx(0.5005).epsilon(1e-12));

  std::array<double, 5> bad = {1, 1, 1, 1, 1};
  CHECK_THROWS_AS(element_density(bad, p), ShapeError);
}

TEST_CASE("measure of non-discreteness closed forms") {
  std::vector<double> gray(100, 0.5);
  CHECK(measure_nondiscreteness(gray) == doctest::Approx(100.0).epsilon(1e-12));

  std::vector<double> binary;
  for (int i = 0; i < 50; ++i) {
    binary.push_back(1.0);
    binary.push_back(0.0);
  }
  CHECK(measure_nondiscreteness(binary) == 0.0);

  std::vector<double> halves;
  for (int i = 0; i < 10; ++i) {
    halves.push_back(0.25);
    halves.push_back(0.75);
  }
  CHECK(measure_nondiscreteness(halves) == doctest::Approx(75.0).epsilon(1e-12));

  // floor densities count as void so the black-and-white baseline reports 0
  std::vector<double> floored;
  for (int i = 0; i < 50; ++i) {
    floored.push_back(1.0);
    floored.push_back(0.001);
  }
  CHECK(measure_nondiscreteness(floored) == 0.0);
}

TEST_CASE("epsilon = 0 projection is two-valued") {
  ProjectionParams p;
  p.epsilon = 0.0;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.5);
  for (int i = 0; i < 200; ++i) {
    const double v = heaviside(u(rng), p);
    CHECK((v == 1.0 || v == p.alpha_floor));
  }
}
