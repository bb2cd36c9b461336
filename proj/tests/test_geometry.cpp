#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cisrl/common.hpp"
#include "cisrl/geometry.hpp"
#include "cisrl/rng.hpp"

#include <array>
#include <cmath>

using namespace cisrl;
using namespace cisrl::geometry;

namespace {

HPolytope unit_box() { return box_to_polytope(BoxSet({-1.0, -1.0}, {1.0, 1.0})); }

// Right triangle x >= 0, y >= 0, x + y <= 1 with unit-norm rows.
HPolytope triangle() {
    HPolytope P;
    P.n = 2;
    P.c = 3;
    const double s = 1.0 / std::sqrt(2.0);
    P.A = {-1.0, 0.0, 0.0, -1.0, s, s};
    P.b = {0.0, 0.0, s};
    P.validate();
    return P;
}

} // namespace

TEST_CASE("margin at the center of the unit box") {
    auto P = unit_box();
    std::array<double, 2> x{0.0, 0.0};
    CHECK(margin(P, x) == -1.0);
}

TEST_CASE("margin on the boundary and outside") {
    auto P = unit_box();
    CHECK(margin(P, std::array<double, 2>{1.0, 0.0}) == 0.0);
    CHECK(margin(P, std::array<double, 2>{1.5, -2.0}) == 1.0);
}

TEST_CASE("contains follows the closed-set convention") {
    auto P = unit_box();
    CHECK(contains(P, std::array<double, 2>{0.0, 0.0}));
    CHECK(contains(P, std::array<double, 2>{1.0, 1.0}));
    CHECK_FALSE(contains(P, std::array<double, 2>{1.0 + 1e-9, 0.0}));
}

TEST_CASE("margin equals a naive per-row maximum bitwise") {
    Rng rng(3);
    HPolytope P;
    P.n = 2;
    P.c = 12;
    // rows of a regular 12-gon, unit norms, so the polytope is bounded
    for (int i = 0; i < 12; ++i) {
        const double th = 2.0 * 3.14159265358979323846 * i / 12.0;
        P.A.push_back(std::cos(th));
        P.A.push_back(std::sin(th));
        P.b.push_back(rng.uniform(0.5, 2.0));
    }
    P.validate();
    for (int t = 0; t < 1000; ++t) {
        std::array<double, 2> x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        double naive = P.A[0] * x[0] + P.A[1] * x[1] - P.b[0];
        for (int i = 1; i < P.c; ++i) {
            const double v = P.A[2 * i] * x[0] + P.A[2 * i + 1] * x[1] - P.b[i];
            if (v > naive) naive = v;
        }
        CHECK(margin(P, x) == naive);
        CHECK(contains(P, x) == (naive <= 0.0));
    }
}

TEST_CASE("dimension mismatch raises") {
    auto P = unit_box();
    std::array<double, 3> x{0, 0, 0};
    CHECK_THROWS_AS(margin(P, x), DimensionError);
}

TEST_CASE("box polytope of the physical constraints") {
    auto P = box_to_polytope(BoxSet({0.0, 345.0}, {1.0, 355.0}));
    CHECK(P.c == 4);
    CHECK(margin(P, std::array<double, 2>{0.5, 350.0}) == -0.5);
}

TEST_CASE("degenerate slab dimension still validates") {
    auto P = box_to_polytope(BoxSet({0.0, 5.0}, {1.0, 5.0}));
    CHECK(margin(P, std::array<double, 2>{0.5, 5.0}) == 0.0);
}

TEST_CASE("unbounded polytopes are rejected") {
    HPolytope P;
    P.n = 2;
    P.c = 3;
    P.A = {1.0, 0.0, -1.0, 0.0, 0.0, 1.0}; // open toward -y
    P.b = {1.0, 1.0, 1.0};
    CHECK_THROWS_AS(P.validate(), DimensionError);
}

TEST_CASE("too few rows are rejected") {
    HPolytope P;
    P.n = 2;
    P.c = 2;
    P.A = {1.0, 0.0, -1.0, 0.0};
    P.b = {1.0, 1.0};
    CHECK_THROWS_AS(P.validate(), DimensionError);
}

TEST_CASE("sampling from box == bounding box accepts on first draw") {
    auto P = unit_box();
    BoxSet bb({-1.0, -1.0}, {1.0, 1.0});
    Rng rng(10);
    Rng probe(10);
    auto x = sample_uniform(P, bb, rng);
    // consumed exactly dim draws => accepted immediately
    double e0 = probe.uniform(-1.0, 1.0), e1 = probe.uniform(-1.0, 1.0);
    CHECK(x[0] == e0);
    CHECK(x[1] == e1);
}

TEST_CASE("triangle samples match the analytic centroid") {
    auto P = triangle();
    BoxSet bb({0.0, 0.0}, {1.0, 1.0});
    Rng rng(12);
    const int n = 100000;
    double sx = 0.0, sy = 0.0;
    for (int i = 0; i < n; ++i) {
        auto x = sample_uniform(P, bb, rng);
        REQUIRE(contains(P, x));
        sx += x[0];
        sy += x[1];
    }
    // var of a coordinate of the uniform triangle is 1/18
    const double sigma3 = 3.0 * std::sqrt(1.0 / 18.0 / n);
    CHECK(std::fabs(sx / n - 1.0 / 3.0) < sigma3);
    CHECK(std::fabs(sy / n - 1.0 / 3.0) < sigma3);
}

TEST_CASE("chi-square uniformity over a 16-cell partition of the box") {
    auto P = unit_box();
    BoxSet bb({-1.0, -1.0}, {1.0, 1.0});
    Rng rng(77);
    const int n = 100000;
    std::array<int, 16> counts{};
    for (int i = 0; i < n; ++i) {
        auto x = sample_uniform(P, bb, rng);
        int cx = std::min(3, static_cast<int>((x[0] + 1.0) / 0.5));
        int cy = std::min(3, static_cast<int>((x[1] + 1.0) / 0.5));
        counts[4 * cy + cx]++;
    }
    const double expected = n / 16.0;
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // df = 15, 0.1% critical value
    CHECK(chi2 < 37.697);
}

TEST_CASE("degenerate sampling target raises after many rejections") {
    // thin sliver far from covering its huge bounding box
    HPolytope P;
    P.n = 2;
    P.c = 4;
    P.A = {1, 0, -1, 0, 0, 1, 0, -1};
    P.b = {1e-7, 1e-7, 1e-7, 1e-7};
    P.validate();
    BoxSet bb({-1000.0, -1000.0}, {1000.0, 1000.0});
    Rng rng(1);
    CHECK_THROWS_AS(sample_uniform(P, bb, rng), DegenerateSetError);
}

TEST_CASE("2-D vertex enumeration and bounding box") {
    auto P = triangle();
    auto verts = vertices_2d(P);
    CHECK(verts.size() == 3);
    auto bb = bounding_box_2d(P);
    CHECK(bb.lower[0] == doctest::Approx(0.0));
    CHECK(bb.upper[0] == doctest::Approx(1.0));
}

TEST_CASE("polytope file format round-trips exactly") {
    auto P = triangle();
    std::string text = serialize_polytope(P);
    auto Q = parse_polytope(text, "mem");
    CHECK(Q.n == P.n);
    CHECK(Q.c == P.c);
    for (size_t i = 0; i < P.A.size(); ++i) CHECK(Q.A[i] == P.A[i]);
    for (size_t i = 0; i < P.b.size(); ++i) CHECK(Q.b[i] == P.b[i]);
}

TEST_CASE("scaled_about shrinks margins toward the center") {
    auto P = unit_box();
    std::array<double, 2> c{0.0, 0.0};
    auto Q = scaled_about(P, c, 0.5);
    CHECK(margin(Q, std::array<double, 2>{0.5, 0.0}) == 0.0);
    CHECK_FALSE(contains(Q, std::array<double, 2>{0.75, 0.0}));
}
