#pragma once

#include "cisrl/rng.hpp"

#include <span>
#include <string>
#include <vector>

namespace cisrl::geometry {

struct BoxSet {
    std::vector<double> lower;
    std::vector<double> upper;

    BoxSet() = default;
    BoxSet(std::vector<double> lo, std::vector<double> hi);

    int dim() const { return static_cast<int>(lower.size()); }
    double width(int i) const { return upper[i] - lower[i]; }
    bool contains(std::span<const double> x) const;
    void validate() const;
};

// H-representation polytope {x : Ax - b <= 0}. Closed set: margin <= 0 is
// inside, so boundary points count as members.
struct HPolytope {
    std::vector<double> A; // row-major, c x n
    std::vector<double> b; // length c
    int n = 0;
    int c = 0;

    std::span<const double> row(int i) const { return {A.data() + size_t(i) * n, size_t(n)}; }

    // Invariants: c >= n+1, nonzero rows, and boundedness (checked by
    // recession-cone analysis for n <= 2; higher dimensions are out of scope).
    void validate() const;
};

// Signed worst violation max_i(A_i . x - b_i); <= 0 iff x is inside.
double margin(const HPolytope& P, std::span<const double> x);
bool contains(const HPolytope& P, std::span<const double> x);

// Rejection sampling from the enclosing box bb (caller guarantees P subset
// of bb). Throws DegenerateSetError when the acceptance rate collapses.
std::vector<double> sample_uniform(const HPolytope& P, const BoxSet& bb, Rng& rng);

HPolytope box_to_polytope(const BoxSet& bb);

// All vertices of a 2-D polytope by pairwise row intersection.
std::vector<std::vector<double>> vertices_2d(const HPolytope& P);
BoxSet bounding_box_2d(const HPolytope& P);

// Scales the polytope about a center point: factor 1 is identity, < 1
// shrinks, > 1 inflates.
HPolytope scaled_about(const HPolytope& P, std::span<const double> center, double factor);

// Text format: first line "n c", then c lines "A_i1 ... A_in b_i".
HPolytope parse_polytope(const std::string& text, const std::string& origin);
HPolytope load_polytope(const std::string& path);
std::string serialize_polytope(const HPolytope& P);

} // namespace cisrl::geometry
