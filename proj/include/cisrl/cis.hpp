#pragma once

#include "cisrl/dynamics.hpp"
#include "cisrl/geometry.hpp"
#include "cisrl/rng.hpp"

#include <functional>
#include <string>
#include <vector>

// Grid-based viability-kernel computation of (robust) control invariant sets,
// convex-polytope extraction, sampling-based invariance verification, and the
// per-cell backup action table.

namespace cisrl::cis {

struct Grid {
    geometry::BoxSet box;
    std::vector<int> resolution; // cells per dimension, >= 8 each

    void validate() const;
    int dim() const { return box.dim(); }
    size_t cell_count() const;
    double width(int axis) const { return box.width(axis) / resolution[axis]; }

    // row-major cell indexing, axis 0 slowest
    std::vector<double> center(size_t cell) const;
    void center_into(size_t cell, double* out) const;
    // cell containing x; false when x is outside the box
    bool locate(std::span<const double> x, size_t& cell) const;
};

struct GriddedSet {
    Grid grid;
    std::vector<uint8_t> member;
    size_t member_count = 0;

    bool is_member(size_t cell) const { return member[cell] != 0; }
};

struct BackupTable {
    // certified input per member cell; NaN elsewhere
    std::vector<double> input;

    bool has(size_t cell) const;
};

// Batched discrete map under one shared input: out dims are SoA like in.
// in/out layouts: [dim][count] contiguous per dimension.
using BatchMap = std::function<void(const double* const* in, double u, double* const* out,
                                    size_t count)>;

struct SynthesisTrace {
    std::vector<size_t> member_counts; // one entry per sweep, monotone
    size_t iterations = 0;
};

struct SynthesisResult {
    GriddedSet set;
    BackupTable backup;
    SynthesisTrace trace;
};

// Fixed-point viability iteration. A cell survives a sweep when some input in
// u_grid maps its center, for every disturbance offset (plus the zero
// offset), into the retained region with one cell width of slack per axis.
// w_offsets are the *discrete-map* offsets G*w, one vector per vertex.
SynthesisResult synthesize_generic(const BatchMap& map, const Grid& grid,
                                   const std::vector<double>& u_grid,
                                   const std::vector<std::vector<double>>& w_offsets);

// Reactor-specific entry: builds the batched map from the SIMD kernels and
// converts disturbance vertices to additive offsets via dt*(q/V).
SynthesisResult synthesize(const dynamics::ModelParams& p, const geometry::BoxSet& X,
                           const std::vector<double>& u_grid,
                           const std::vector<dynamics::Disturbance>& w_vertices,
                           const Grid& grid);

struct VerificationReport {
    std::vector<std::vector<double>> counterexamples;
    size_t samples_checked = 0;
    bool passed() const { return counterexamples.empty(); }
};

// Draws n_samples points in P (half of them biased to within one cell width
// of the boundary) and searches u_grid for an input whose worst-case mapped
// margin stays non-positive. Deterministic for a given seed.
VerificationReport verify_invariance(const geometry::HPolytope& P, const BatchMap& map,
                                     const std::vector<double>& u_grid,
                                     const std::vector<std::vector<double>>& w_offsets,
                                     size_t n_samples, const Grid& grid, uint64_t seed);

VerificationReport verify_invariance(const geometry::HPolytope& P,
                                     const dynamics::ModelParams& p,
                                     const std::vector<double>& u_grid,
                                     const std::vector<dynamics::Disturbance>& w_vertices,
                                     size_t n_samples, const Grid& grid, uint64_t seed);

// Monotone-chain hull of member cell centers, shrunk toward its centroid in
// 1% steps until verify_invariance reports no counterexamples. Throws
// SynthesisError once the shrink factor would drop below 50%.
geometry::HPolytope extract_polytope(const GriddedSet& S, const BatchMap& map,
                                     const std::vector<double>& u_grid,
                                     const std::vector<std::vector<double>>& w_offsets,
                                     size_t verify_samples, uint64_t seed);

geometry::HPolytope extract_polytope(const GriddedSet& S, const dynamics::ModelParams& p,
                                     const std::vector<double>& u_grid,
                                     const std::vector<dynamics::Disturbance>& w_vertices,
                                     size_t verify_samples, uint64_t seed);

// Stored input of the member cell containing x, else of the nearest member
// cell center (normalized Euclidean distance, ties to the lowest index).
double backup_lookup(const BackupTable& table, const GriddedSet& S, std::span<const double> x);

// Re-certifies every table entry against the final set, replacing inputs
// that no longer pass; used after extraction to align table and polytope.
void refine_backup_against_polytope(BackupTable& table, const GriddedSet& S,
                                    const geometry::HPolytope& P, const BatchMap& map,
                                    const std::vector<double>& u_grid,
                                    const std::vector<std::vector<double>>& w_offsets);

// BatchMap adapters.
BatchMap make_cstr_map(const dynamics::ModelParams& p);

// One-file persistence: header "n res... lower... upper...", then one line
// "cell_index u" per member cell.
std::string serialize_gridded(const GriddedSet& S, const BackupTable& table);
void parse_gridded(const std::string& text, const std::string& origin, GriddedSet& S,
                   BackupTable& table);
void save_gridded(const std::string& path, const GriddedSet& S, const BackupTable& table);
void load_gridded(const std::string& path, GriddedSet& S, BackupTable& table);

// Evenly spaced input grid over [lo, hi], endpoints included.
std::vector<double> linspace(double lo, double hi, int points);

// The four vertices of the disturbance box, plus helpers.
std::vector<dynamics::Disturbance> disturbance_vertices(const geometry::BoxSet& W);
std::vector<std::vector<double>> disturbance_offsets(const dynamics::ModelParams& p,
                                                     const std::vector<dynamics::Disturbance>& ws);

} // namespace cisrl::cis
