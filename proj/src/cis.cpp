#include "cisrl/cis.hpp"

#include "cisrl/common.hpp"
#include "cisrl/kernels.hpp"
#include "cisrl/text_io.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace cisrl::cis {

void Grid::validate() const {
    box.validate();
    if (static_cast<int>(resolution.size()) != box.dim())
        throw DimensionError("Grid: resolution dimension mismatch");
    for (int r : resolution)
        if (r < 8) throw DimensionError("Grid: resolution must be >= 8 per dimension");
}

size_t Grid::cell_count() const {
    size_t n = 1;
    for (int r : resolution) n *= static_cast<size_t>(r);
    return n;
}

void Grid::center_into(size_t cell, double* out) const {
    const int d = dim();
    for (int a = d - 1; a >= 0; --a) {
        const size_t r = static_cast<size_t>(resolution[a]);
        const size_t i = cell % r;
        cell /= r;
        out[a] = box.lower[a] + (static_cast<double>(i) + 0.5) * width(a);
    }
}

std::vector<double> Grid::center(size_t cell) const {
    std::vector<double> out(dim());
    center_into(cell, out.data());
    return out;
}

bool Grid::locate(std::span<const double> x, size_t& cell) const {
    if (static_cast<int>(x.size()) != dim()) throw DimensionError("Grid::locate: bad dim");
    size_t idx = 0;
    for (int a = 0; a < dim(); ++a) {
        if (x[a] < box.lower[a] || x[a] > box.upper[a]) return false;
        long i = static_cast<long>(std::floor((x[a] - box.lower[a]) / width(a)));
        if (i < 0) i = 0;
        if (i >= resolution[a]) i = resolution[a] - 1; // closed upper edge
        idx = idx * static_cast<size_t>(resolution[a]) + static_cast<size_t>(i);
    }
    cell = idx;
    return true;
}

bool BackupTable::has(size_t cell) const {
    return cell < input.size() && !std::isnan(input[cell]);
}

std::vector<double> linspace(double lo, double hi, int points) {
    if (points < 2) throw ConfigError("linspace: need at least 2 points");
    std::vector<double> v(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (int i = 0; i < points; ++i) v[i] = lo + step * i;
    v.back() = hi;
    return v;
}

std::vector<dynamics::Disturbance> disturbance_vertices(const geometry::BoxSet& W) {
    if (W.dim() != 2) throw DimensionError("disturbance_vertices: W must be 2-D");
    std::vector<dynamics::Disturbance> out;
    for (double wc : {W.lower[0], W.upper[0]})
        for (double wt : {W.lower[1], W.upper[1]}) out.push_back({wc, wt});
    return out;
}

std::vector<std::vector<double>> disturbance_offsets(
    const dynamics::ModelParams& p, const std::vector<dynamics::Disturbance>& ws) {
    const double g = p.disturbance_gain();
    std::vector<std::vector<double>> out;
    out.reserve(ws.size());
    for (const auto& w : ws) out.push_back({g * w.w_cA, g * w.w_T});
    return out;
}

BatchMap make_cstr_map(const dynamics::ModelParams& p) {
    const dynamics::CstrConsts c = dynamics::CstrConsts::from(p);
    return [c](const double* const* in, double u, double* const* out, size_t count) {
        kernels::batch_step_shared_u(c, in[0], in[1], u, out[0], out[1], count);
    };
}

namespace {

// Membership with one cell width of slack per axis: the box
// [y - widths, y + widths] must be covered by member cells and stay strictly
// inside the grid box. An inner approximation robust to intra-cell variation.
class SlackChecker {
  public:
    explicit SlackChecker(const Grid& g) : grid_(g), dim_(g.dim()) {
        for (int a = 0; a < dim_; ++a) {
            widths_.push_back(g.width(a));
            inv_w_.push_back(1.0 / g.width(a));
        }
    }

    bool covered(const double* y, const std::vector<uint8_t>& mask) const {
        long lo[4], hi[4];
        for (int a = 0; a < dim_; ++a) {
            const double ylo = y[a] - widths_[a];
            const double yhi = y[a] + widths_[a];
            if (!(ylo >= grid_.box.lower[a]) || !(yhi <= grid_.box.upper[a])) return false;
            lo[a] = static_cast<long>(std::floor((ylo - grid_.box.lower[a]) * inv_w_[a]));
            hi[a] = static_cast<long>(std::floor((yhi - grid_.box.lower[a]) * inv_w_[a]));
            if (lo[a] < 0) return false;
            if (hi[a] >= grid_.resolution[a]) return false; // touching the rim fails
        }
        if (dim_ == 1) {
            for (long i = lo[0]; i <= hi[0]; ++i)
                if (!mask[static_cast<size_t>(i)]) return false;
            return true;
        }
        if (dim_ == 2) {
            const size_t r1 = static_cast<size_t>(grid_.resolution[1]);
            for (long i = lo[0]; i <= hi[0]; ++i) {
                const size_t base = static_cast<size_t>(i) * r1;
                for (long j = lo[1]; j <= hi[1]; ++j)
                    if (!mask[base + static_cast<size_t>(j)]) return false;
            }
            return true;
        }
        const size_t r1 = static_cast<size_t>(grid_.resolution[1]);
        const size_t r2 = static_cast<size_t>(grid_.resolution[2]);
        for (long i = lo[0]; i <= hi[0]; ++i)
            for (long j = lo[1]; j <= hi[1]; ++j) {
                const size_t base = (static_cast<size_t>(i) * r1 + static_cast<size_t>(j)) * r2;
                for (long k = lo[2]; k <= hi[2]; ++k)
                    if (!mask[base + static_cast<size_t>(k)]) return false;
            }
        return true;
    }

  private:
    const Grid& grid_;
    int dim_;
    std::vector<double> widths_;
    std::vector<double> inv_w_;
};

// Flow table: the deterministic map of every cell center under every input,
// built once; sweeps and the backup pass become pure lookups.
struct FlowTable {
    int dim = 0;
    size_t cells = 0;
    size_t n_u = 0;
    std::vector<double> data; // [u][axis][cell]

    const double* at(size_t u_idx, int axis) const {
        return data.data() + (u_idx * static_cast<size_t>(dim) + static_cast<size_t>(axis)) * cells;
    }
};

FlowTable build_flow_table(const BatchMap& map, const Grid& grid,
                           const std::vector<double>& u_grid) {
    FlowTable t;
    t.dim = grid.dim();
    t.cells = grid.cell_count();
    t.n_u = u_grid.size();
    t.data.resize(t.n_u * static_cast<size_t>(t.dim) * t.cells);

    std::vector<std::vector<double>> centers(t.dim, std::vector<double>(t.cells));
    std::vector<double> c(t.dim);
    for (size_t cell = 0; cell < t.cells; ++cell) {
        grid.center_into(cell, c.data());
        for (int a = 0; a < t.dim; ++a) centers[a][cell] = c[a];
    }
    std::vector<const double*> in(t.dim);
    for (int a = 0; a < t.dim; ++a) in[a] = centers[a].data();

    auto work = [&](size_t u_begin, size_t u_end) {
        std::vector<double*> out(t.dim);
        for (size_t ui = u_begin; ui < u_end; ++ui) {
            for (int a = 0; a < t.dim; ++a)
                out[a] =
                    t.data.data() + (ui * static_cast<size_t>(t.dim) + static_cast<size_t>(a)) * t.cells;
            map(in.data(), u_grid[ui], out.data(), t.cells);
        }
    };
    const unsigned hw = std::max(1u, std::min(2u, std::thread::hardware_concurrency()));
    if (hw >= 2 && t.n_u >= 2) {
        const size_t mid = t.n_u / 2;
        std::thread th(work, 0, mid);
        work(mid, t.n_u);
        th.join();
    } else {
        work(0, t.n_u);
    }
    return t;
}

bool certify_cell(const FlowTable& t, const SlackChecker& slack, size_t cell, size_t ui,
                  const std::vector<std::vector<double>>& offsets,
                  const std::vector<uint8_t>& mask) {
    double y[4];
    for (const auto& off : offsets) {
        for (int a = 0; a < t.dim; ++a) y[a] = t.at(ui, a)[cell] + off[a];
        if (!slack.covered(y, mask)) return false;
    }
    return true;
}

} // namespace

SynthesisResult synthesize_generic(const BatchMap& map, const Grid& grid,
                                   const std::vector<double>& u_grid,
                                   const std::vector<std::vector<double>>& w_offsets) {
    grid.validate();
    if (u_grid.empty()) throw ConfigError("synthesize: u_grid must be nonempty");
    if (grid.dim() > 3) throw DimensionError("synthesize: dimensions above 3 unsupported");
    for (const auto& off : w_offsets)
        if (static_cast<int>(off.size()) != grid.dim())
            throw DimensionError("synthesize: disturbance offset dimension mismatch");

    std::vector<std::vector<double>> offsets;
    offsets.push_back(std::vector<double>(grid.dim(), 0.0));
    for (const auto& off : w_offsets) offsets.push_back(off);

    const FlowTable table = build_flow_table(map, grid, u_grid);
    const SlackChecker slack(grid);
    const size_t cells = grid.cell_count();

    std::vector<uint8_t> mask(cells, 1);
    std::vector<uint8_t> next(cells, 0);
    std::vector<int32_t> cached_u(cells, -1);

    SynthesisTrace trace;
    trace.member_counts.push_back(cells);

    const unsigned hw = std::max(1u, std::min(2u, std::thread::hardware_concurrency()));

    while (true) {
        std::fill(next.begin(), next.end(), 0);
        std::atomic<size_t> kept{0};

        auto sweep = [&](size_t begin, size_t end) {
            size_t local_kept = 0;
            for (size_t cell = begin; cell < end; ++cell) {
                if (!mask[cell]) continue;
                int32_t found = -1;
                const int32_t cu = cached_u[cell];
                if (cu >= 0 &&
                    certify_cell(table, slack, cell, static_cast<size_t>(cu), offsets, mask))
                    found = cu;
                if (found < 0) {
                    for (size_t ui = 0; ui < u_grid.size(); ++ui) {
                        if (certify_cell(table, slack, cell, ui, offsets, mask)) {
                            found = static_cast<int32_t>(ui);
                            break;
                        }
                    }
                }
                if (found >= 0) {
                    next[cell] = 1;
                    cached_u[cell] = found;
                    ++local_kept;
                }
            }
            kept += local_kept;
        };

        if (hw >= 2 && cells >= 1024) {
            const size_t mid = cells / 2;
            std::thread th(sweep, 0, mid);
            sweep(mid, cells);
            th.join();
        } else {
            sweep(0, cells);
        }

        const size_t prev = trace.member_counts.back();
        const size_t now = kept.load();
        if (now > prev) throw SynthesisError("synthesize: mask grew, monotonicity broken");
        trace.member_counts.push_back(now);
        ++trace.iterations;
        mask.swap(next);

        if (now == 0) {
            std::string msg = "synthesize: empty fixed point; member counts per sweep:";
            for (size_t m : trace.member_counts) msg += " " + std::to_string(m);
            throw SynthesisError(msg);
        }
        if (now == prev) break;
        if (trace.iterations > cells)
            throw SynthesisError("synthesize: iteration bound exceeded");
    }

    SynthesisResult res;
    res.set.grid = grid;
    res.set.member = mask;
    res.set.member_count = trace.member_counts.back();
    res.trace = trace;

    // Backup pass: first certifying input per surviving cell with respect to
    // the fixed point, scanned in u_grid order.
    res.backup.input.assign(cells, std::numeric_limits<double>::quiet_NaN());
    for (size_t cell = 0; cell < cells; ++cell) {
        if (!mask[cell]) continue;
        bool stored = false;
        for (size_t ui = 0; ui < u_grid.size(); ++ui) {
            if (certify_cell(table, slack, cell, ui, offsets, mask)) {
                res.backup.input[cell] = u_grid[ui];
                stored = true;
                break;
            }
        }
        if (!stored)
            throw SynthesisError("synthesize: fixed-point cell lost certification in backup pass");
    }
    return res;
}

SynthesisResult synthesize(const dynamics::ModelParams& p, const geometry::BoxSet& X,
                           const std::vector<double>& u_grid,
                           const std::vector<dynamics::Disturbance>& w_vertices,
                           const Grid& grid) {
    p.validate();
    X.validate();
    if (X.dim() != 2 || grid.dim() != 2) throw DimensionError("synthesize: reactor state is 2-D");
    for (int a = 0; a < 2; ++a)
        if (grid.box.lower[a] != X.lower[a] || grid.box.upper[a] != X.upper[a])
            throw ConfigError("synthesize: grid box must equal the constraint box X");
    return synthesize_generic(make_cstr_map(p), grid, u_grid, disturbance_offsets(p, w_vertices));
}

VerificationReport verify_invariance(const geometry::HPolytope& P, const BatchMap& map,
                                     const std::vector<double>& u_grid,
                                     const std::vector<std::vector<double>>& w_offsets,
                                     size_t n_samples, const Grid& grid, uint64_t seed) {
    if (P.n != 2) throw DimensionError("verify_invariance: requires a 2-D polytope");
    if (u_grid.empty()) throw ConfigError("verify_invariance: empty input grid");

    std::vector<std::vector<double>> offsets;
    offsets.push_back({0.0, 0.0});
    for (const auto& off : w_offsets) offsets.push_back(off);

    const geometry::BoxSet bb = geometry::bounding_box_2d(P);
    Rng rng(seed);

    // boundary band: one cell width, in the margin units of unit-norm rows
    double band = 0.0;
    for (int a = 0; a < grid.dim(); ++a) band = std::max(band, grid.width(a));

    std::vector<double> xs(n_samples), ys(n_samples);
    for (size_t i = 0; i < n_samples; ++i) {
        const bool boundary_biased = (i % 2 == 1);
        std::vector<double> x = geometry::sample_uniform(P, bb, rng);
        if (boundary_biased) {
            for (int attempt = 0; attempt < 10000; ++attempt) {
                if (geometry::margin(P, x) >= -band) break;
                x = geometry::sample_uniform(P, bb, rng);
            }
        }
        xs[i] = x[0];
        ys[i] = x[1];
    }

    // satisfy samples input by input, keeping only the still-open ones
    std::vector<size_t> open(n_samples);
    for (size_t i = 0; i < n_samples; ++i) open[i] = i;
    std::vector<double> in0, in1, out0, out1, m, worst, t0, t1;

    for (double u : u_grid) {
        if (open.empty()) break;
        const size_t n = open.size();
        in0.resize(n);
        in1.resize(n);
        out0.resize(n);
        out1.resize(n);
        m.resize(n);
        t0.resize(n);
        t1.resize(n);
        worst.assign(n, -std::numeric_limits<double>::infinity());
        for (size_t k = 0; k < n; ++k) {
            in0[k] = xs[open[k]];
            in1[k] = ys[open[k]];
        }
        const double* in[2] = {in0.data(), in1.data()};
        double* out[2] = {out0.data(), out1.data()};
        map(in, u, out, n);
        for (const auto& off : offsets) {
            for (size_t k = 0; k < n; ++k) {
                t0[k] = out0[k] + off[0];
                t1[k] = out1[k] + off[1];
            }
            kernels::batch_margin2(P.A.data(), P.b.data(), static_cast<size_t>(P.c), t0.data(),
                                   t1.data(), m.data(), n);
            for (size_t k = 0; k < n; ++k)
                if (m[k] > worst[k]) worst[k] = m[k];
        }
        std::vector<size_t> still_open;
        still_open.reserve(n);
        for (size_t k = 0; k < n; ++k)
            if (!(worst[k] <= 0.0)) still_open.push_back(open[k]);
        open.swap(still_open);
    }

    VerificationReport report;
    report.samples_checked = n_samples;
    for (size_t i : open) report.counterexamples.push_back({xs[i], ys[i]});
    return report;
}

VerificationReport verify_invariance(const geometry::HPolytope& P,
                                     const dynamics::ModelParams& p,
                                     const std::vector<double>& u_grid,
                                     const std::vector<dynamics::Disturbance>& w_vertices,
                                     size_t n_samples, const Grid& grid, uint64_t seed) {
    return verify_invariance(P, make_cstr_map(p), u_grid, disturbance_offsets(p, w_vertices),
                             n_samples, grid, seed);
}

namespace {

// monotone-chain convex hull, counterclockwise, no repeated first point
std::vector<std::array<double, 2>> convex_hull(std::vector<std::array<double, 2>> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const size_t n = pts.size();
    if (n < 3) return pts;
    auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& a,
                    const std::array<double, 2>& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<std::array<double, 2>> h(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    const size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

} // namespace

geometry::HPolytope extract_polytope(const GriddedSet& S, const BatchMap& map,
                                     const std::vector<double>& u_grid,
                                     const std::vector<std::vector<double>>& w_offsets,
                                     size_t verify_samples, uint64_t seed) {
    if (S.grid.dim() != 2) throw DimensionError("extract_polytope: requires a 2-D grid");
    if (S.member_count == 0) throw SynthesisError("extract_polytope: empty set");

    std::vector<std::array<double, 2>> pts;
    pts.reserve(S.member_count);
    double c[2];
    for (size_t cell = 0; cell < S.member.size(); ++cell) {
        if (!S.member[cell]) continue;
        S.grid.center_into(cell, c);
        pts.push_back({c[0], c[1]});
    }
    auto hull = convex_hull(std::move(pts));
    if (hull.size() < 3)
        throw SynthesisError("extract_polytope: member centers are degenerate (collinear)");

    // H-representation with unit-norm rows; hull is CCW so the outward
    // normal of edge v1->v2 is (dy, -dx).
    geometry::HPolytope P;
    P.n = 2;
    for (size_t i = 0; i < hull.size(); ++i) {
        const auto& v1 = hull[i];
        const auto& v2 = hull[(i + 1) % hull.size()];
        double nx = v2[1] - v1[1];
        double ny = -(v2[0] - v1[0]);
        const double nrm = std::sqrt(nx * nx + ny * ny);
        if (nrm == 0.0) continue;
        nx /= nrm;
        ny /= nrm;
        P.A.push_back(nx);
        P.A.push_back(ny);
        P.b.push_back(nx * v1[0] + ny * v1[1]);
    }
    P.c = static_cast<int>(P.b.size());
    P.validate();

    // area centroid of the hull polygon
    double cx = 0.0, cy = 0.0, area2 = 0.0;
    for (size_t i = 0; i < hull.size(); ++i) {
        const auto& a = hull[i];
        const auto& b = hull[(i + 1) % hull.size()];
        const double w = a[0] * b[1] - b[0] * a[1];
        area2 += w;
        cx += (a[0] + b[0]) * w;
        cy += (a[1] + b[1]) * w;
    }
    if (std::fabs(area2) < 1e-300) throw SynthesisError("extract_polytope: hull has no area");
    cx /= 3.0 * area2;
    cy /= 3.0 * area2;
    const std::array<double, 2> centroid{cx, cy};

    for (int step = 0; step <= 50; ++step) {
        const double alpha = 1.0 - 0.01 * step;
        geometry::HPolytope Q = geometry::scaled_about(P, centroid, alpha);
        VerificationReport rep = verify_invariance(Q, map, u_grid, w_offsets, verify_samples,
                                                   S.grid, seed + static_cast<uint64_t>(step));
        if (rep.passed()) return Q;
    }
    throw SynthesisError(
        "extract_polytope: no invariant polytope above 50% shrink; set likely non-convex, "
        "use gridded membership mode");
}

geometry::HPolytope extract_polytope(const GriddedSet& S, const dynamics::ModelParams& p,
                                     const std::vector<double>& u_grid,
                                     const std::vector<dynamics::Disturbance>& w_vertices,
                                     size_t verify_samples, uint64_t seed) {
    return extract_polytope(S, make_cstr_map(p), u_grid, disturbance_offsets(p, w_vertices),
                            verify_samples, seed);
}

double backup_lookup(const BackupTable& table, const GriddedSet& S, std::span<const double> x) {
    if (table.input.empty() || S.member_count == 0)
        throw Error("backup_lookup: empty backup table");
    size_t cell = 0;
    if (!S.grid.locate(x, cell))
        throw Error("backup_lookup: state outside the gridded set's box");
    if (S.is_member(cell) && table.has(cell)) return table.input[cell];

    // nearest member center, normalized by box widths, ties to lowest index
    const int d = S.grid.dim();
    double best = std::numeric_limits<double>::infinity();
    size_t best_cell = SIZE_MAX;
    double c[4];
    for (size_t i = 0; i < S.member.size(); ++i) {
        if (!S.member[i]) continue;
        S.grid.center_into(i, c);
        double dist = 0.0;
        for (int a = 0; a < d; ++a) {
            const double dv = (x[a] - c[a]) / S.grid.box.width(a);
            dist += dv * dv;
        }
        if (dist < best) {
            best = dist;
            best_cell = i;
        }
    }
    if (best_cell == SIZE_MAX || !table.has(best_cell))
        throw Error("backup_lookup: no certified member cell found");
    return table.input[best_cell];
}

void refine_backup_against_polytope(BackupTable& table, const GriddedSet& S,
                                    const geometry::HPolytope& P, const BatchMap& map,
                                    const std::vector<double>& u_grid,
                                    const std::vector<std::vector<double>>& w_offsets) {
    if (S.grid.dim() != 2) throw DimensionError("refine_backup: requires 2-D grid");
    std::vector<std::vector<double>> offsets;
    offsets.push_back({0.0, 0.0});
    for (const auto& off : w_offsets) offsets.push_back(off);

    // worst polytope margin of the mapped cell over its center and corners;
    // certifying the whole cell keeps lookups valid at any state inside it
    const double hw0 = 0.5 * S.grid.width(0);
    const double hw1 = 0.5 * S.grid.width(1);
    auto cell_margin = [&](double cx, double cy, double u) {
        const double px[5] = {cx, cx - hw0, cx - hw0, cx + hw0, cx + hw0};
        const double py[5] = {cy, cy - hw1, cy + hw1, cy - hw1, cy + hw1};
        double out0[5], out1[5];
        const double* in[2] = {px, py};
        double* out[2] = {out0, out1};
        map(in, u, out, 5);
        double worst = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < 5; ++i) {
            for (const auto& off : offsets) {
                const double y[2] = {out0[i] + off[0], out1[i] + off[1]};
                worst = std::max(worst, geometry::margin(P, y));
            }
        }
        return worst;
    };

    double c[2];
    for (size_t cell = 0; cell < S.member.size(); ++cell) {
        if (!S.member[cell] || !table.has(cell)) continue;
        S.grid.center_into(cell, c);
        if (cell_margin(c[0], c[1], table.input[cell]) <= 0.0) continue;
        // most defensible input for this cell; first index wins ties
        double best_margin = std::numeric_limits<double>::infinity();
        double best_u = table.input[cell];
        for (double u : u_grid) {
            const double m = cell_margin(c[0], c[1], u);
            if (m < best_margin) {
                best_margin = m;
                best_u = u;
            }
        }
        table.input[cell] = best_u;
        // cells that stay positive sit at the shrunk hull's rim; the
        // supervisor re-checks at use and can scan alternatives
    }
}

std::string serialize_gridded(const GriddedSet& S, const BackupTable& table) {
    std::string out = std::to_string(S.grid.dim());
    for (int r : S.grid.resolution) out += " " + std::to_string(r);
    for (double v : S.grid.box.lower) out += " " + format_full(v);
    for (double v : S.grid.box.upper) out += " " + format_full(v);
    out += "\n";
    for (size_t cell = 0; cell < S.member.size(); ++cell) {
        if (!S.member[cell]) continue;
        out += std::to_string(cell);
        out += ' ';
        out += format_full(table.input[cell]);
        out += '\n';
    }
    return out;
}

void parse_gridded(const std::string& text, const std::string& origin, GriddedSet& S,
                   BackupTable& table) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header)) throw IoError(origin + ": empty gridded-set file");
    std::istringstream h(header);
    int n = 0;
    if (!(h >> n) || n < 1 || n > 3) throw IoError(origin + ": bad gridded-set dimension");
    Grid g;
    g.resolution.resize(n);
    for (int a = 0; a < n; ++a)
        if (!(h >> g.resolution[a])) throw IoError(origin + ": truncated resolution");
    g.box.lower.resize(n);
    g.box.upper.resize(n);
    for (int a = 0; a < n; ++a)
        if (!(h >> g.box.lower[a])) throw IoError(origin + ": truncated lower bounds");
    for (int a = 0; a < n; ++a)
        if (!(h >> g.box.upper[a])) throw IoError(origin + ": truncated upper bounds");
    g.validate();

    S.grid = g;
    S.member.assign(g.cell_count(), 0);
    S.member_count = 0;
    table.input.assign(g.cell_count(), std::numeric_limits<double>::quiet_NaN());

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        size_t cell = 0;
        double u = 0.0;
        if (!(ls >> cell >> u)) throw IoError(origin + ": bad member-cell line: " + line);
        if (cell >= S.member.size()) throw IoError(origin + ": cell index out of range");
        if (!S.member[cell]) {
            S.member[cell] = 1;
            ++S.member_count;
        }
        table.input[cell] = u;
    }
    if (S.member_count == 0) throw IoError(origin + ": gridded set has no member cells");
}

void save_gridded(const std::string& path, const GriddedSet& S, const BackupTable& table) {
    write_text_file(path, serialize_gridded(S, table));
}

void load_gridded(const std::string& path, GriddedSet& S, BackupTable& table) {
    parse_gridded(read_text_file(path), path, S, table);
}

} // namespace cisrl::cis
