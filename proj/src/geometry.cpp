#include "cisrl/geometry.hpp"

#include "cisrl/common.hpp"
#include "cisrl/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cisrl::geometry {

BoxSet::BoxSet(std::vector<double> lo, std::vector<double> hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
    validate();
}

void BoxSet::validate() const {
    if (lower.size() != upper.size() || lower.empty())
        throw DimensionError("BoxSet: lower/upper dimension mismatch");
    for (size_t i = 0; i < lower.size(); ++i) {
        if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i])
            throw DimensionError("BoxSet: requires lower <= upper componentwise");
    }
}

bool BoxSet::contains(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim()) throw DimensionError("BoxSet::contains: bad dim");
    for (int i = 0; i < dim(); ++i)
        if (x[i] < lower[i] || x[i] > upper[i]) return false;
    return true;
}

static double row_norm(const HPolytope& P, int i) {
    double s = 0.0;
    for (int j = 0; j < P.n; ++j) s += P.A[size_t(i) * P.n + j] * P.A[size_t(i) * P.n + j];
    return std::sqrt(s);
}

// A 2-D polyhedron is bounded iff its recession cone {d : Ad <= 0} is {0}.
// Any nontrivial cone contains a ray perpendicular to some row, so testing
// the rotated row directions is exhaustive.
static bool bounded_2d(const HPolytope& P) {
    for (int i = 0; i < P.c; ++i) {
        const double ax = P.A[size_t(i) * 2], ay = P.A[size_t(i) * 2 + 1];
        const double nrm = std::sqrt(ax * ax + ay * ay);
        for (int sgn : {+1, -1}) {
            const double dx = sgn * (-ay / nrm), dy = sgn * (ax / nrm);
            bool escapes = true; // direction d survives all rows -> unbounded
            for (int r = 0; r < P.c; ++r) {
                const double dot = P.A[size_t(r) * 2] * dx + P.A[size_t(r) * 2 + 1] * dy;
                if (dot > 1e-12 * row_norm(P, r)) {
                    escapes = false;
                    break;
                }
            }
            if (escapes) return false;
        }
    }
    return true;
}

static bool bounded_1d(const HPolytope& P) {
    bool pos = false, neg = false;
    for (int i = 0; i < P.c; ++i) {
        if (P.A[i] > 0) pos = true;
        if (P.A[i] < 0) neg = true;
    }
    return pos && neg;
}

void HPolytope::validate() const {
    if (n < 1 || c < n + 1) throw DimensionError("HPolytope: requires c >= n+1");
    if (A.size() != size_t(c) * n || b.size() != size_t(c))
        throw DimensionError("HPolytope: A/b shape mismatch");
    for (int i = 0; i < c; ++i) {
        if (row_norm(*this, i) == 0.0) throw DimensionError("HPolytope: zero row");
        for (int j = 0; j < n; ++j)
            if (!std::isfinite(A[size_t(i) * n + j]))
                throw DimensionError("HPolytope: non-finite entry");
        if (!std::isfinite(b[i])) throw DimensionError("HPolytope: non-finite bound");
    }
    if (n == 1 && !bounded_1d(*this)) throw DimensionError("HPolytope: unbounded (1-D)");
    if (n == 2 && !bounded_2d(*this)) throw DimensionError("HPolytope: unbounded (2-D)");
}

double margin(const HPolytope& P, std::span<const double> x) {
    if (static_cast<int>(x.size()) != P.n) throw DimensionError("margin: dimension mismatch");
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < P.c; ++i) {
        double v = 0.0;
        for (int j = 0; j < P.n; ++j) v += P.A[size_t(i) * P.n + j] * x[j];
        v -= P.b[i];
        if (v > m) m = v;
    }
    return m;
}

bool contains(const HPolytope& P, std::span<const double> x) { return margin(P, x) <= 0.0; }

std::vector<double> sample_uniform(const HPolytope& P, const BoxSet& bb, Rng& rng) {
    if (bb.dim() != P.n) throw DimensionError("sample_uniform: box/polytope dim mismatch");
    std::vector<double> x(P.n);
    constexpr long max_attempts = 1000000;
    for (long attempt = 0; attempt < max_attempts; ++attempt) {
        for (int i = 0; i < P.n; ++i) x[i] = rng.uniform(bb.lower[i], bb.upper[i]);
        if (contains(P, x)) return x;
    }
    throw DegenerateSetError("sample_uniform: acceptance rate below 1e-6, set degenerate");
}

HPolytope box_to_polytope(const BoxSet& bb) {
    bb.validate();
    const int n = bb.dim();
    HPolytope P;
    P.n = n;
    P.c = 2 * n;
    P.A.assign(size_t(P.c) * n, 0.0);
    P.b.assign(P.c, 0.0);
    for (int i = 0; i < n; ++i) {
        P.A[size_t(2 * i) * n + i] = 1.0;
        P.b[2 * i] = bb.upper[i];
        P.A[size_t(2 * i + 1) * n + i] = -1.0;
        P.b[2 * i + 1] = -bb.lower[i];
    }
    P.validate();
    return P;
}

std::vector<std::vector<double>> vertices_2d(const HPolytope& P) {
    if (P.n != 2) throw DimensionError("vertices_2d: requires n = 2");
    std::vector<std::vector<double>> verts;
    for (int i = 0; i < P.c; ++i) {
        for (int j = i + 1; j < P.c; ++j) {
            const double a = P.A[size_t(i) * 2], b1 = P.A[size_t(i) * 2 + 1];
            const double c2 = P.A[size_t(j) * 2], d = P.A[size_t(j) * 2 + 1];
            const double det = a * d - b1 * c2;
            const double scale = row_norm(P, i) * row_norm(P, j);
            if (std::fabs(det) <= 1e-12 * scale) continue;
            const double x = (P.b[i] * d - b1 * P.b[j]) / det;
            const double y = (a * P.b[j] - P.b[i] * c2) / det;
            // keep only feasible intersections
            bool ok = true;
            for (int r = 0; r < P.c; ++r) {
                const double v = P.A[size_t(r) * 2] * x + P.A[size_t(r) * 2 + 1] * y - P.b[r];
                if (v > 1e-9 * std::max(1.0, row_norm(P, r))) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            bool dup = false;
            for (const auto& w : verts) {
                if (std::fabs(w[0] - x) < 1e-9 && std::fabs(w[1] - y) < 1e-9) {
                    dup = true;
                    break;
                }
            }
            if (!dup) verts.push_back({x, y});
        }
    }
    return verts;
}

BoxSet bounding_box_2d(const HPolytope& P) {
    auto verts = vertices_2d(P);
    if (verts.empty()) throw DegenerateSetError("bounding_box_2d: no vertices");
    std::vector<double> lo = verts[0], hi = verts[0];
    for (const auto& v : verts) {
        for (int i = 0; i < 2; ++i) {
            lo[i] = std::min(lo[i], v[i]);
            hi[i] = std::max(hi[i], v[i]);
        }
    }
    return BoxSet(lo, hi);
}

HPolytope scaled_about(const HPolytope& P, std::span<const double> center, double factor) {
    if (static_cast<int>(center.size()) != P.n)
        throw DimensionError("scaled_about: center dimension mismatch");
    HPolytope Q = P;
    for (int i = 0; i < P.c; ++i) {
        double ac = 0.0;
        for (int j = 0; j < P.n; ++j) ac += P.A[size_t(i) * P.n + j] * center[j];
        Q.b[i] = factor * P.b[i] + (1.0 - factor) * ac;
    }
    return Q;
}

HPolytope parse_polytope(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    HPolytope P;
    if (!(in >> P.n >> P.c)) throw IoError(origin + ": expected header 'n c'");
    if (P.n < 1 || P.c < 1) throw IoError(origin + ": bad polytope header");
    P.A.assign(size_t(P.c) * P.n, 0.0);
    P.b.assign(P.c, 0.0);
    for (int i = 0; i < P.c; ++i) {
        for (int j = 0; j < P.n; ++j)
            if (!(in >> P.A[size_t(i) * P.n + j]))
                throw IoError(origin + ": truncated polytope row " + std::to_string(i));
        if (!(in >> P.b[i])) throw IoError(origin + ": truncated polytope row " + std::to_string(i));
    }
    P.validate();
    return P;
}

HPolytope load_polytope(const std::string& path) {
    return parse_polytope(read_text_file(path), path);
}

std::string serialize_polytope(const HPolytope& P) {
    std::string out = std::to_string(P.n) + " " + std::to_string(P.c) + "\n";
    for (int i = 0; i < P.c; ++i) {
        for (int j = 0; j < P.n; ++j) {
            out += format_full(P.A[size_t(i) * P.n + j]);
            out += ' ';
        }
        out += format_full(P.b[i]);
        out += '\n';
    }
    return out;
}

} // namespace cisrl::geometry
