#include "hdgflow/common.hpp"
#include "hdgflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

namespace hdgflow {

namespace {

// Bowyer-Watson Delaunay triangulation with Ruppert-style refinement for
// the channel-with-cylinder domain. Brute-force cavity search: desk-scale
// meshes only, robustness over speed.
struct Tri {
    int v[3];
    bool alive = true;
};

struct Triangulator {
    std::vector<Eigen::Vector2d> pts;
    std::vector<Tri> tris;

    static double orient(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                         const Eigen::Vector2d& c) {
        const long double ax = a.x(), ay = a.y();
        return static_cast<double>((static_cast<long double>(b.x()) - ax) *
                                       (static_cast<long double>(c.y()) - ay) -
                                   (static_cast<long double>(b.y()) - ay) *
                                       (static_cast<long double>(c.x()) - ax));
    }

    bool in_circumcircle(const Tri& t, const Eigen::Vector2d& p) const {
        const Eigen::Vector2d& a = pts[t.v[0]];
        const Eigen::Vector2d& b = pts[t.v[1]];
        const Eigen::Vector2d& c = pts[t.v[2]];
        const long double ax = a.x() - p.x(), ay = a.y() - p.y();
        const long double bx = b.x() - p.x(), by = b.y() - p.y();
        const long double cx = c.x() - p.x(), cy = c.y() - p.y();
        const long double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                                (bx * bx + by * by) * (ax * cy - cx * ay) +
                                (cx * cx + cy * cy) * (ax * by - bx * ay);
        return det > 0.0L; // requires CCW triangles
    }

    void insert(const Eigen::Vector2d& p) {
        const int pi = static_cast<int>(pts.size());
        pts.push_back(p);
        std::map<std::pair<int, int>, int> edge_count;
        for (auto& t : tris) {
            if (!t.alive || !in_circumcircle(t, p)) continue;
            t.alive = false;
            for (int e = 0; e < 3; ++e) {
                int a = t.v[e], b = t.v[(e + 1) % 3];
                edge_count[{std::min(a, b), std::max(a, b)}]++;
            }
        }
        // Cavity boundary = edges hit exactly once; re-fan from p.
        std::vector<std::pair<int, int>> cavity;
        for (auto& [e, n] : edge_count)
            if (n == 1) cavity.push_back(e);
        for (auto& [a, b] : cavity) {
            Tri t;
            t.v[0] = a;
            t.v[1] = b;
            t.v[2] = pi;
            if (orient(pts[a], pts[b], pts[pi]) < 0) std::swap(t.v[0], t.v[1]);
            if (orient(pts[t.v[0]], pts[t.v[1]], pts[t.v[2]]) <= 0) continue; // degenerate
            t.alive = true;
            tris.push_back(t);
        }
        // Compact occasionally to keep the scan cheap.
        if (tris.size() > 4 * pts.size()) {
            std::vector<Tri> keep;
            keep.reserve(2 * pts.size());
            for (const auto& t : tris)
                if (t.alive) keep.push_back(t);
            tris.swap(keep);
        }
    }

    static Eigen::Vector2d circumcenter(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                        const Eigen::Vector2d& c) {
        const Eigen::Vector2d ab = b - a, ac = c - a;
        const double d = 2.0 * (ab.x() * ac.y() - ab.y() * ac.x());
        const double l1 = ab.squaredNorm(), l2 = ac.squaredNorm();
        return a + Eigen::Vector2d(ac.y() * l1 - ab.y() * l2, ab.x() * l2 - ac.x() * l1) / d;
    }
};

constexpr double kChanW = 2.2;
constexpr double kChanH = 0.41;
constexpr double kCylR = 0.05;
const Eigen::Vector2d kCylC(0.2, 0.2);

struct Domain {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    bool has_hole = false;
    Eigen::Vector2d hole_center;
    double hole_radius = 0.0;

    bool inside(const Eigen::Vector2d& p) const {
        const double eps = 1e-12 * std::max(x1 - x0, y1 - y0);
        if (p.x() <= x0 + eps || p.x() >= x1 - eps || p.y() <= y0 + eps ||
            p.y() >= y1 - eps)
            return false;
        return !has_hole || (p - hole_center).norm() > hole_radius - eps;
    }
};

Mesh delaunay_refine(const Domain& domain, double h_target);

} // namespace

Mesh generate_channel_cylinder(double h_target) {
    if (!(h_target > 0.0 && h_target < kChanH))
        throw std::invalid_argument("generate_channel_cylinder: 0 < h_target < 0.41 required");
    Domain domain;
    domain.x0 = 0.0;
    domain.x1 = kChanW;
    domain.y0 = 0.0;
    domain.y1 = kChanH;
    domain.has_hole = true;
    domain.hole_center = kCylC;
    domain.hole_radius = kCylR;
    return delaunay_refine(domain, h_target);
}

Mesh generate_unstructured_rectangle(double x0, double x1, double y0, double y1,
                                     double h_target) {
    if (!(h_target > 0.0) || !(x1 > x0) || !(y1 > y0))
        throw std::invalid_argument("generate_unstructured_rectangle: bad arguments");
    Domain domain;
    domain.x0 = x0;
    domain.x1 = x1;
    domain.y0 = y0;
    domain.y1 = y1;
    return delaunay_refine(domain, h_target);
}

namespace {

Mesh delaunay_refine(const Domain& domain, double h_target) {
    Triangulator tr;
    // Super-triangle far outside the domain.
    const double dx = domain.x1 - domain.x0, dy = domain.y1 - domain.y0;
    const double big = 20.0 * std::max(dx, dy);
    tr.pts.emplace_back(domain.x0 - big, domain.y0 - big);
    tr.pts.emplace_back(domain.x1 + big + big, domain.y0 - big);
    tr.pts.emplace_back(0.5 * (domain.x0 + domain.x1), domain.y1 + 2.0 * big);
    tr.tris.push_back({{0, 1, 2}, true});

    std::vector<std::pair<int, int>> segments;
    auto add_polyline = [&](const std::vector<Eigen::Vector2d>& poly, bool closed) {
        std::vector<int> ids;
        for (const auto& p : poly) {
            ids.push_back(static_cast<int>(tr.pts.size()));
            tr.insert(p);
        }
        const std::size_t n = ids.size();
        for (std::size_t i = 0; i + 1 < n; ++i) segments.push_back({ids[i], ids[i + 1]});
        if (closed) segments.push_back({ids[n - 1], ids[0]});
    };

    // Outer rectangle subdivided at spacing <= h_target.
    {
        std::vector<Eigen::Vector2d> poly;
        auto edge = [&](Eigen::Vector2d a, Eigen::Vector2d b) {
            const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / h_target)));
            for (int i = 0; i < n; ++i) poly.push_back(a + (b - a) * (static_cast<double>(i) / n));
        };
        edge({domain.x0, domain.y0}, {domain.x1, domain.y0});
        edge({domain.x1, domain.y0}, {domain.x1, domain.y1});
        edge({domain.x1, domain.y1}, {domain.x0, domain.y1});
        edge({domain.x0, domain.y1}, {domain.x0, domain.y0});
        add_polyline(poly, true);
    }
    // Hole polygon with chord length <= h_target (at least 16 sides).
    if (domain.has_hole) {
        const double r = domain.hole_radius;
        const double max_chord = std::min(h_target, 2.0 * r);
        const int m = std::max<int>(
            16, static_cast<int>(std::ceil(M_PI / std::asin(max_chord / (2.0 * r)))));
        std::vector<Eigen::Vector2d> poly;
        for (int j = 0; j < m; ++j) {
            const double a = 2.0 * M_PI * j / m;
            poly.push_back(domain.hole_center +
                           r * Eigen::Vector2d(std::cos(a), std::sin(a)));
        }
        add_polyline(poly, true);
    }

    const double r_max = 0.62 * h_target; // circumradius bound (size control)
    const double ratio_max = 1.4;         // radius/shortest-edge (quality control)
    const int max_inserts = 200000;

    for (int pass = 0; pass < max_inserts; ++pass) {
        // Current edge set for segment recovery.
        std::set<std::pair<int, int>> edges;
        for (const auto& t : tr.tris) {
            if (!t.alive) continue;
            for (int e = 0; e < 3; ++e) {
                const int a = t.v[e], b = t.v[(e + 1) % 3];
                edges.insert({std::min(a, b), std::max(a, b)});
            }
        }

        // 1) Split missing or encroached segments first.
        int split_seg = -1;
        for (std::size_t s = 0; s < segments.size(); ++s) {
            const auto [a, b] = segments[s];
            if (!edges.count({std::min(a, b), std::max(a, b)})) {
                split_seg = static_cast<int>(s);
                break;
            }
        }
        Eigen::Vector2d new_point;
        if (split_seg < 0) {
            // 2) Worst bad triangle inside the domain.
            double worst = 0.0;
            Eigen::Vector2d cc;
            for (const auto& t : tr.tris) {
                if (!t.alive) continue;
                const Eigen::Vector2d& a = tr.pts[t.v[0]];
                const Eigen::Vector2d& b = tr.pts[t.v[1]];
                const Eigen::Vector2d& c = tr.pts[t.v[2]];
                const Eigen::Vector2d centroid = (a + b + c) / 3.0;
                if (!domain.inside(centroid)) continue;
                const Eigen::Vector2d center = Triangulator::circumcenter(a, b, c);
                const double radius = (center - a).norm();
                const double emin =
                    std::min({(a - b).norm(), (b - c).norm(), (c - a).norm()});
                double badness = 0.0;
                if (radius > r_max) badness = std::max(badness, radius / r_max);
                if (radius / emin > ratio_max)
                    badness = std::max(badness, radius / emin / ratio_max);
                if (badness > worst) {
                    worst = badness;
                    cc = center;
                }
            }
            if (worst == 0.0) break; // mesh is good
            new_point = cc;
            // Encroachment: insert the segment midpoint instead when the
            // circumcenter falls into a segment's diametral circle.
            for (std::size_t s = 0; s < segments.size(); ++s) {
                const Eigen::Vector2d pa = tr.pts[segments[s].first];
                const Eigen::Vector2d pb = tr.pts[segments[s].second];
                const Eigen::Vector2d mid = 0.5 * (pa + pb);
                if ((new_point - mid).norm() < 0.5 * (pb - pa).norm() * (1.0 - 1e-10)) {
                    split_seg = static_cast<int>(s);
                    break;
                }
            }
        }

        if (split_seg >= 0) {
            const auto [a, b] = segments[split_seg];
            const Eigen::Vector2d mid = 0.5 * (tr.pts[a] + tr.pts[b]);
            const int mi = static_cast<int>(tr.pts.size());
            tr.insert(mid);
            segments[split_seg] = {a, mi};
            segments.push_back({mi, b});
        } else {
            tr.insert(new_point);
        }
        if (pass == max_inserts - 1)
            throw MeshGenerationFailure("Delaunay refinement did not terminate for h_target=" +
                                        std::to_string(h_target));
    }

    // A few Laplacian smoothing passes: moving each free vertex to the
    // average of its neighbors pushes the triangles toward equilateral,
    // which improves the inverse-inequality constants high orders feel.
    {
        std::vector<bool> fixed(tr.pts.size(), false);
        for (int i = 0; i < 3; ++i) fixed[i] = true;
        for (const auto& seg : segments) {
            fixed[seg.first] = true;
            fixed[seg.second] = true;
        }
        for (int pass = 0; pass < 8; ++pass) {
            std::vector<Eigen::Vector2d> sum(tr.pts.size(), Eigen::Vector2d::Zero());
            std::vector<int> count(tr.pts.size(), 0);
            for (const auto& t : tr.tris) {
                if (!t.alive) continue;
                const Eigen::Vector2d c =
                    (tr.pts[t.v[0]] + tr.pts[t.v[1]] + tr.pts[t.v[2]]) / 3.0;
                if (!domain.inside(c)) continue;
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) {
                        if (a == b) continue;
                        sum[t.v[a]] += tr.pts[t.v[b]];
                        count[t.v[a]] += 1;
                    }
            }
            bool moved = false;
            for (std::size_t i = 0; i < tr.pts.size(); ++i) {
                if (fixed[i] || count[i] == 0) continue;
                const Eigen::Vector2d target = sum[i] / count[i];
                if (domain.inside(target)) {
                    tr.pts[i] = target;
                    moved = true;
                }
            }
            if (!moved) break;
            // Re-run Delaunay from scratch on the smoothed points: cheap at
            // desk scale and keeps the triangulation valid.
            Triangulator fresh;
            fresh.pts.assign(tr.pts.begin(), tr.pts.begin() + 3);
            fresh.tris.push_back({{0, 1, 2}, true});
            for (std::size_t i = 3; i < tr.pts.size(); ++i) fresh.insert(tr.pts[i]);
            tr.tris = std::move(fresh.tris);
            tr.pts = std::move(fresh.pts);
        }
    }

    // Extract the domain triangulation (drop super-triangle fans and the
    // cylinder hole), renumber vertices.
    std::vector<int> newid(tr.pts.size(), -1);
    Mesh mesh;
    for (const auto& t : tr.tris) {
        if (!t.alive) continue;
        if (t.v[0] < 3 || t.v[1] < 3 || t.v[2] < 3) continue;
        const Eigen::Vector2d centroid =
            (tr.pts[t.v[0]] + tr.pts[t.v[1]] + tr.pts[t.v[2]]) / 3.0;
        if (!domain.inside(centroid)) continue;
        std::array<int, 3> verts{};
        for (int i = 0; i < 3; ++i) {
            if (newid[t.v[i]] < 0) {
                newid[t.v[i]] = mesh.num_vertices();
                mesh.vertices.push_back(tr.pts[t.v[i]]);
            }
            verts[i] = newid[t.v[i]];
        }
        if (Triangulator::orient(mesh.vertices[verts[0]], mesh.vertices[verts[1]],
                                 mesh.vertices[verts[2]]) < 0)
            std::swap(verts[1], verts[2]);
        mesh.elements.push_back(verts);
    }
    if (mesh.elements.empty())
        throw MeshGenerationFailure("refinement produced no interior triangles");

    // Tag boundary facets: inflow at the left edge, outflow at the right
    // edge, walls elsewhere (outer walls and the hole polygon). Rectangle
    // meshes without a hole are consumers' to re-tag; they default to
    // dirichlet via the inflow/outflow tags only when a hole is present.
    std::map<std::pair<int, int>, int> count;
    for (const auto& e : mesh.elements)
        for (int f = 0; f < 3; ++f) {
            const int a = e[f], b = e[(f + 1) % 3];
            count[{std::min(a, b), std::max(a, b)}]++;
        }
    std::vector<std::pair<std::array<int, 2>, BoundaryTag>> boundary;
    for (const auto& [edge, n] : count) {
        if (n != 1) continue;
        const Eigen::Vector2d& a = mesh.vertices[edge.first];
        const Eigen::Vector2d& b = mesh.vertices[edge.second];
        BoundaryTag tag = BoundaryTag::Dirichlet;
        if (domain.has_hole) {
            tag = BoundaryTag::Wall;
            if (std::abs(a.x() - domain.x0) < 1e-9 && std::abs(b.x() - domain.x0) < 1e-9)
                tag = BoundaryTag::Inflow;
            else if (std::abs(a.x() - domain.x1) < 1e-9 &&
                     std::abs(b.x() - domain.x1) < 1e-9)
                tag = BoundaryTag::Outflow;
        }
        boundary.push_back({{edge.first, edge.second}, tag});
    }
    mesh.finalize(boundary);
    mesh.validate();
    return mesh;
}

} // namespace

} // namespace hdgflow
