#include "hdgflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace hdgflow {

std::string to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::Interior: return "interior";
        case BoundaryTag::Dirichlet: return "dirichlet";
        case BoundaryTag::Inflow: return "inflow";
        case BoundaryTag::Outflow: return "outflow";
        case BoundaryTag::Wall: return "wall";
        case BoundaryTag::PeriodicMaster: return "periodic_master";
        case BoundaryTag::PeriodicSlave: return "periodic_slave";
    }
    return "interior";
}

BoundaryTag boundary_tag_from_string(const std::string& name) {
    if (name == "interior") return BoundaryTag::Interior;
    if (name == "dirichlet") return BoundaryTag::Dirichlet;
    if (name == "inflow") return BoundaryTag::Inflow;
    if (name == "outflow") return BoundaryTag::Outflow;
    if (name == "wall") return BoundaryTag::Wall;
    if (name == "periodic_master") return BoundaryTag::PeriodicMaster;
    if (name == "periodic_slave") return BoundaryTag::PeriodicSlave;
    throw ParseError("unknown boundary tag '" + name + "'");
}

std::array<int, 2> Mesh::local_facet_vertices(int local_facet) {
    switch (local_facet) {
        case 0: return {0, 1};
        case 1: return {1, 2};
        default: return {2, 0};
    }
}

bool Mesh::has_tag(BoundaryTag tag) const {
    for (const auto& f : facets)
        if (f.tag == tag) return true;
    return false;
}

AffineMap Mesh::affine_map(int element) const {
    const auto& e = elements[element];
    AffineMap map;
    map.element = element;
    const Eigen::Vector2d p0 = vertices[e[0]];
    map.translation = p0;
    map.jacobian.col(0) = vertices[e[1]] - p0;
    map.jacobian.col(1) = vertices[e[2]] - p0;
    map.det = map.jacobian.determinant();
    map.jacobian_inv = map.jacobian.inverse();
    map.jacobian_inv_t = map.jacobian_inv.transpose();
    return map;
}

double Mesh::element_area(int element) const {
    const auto& e = elements[element];
    const Eigen::Vector2d a = vertices[e[1]] - vertices[e[0]];
    const Eigen::Vector2d b = vertices[e[2]] - vertices[e[0]];
    return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

double Mesh::total_area() const {
    double area = 0.0;
    for (int e = 0; e < num_elements(); ++e) area += element_area(e);
    return area;
}

double Mesh::max_h() const {
    double h = 0.0;
    for (double v : h_local) h = std::max(h, v);
    return h;
}

std::uint64_t Mesh::content_hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    auto mix_double = [&](double d) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof(bits));
        mix(bits);
    };
    for (const auto& v : vertices) {
        mix_double(v.x());
        mix_double(v.y());
    }
    for (const auto& e : elements)
        for (int v : e) mix(static_cast<std::uint64_t>(v));
    for (const auto& f : facets) mix(static_cast<std::uint64_t>(f.tag));
    for (const auto& p : periodic_pairs) {
        mix(static_cast<std::uint64_t>(p[0]));
        mix(static_cast<std::uint64_t>(p[1]));
    }
    return h;
}

void Mesh::finalize(const std::vector<std::pair<std::array<int, 2>, BoundaryTag>>& boundary_spec) {
    const int nelem = num_elements();

    for (int e = 0; e < nelem; ++e) {
        if (element_area(e) <= 0.0)
            throw TopologyError("element " + std::to_string(e) +
                                " is not counterclockwise (non-positive area)");
    }

    // Canonical facet enumeration: sorted by (min vertex, max vertex).
    std::map<std::array<int, 2>, int> facet_of;
    facets.clear();
    for (int e = 0; e < nelem; ++e) {
        for (int f = 0; f < 3; ++f) {
            const auto lv = local_facet_vertices(f);
            int a = elements[e][lv[0]];
            int b = elements[e][lv[1]];
            if (a > b) std::swap(a, b);
            facet_of.try_emplace({a, b}, 0);
        }
    }
    int idx = 0;
    for (auto& [key, value] : facet_of) {
        value = idx++;
        Facet facet;
        facet.vertices = key;
        const Eigen::Vector2d d = vertices[key[1]] - vertices[key[0]];
        facet.length = d.norm();
        facet.tangent = d / facet.length;
        facet.normal = Eigen::Vector2d(facet.tangent.y(), -facet.tangent.x());
        facets.push_back(facet);
    }

    element_facets.assign(nelem, {-1, -1, -1});
    for (int e = 0; e < nelem; ++e) {
        for (int f = 0; f < 3; ++f) {
            const auto lv = local_facet_vertices(f);
            int a = elements[e][lv[0]];
            int b = elements[e][lv[1]];
            const bool flip = a > b;
            if (flip) std::swap(a, b);
            const int fid = facet_of.at({a, b});
            element_facets[e][f] = fid;
            Facet& facet = facets[fid];
            const int side = facet.elems[0] < 0 ? 0 : 1;
            if (side == 1 && facet.elems[1] >= 0)
                throw TopologyError("facet shared by more than two elements");
            facet.elems[side] = e;
            facet.local_index[side] = f;
        }
    }

    // Boundary tags.
    std::map<std::array<int, 2>, BoundaryTag> tag_of;
    for (const auto& [verts, tag] : boundary_spec) {
        std::array<int, 2> key = verts;
        if (key[0] > key[1]) std::swap(key[0], key[1]);
        tag_of[key] = tag;
    }
    for (auto& facet : facets) {
        if (facet.elems[1] >= 0) {
            facet.tag = BoundaryTag::Interior;
            continue;
        }
        auto it = tag_of.find(facet.vertices);
        facet.tag = it == tag_of.end() ? BoundaryTag::Dirichlet : it->second;
    }

    periodic_pairs.clear();

    // h_local = element diameter.
    h_local.assign(nelem, 0.0);
    for (int e = 0; e < nelem; ++e) {
        for (int f = 0; f < 3; ++f)
            h_local[e] = std::max(h_local[e], facets[element_facets[e][f]].length);
    }

    // Orientation data per element side (periodic overrides applied later
    // in link_periodic).
    element_sides.assign(nelem, {});
    for (int e = 0; e < nelem; ++e) {
        for (int f = 0; f < 3; ++f) {
            const auto lv = local_facet_vertices(f);
            const int a = elements[e][lv[0]];
            const int b = elements[e][lv[1]];
            SideInfo side;
            side.facet = element_facets[e][f];
            side.dof_facet = side.facet;
            side.flip = a > b;
            side.sigma = side.flip ? -1 : +1;
            side.dof_tangent = facets[side.facet].tangent;
            side.dof_normal = facets[side.facet].normal;
            element_sides[e][f] = side;
        }
    }
}

namespace {

// Applies a master/slave identification between two exterior facets
// related by translation. Updates tags, partner links and the slave-side
// orientation data so the slave couples to the master's DOFs.
void link_periodic(Mesh& mesh, int master, int slave) {
    Mesh::Facet& fm = mesh.facets[master];
    Mesh::Facet& fs = mesh.facets[slave];
    if (fm.elems[1] >= 0 || fs.elems[1] >= 0)
        throw TopologyError("periodic pairing of an interior facet");
    if (std::abs(fm.length - fs.length) > 1e-12 * fm.length)
        throw TopologyError("periodic facets differ in length");
    fm.tag = BoundaryTag::PeriodicMaster;
    fs.tag = BoundaryTag::PeriodicSlave;
    fm.periodic_partner = slave;
    fs.periodic_partner = master;
    mesh.periodic_pairs.push_back({master, slave});

    // Identify by translation: endpoints must match up to a common shift.
    const Eigen::Vector2d am = mesh.vertices[fm.vertices[0]];
    const Eigen::Vector2d bm = mesh.vertices[fm.vertices[1]];
    const Eigen::Vector2d as = mesh.vertices[fs.vertices[0]];
    const Eigen::Vector2d bs = mesh.vertices[fs.vertices[1]];
    const double straight = ((as - am) - (bs - bm)).norm();
    const double crossed = ((as - bm) - (bs - am)).norm();
    const bool pair_flip = crossed < straight;
    if (std::min(straight, crossed) > 1e-10 * (1.0 + fm.length))
        throw TopologyError("periodic facets are not related by a translation");

    const int e = fs.elems[0];
    const int f = fs.local_index[0];
    Mesh::SideInfo& side = mesh.element_sides[e][f];
    side.dof_facet = master;
    side.flip = side.flip != pair_flip;
    // Element outward normal vs the master facet's normal vector.
    const int tangent_sign = pair_flip ? -1 : +1;
    side.sigma = side.sigma * tangent_sign;
    side.dof_tangent = fm.tangent * 1.0;
    side.dof_normal = fm.normal * 1.0;
}

} // namespace

void Mesh::validate() const {
    for (int e = 0; e < num_elements(); ++e) {
        if (element_area(e) <= 0.0) throw TopologyError("non-positive element area");
        for (int f = 0; f < 3; ++f) {
            const int fid = element_facets[e][f];
            const Facet& facet = facets[fid];
            const bool listed = (facet.elems[0] == e && facet.local_index[0] == f) ||
                                (facet.elems[1] == e && facet.local_index[1] == f);
            if (!listed) throw TopologyError("facet/element incidence is not symmetric");
        }
    }
    for (int f = 0; f < num_facets(); ++f) {
        const Facet& facet = facets[f];
        if (facet.elems[0] < 0) throw TopologyError("facet without adjacent element");
        const bool exterior = facet.elems[1] < 0;
        if (exterior && facet.tag == BoundaryTag::Interior)
            throw TopologyError("exterior facet tagged interior");
        if (!exterior && facet.tag != BoundaryTag::Interior)
            throw TopologyError("interior facet carries a boundary tag");
        if ((facet.tag == BoundaryTag::PeriodicMaster ||
             facet.tag == BoundaryTag::PeriodicSlave) &&
            facet.periodic_partner < 0)
            throw TopologyError("periodic facet without partner");
    }
    for (const auto& pair : periodic_pairs) {
        const double lm = facets[pair[0]].length;
        const double ls = facets[pair[1]].length;
        if (std::abs(lm - ls) > 1e-12 * lm)
            throw TopologyError("periodic facet lengths differ");
    }
}

Mesh generate_rectangle(int nx, int ny, double x0, double x1, double y0, double y1,
                        bool periodic) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("generate_rectangle: n >= 1");
    Mesh mesh;
    const auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            mesh.vertices.emplace_back(x0 + (x1 - x0) * i / nx, y0 + (y1 - y0) * j / ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            // Split along the (i,j)-(i+1,j+1) diagonal; both triangles CCW.
            mesh.elements.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            mesh.elements.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    }

    std::vector<std::pair<std::array<int, 2>, BoundaryTag>> boundary;
    const BoundaryTag tag = BoundaryTag::Dirichlet;
    for (int i = 0; i < nx; ++i) {
        boundary.push_back({{vid(i, 0), vid(i + 1, 0)}, tag});
        boundary.push_back({{vid(i, ny), vid(i + 1, ny)}, tag});
    }
    for (int j = 0; j < ny; ++j) {
        boundary.push_back({{vid(0, j), vid(0, j + 1)}, tag});
        boundary.push_back({{vid(nx, j), vid(nx, j + 1)}, tag});
    }
    mesh.finalize(boundary);

    if (periodic) {
        auto facet_index = [&mesh](int a, int b) {
            if (a > b) std::swap(a, b);
            for (int f = 0; f < mesh.num_facets(); ++f)
                if (mesh.facets[f].vertices == std::array<int, 2>{a, b}) return f;
            throw TopologyError("periodic facet lookup failed");
        };
        for (int j = 0; j < ny; ++j)
            link_periodic(mesh, facet_index(vid(0, j), vid(0, j + 1)),
                          facet_index(vid(nx, j), vid(nx, j + 1)));
        for (int i = 0; i < nx; ++i)
            link_periodic(mesh, facet_index(vid(i, 0), vid(i + 1, 0)),
                          facet_index(vid(i, ny), vid(i + 1, ny)));
    }
    mesh.validate();
    return mesh;
}

Mesh generate_unit_square(int n, bool periodic) {
    return generate_rectangle(n, n, 0.0, 1.0, 0.0, 1.0, periodic);
}

Mesh read_mesh(std::istream& in) {
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
    }
    std::size_t pos = 0;
    auto next = [&]() -> const std::string& {
        if (pos >= tokens.size()) throw ParseError("unexpected end of mesh file");
        return tokens[pos++];
    };
    auto next_int = [&]() {
        const std::string& t = next();
        try {
            std::size_t used = 0;
            const int v = std::stoi(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            throw ParseError("expected integer, got '" + t + "'");
        }
    };
    auto next_double = [&]() {
        const std::string& t = next();
        try {
            std::size_t used = 0;
            const double v = std::stod(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            throw ParseError("expected number, got '" + t + "'");
        }
    };

    Mesh mesh;
    if (next() != "vertices") throw ParseError("expected 'vertices'");
    const int nv = next_int();
    for (int i = 0; i < nv; ++i) {
        const double x = next_double();
        const double y = next_double();
        mesh.vertices.emplace_back(x, y);
    }
    if (next() != "elements") throw ParseError("expected 'elements'");
    const int ne = next_int();
    for (int i = 0; i < ne; ++i) {
        std::array<int, 3> e{next_int(), next_int(), next_int()};
        for (int v : e)
            if (v < 0 || v >= nv) throw ParseError("element vertex index out of range");
        mesh.elements.push_back(e);
    }
    std::vector<std::pair<std::array<int, 2>, BoundaryTag>> boundary;
    std::vector<std::array<int, 2>> periodic_facets;
    while (pos < tokens.size()) {
        const std::string section = next();
        if (section == "boundary") {
            const int nb = next_int();
            for (int i = 0; i < nb; ++i) {
                const int a = next_int();
                const int b = next_int();
                boundary.push_back({{a, b}, boundary_tag_from_string(next())});
            }
        } else if (section == "periodic") {
            const int np = next_int();
            for (int i = 0; i < np; ++i) {
                const int m = next_int();
                const int s = next_int();
                periodic_facets.push_back({m, s});
            }
        } else {
            throw ParseError("unknown section '" + section + "'");
        }
    }

    mesh.finalize(boundary);
    for (const auto& p : periodic_facets) {
        if (p[0] < 0 || p[0] >= mesh.num_facets() || p[1] < 0 || p[1] >= mesh.num_facets())
            throw ParseError("periodic facet index out of range");
        link_periodic(mesh, p[0], p[1]);
    }
    mesh.validate();
    return mesh;
}

Mesh read_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open mesh file '" + path + "'");
    return read_mesh(in);
}

void write_mesh(const Mesh& mesh, std::ostream& out) {
    char buf[80];
    out << "vertices " << mesh.num_vertices() << "\n";
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x(), v.y());
        out << buf;
    }
    out << "elements " << mesh.num_elements() << "\n";
    for (const auto& e : mesh.elements)
        out << e[0] << " " << e[1] << " " << e[2] << "\n";
    std::vector<const Mesh::Facet*> exterior;
    for (const auto& f : mesh.facets)
        if (f.elems[1] < 0) exterior.push_back(&f);
    out << "boundary " << exterior.size() << "\n";
    for (const auto* f : exterior)
        out << f->vertices[0] << " " << f->vertices[1] << " " << to_string(f->tag) << "\n";
    if (!mesh.periodic_pairs.empty()) {
        out << "periodic " << mesh.periodic_pairs.size() << "\n";
        for (const auto& p : mesh.periodic_pairs) out << p[0] << " " << p[1] << "\n";
    }
}

void write_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    write_mesh(mesh, out);
}

} // namespace hdgflow
