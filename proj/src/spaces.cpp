#include "hdgflow/spaces.hpp"

#include "hdgflow/common.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>

namespace hdgflow {

std::string to_string(SpaceKind kind) {
    switch (kind) {
        case SpaceKind::WRelaxed: return "W_relaxed";
        case SpaceKind::WConf: return "W_conf";
        case SpaceKind::Facet: return "Facet";
        case SpaceKind::Pressure: return "Pressure";
        case SpaceKind::DG: return "DG";
    }
    return "W_relaxed";
}

SpaceKind space_kind_from_string(const std::string& name) {
    if (name == "W_relaxed") return SpaceKind::WRelaxed;
    if (name == "W_conf") return SpaceKind::WConf;
    if (name == "Facet") return SpaceKind::Facet;
    if (name == "Pressure") return SpaceKind::Pressure;
    if (name == "DG") return SpaceKind::DG;
    throw ParseError("unknown space kind '" + name + "'");
}

namespace {

std::shared_ptr<const BdmElement> shared_bdm(int k) {
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const BdmElement>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(k);
    if (it == cache.end())
        it = cache.emplace(k, std::make_shared<BdmElement>(build_bdm_element(k))).first;
    return it->second;
}

bool is_essential(BoundaryTag tag) {
    return tag == BoundaryTag::Dirichlet || tag == BoundaryTag::Inflow ||
           tag == BoundaryTag::Wall;
}

} // namespace

int DofMap::num_dirichlet() const {
    int n = 0;
    for (bool b : dirichlet) n += b ? 1 : 0;
    return n;
}

DofMap build_dofmap(const Mesh& mesh, SpaceKind kind, int order) {
    DofMap map;
    map.kind = kind;
    map.order = order;
    map.mesh = &mesh;
    const int nf = mesh.num_facets();
    const int ne = mesh.num_elements();

    if (kind == SpaceKind::WRelaxed || kind == SpaceKind::WConf || kind == SpaceKind::DG) {
        if (order < 1) throw UnsupportedOrder("velocity space requires k >= 1");
        map.bdm = shared_bdm(order);
        const int k = order;
        const int nloc = map.bdm->size();

        int next = 0;
        if (kind == SpaceKind::DG) {
            map.element_dofs.resize(ne);
            for (int e = 0; e < ne; ++e) {
                map.element_dofs[e].resize(nloc);
                for (int j = 0; j < nloc; ++j) map.element_dofs[e][j] = {next++, 1.0};
            }
            map.total_dofs = next;
            map.dirichlet.assign(map.total_dofs, false);
            return map;
        }

        map.facet_moment_base.assign(nf, -1);
        map.top_dof.assign(nf, {-1, -1});
        for (int f = 0; f < nf; ++f) {
            const Mesh::Facet& facet = mesh.facets[f];
            if (facet.tag == BoundaryTag::PeriodicSlave) continue;
            map.facet_moment_base[f] = next;
            next += k;
            const bool two_sided =
                facet.elems[1] >= 0 || facet.tag == BoundaryTag::PeriodicMaster;
            if (kind == SpaceKind::WConf || !two_sided) {
                map.top_dof[f] = {next, next};
                next += 1;
            } else {
                map.top_dof[f] = {next, next + 1};
                next += 2;
            }
        }
        // Slave facets alias their master's moment DOFs; the slave-side
        // element owns the second top slot of the pair.
        for (const auto& pair : mesh.periodic_pairs) {
            const int m = pair[0], s = pair[1];
            map.facet_moment_base[s] = map.facet_moment_base[m];
            map.top_dof[s] = {map.top_dof[m][1], -1};
        }

        const int n_int = k >= 2 ? k * (k - 1) : 0;
        const int n_comp = k - 1;
        map.element_base.assign(ne, -1);
        for (int e = 0; e < ne; ++e) {
            map.element_base[e] = next;
            next += n_int + n_comp;
        }
        map.total_dofs = next;
        map.dirichlet.assign(map.total_dofs, false);
        for (int f = 0; f < nf; ++f) {
            if (!is_essential(mesh.facets[f].tag)) continue;
            for (int d = 0; d < k; ++d) map.dirichlet[map.facet_moment_base[f] + d] = true;
            map.dirichlet[map.top_dof[f][0]] = true;
        }

        map.element_dofs.resize(ne);
        const auto& ref = reference_facets();
        for (int e = 0; e < ne; ++e) {
            map.element_dofs[e].resize(nloc);
            for (int j = 0; j < nloc; ++j) {
                const BdmDof& dof = map.bdm->dofs[j];
                DofMap::LocalDof local;
                if (dof.kind == BdmDof::Kind::FacetNormal) {
                    const Mesh::SideInfo& side = mesh.element_sides[e][dof.facet];
                    const double lratio =
                        mesh.facets[side.facet].length / ref[dof.facet].length;
                    double sign = side.sigma;
                    if (side.flip && (dof.degree % 2 == 1)) sign = -sign;
                    if (dof.degree < k) {
                        local.global = map.facet_moment_base[side.dof_facet] + dof.degree;
                    } else {
                        const Mesh::Facet& rec = mesh.facets[side.facet];
                        const int slot =
                            (rec.elems[0] == e && rec.local_index[0] == dof.facet) ? 0 : 1;
                        local.global = map.top_dof[side.facet][slot];
                    }
                    local.scale = sign * lratio;
                } else if (dof.kind == BdmDof::Kind::InteriorMoment) {
                    local.global = map.element_base[e] + dof.degree;
                    local.scale = 1.0;
                } else {
                    local.global = map.element_base[e] + n_int + dof.degree;
                    local.scale = 1.0;
                }
                map.element_dofs[e][j] = local;
            }
        }
        return map;
    }

    if (kind == SpaceKind::Facet) {
        if (order < 0) throw UnsupportedOrder("facet space requires order >= 0");
        const int modes = order + 1;
        map.facet_base.assign(nf, -1);
        int next = 0;
        for (int f = 0; f < nf; ++f) {
            if (mesh.facets[f].tag == BoundaryTag::PeriodicSlave) continue;
            map.facet_base[f] = next;
            next += modes;
        }
        for (const auto& pair : mesh.periodic_pairs)
            map.facet_base[pair[1]] = map.facet_base[pair[0]];
        map.total_dofs = next;
        map.dirichlet.assign(map.total_dofs, false);
        for (int f = 0; f < nf; ++f) {
            if (!is_essential(mesh.facets[f].tag)) continue;
            for (int d = 0; d < modes; ++d) map.dirichlet[map.facet_base[f] + d] = true;
        }
        return map;
    }

    // Pressure: discontinuous per-element blocks, no constraints.
    if (order < 0) throw UnsupportedOrder("pressure space requires order >= 0");
    map.element_block_size = (order + 1) * (order + 2) / 2;
    map.element_base.assign(ne, -1);
    int next = 0;
    for (int e = 0; e < ne; ++e) {
        map.element_base[e] = next;
        next += map.element_block_size;
    }
    map.total_dofs = next;
    map.dirichlet.assign(map.total_dofs, false);
    return map;
}

WShape::WShape(const BdmElement& elem, const Eigen::MatrixXd& points) {
    const int ns = elem.scalar_size();
    const int n = elem.size();
    const BasisTable st = dubiner_basis(elem.order).tabulate(points);
    Eigen::MatrixXd even(ns, n), odd(ns, n);
    for (int s = 0; s < ns; ++s) {
        even.row(s) = elem.dual.row(2 * s);
        odd.row(s) = elem.dual.row(2 * s + 1);
    }
    v1 = even.transpose() * st.value;
    v2 = odd.transpose() * st.value;
    g1x = even.transpose() * st.dx;
    g1y = even.transpose() * st.dy;
    g2x = odd.transpose() * st.dx;
    g2y = odd.transpose() * st.dy;
    div_ref = g1x + g2y;
}

Eigen::MatrixXd facet_ref_points(int local_facet, const Eigen::MatrixXd& params) {
    const RefFacet& rf = reference_facets()[local_facet];
    Eigen::MatrixXd pts(params.rows(), 2);
    for (int q = 0; q < params.rows(); ++q)
        pts.row(q) = (rf.start + params(q, 0) * rf.dir).transpose();
    return pts;
}

namespace {

Eigen::VectorXd gather_local(const DofMap& map, const FeFunction& u, int element) {
    const auto& table = map.element_dofs[element];
    Eigen::VectorXd local(table.size());
    for (std::size_t j = 0; j < table.size(); ++j)
        local(j) = table[j].scale * u.coeffs(table[j].global);
    return local;
}

} // namespace

Eigen::MatrixXd evaluate(const FeFunction& u, int element, const Eigen::MatrixXd& points,
                         EvalWhat what, int local_facet) {
    const DofMap& map = *u.map;
    const Mesh& mesh = *map.mesh;
    const AffineMap geo = mesh.affine_map(element);

    if (map.kind == SpaceKind::Pressure) {
        const BasisTable st = dubiner_basis(map.order)
                                  .tabulate(local_facet >= 0
                                                ? facet_ref_points(local_facet, points)
                                                : points);
        const Eigen::VectorXd c =
            u.coeffs.segment(map.element_base[element], map.element_block_size);
        const int nq = static_cast<int>(st.value.cols());
        if (what == EvalWhat::Value) return (c.transpose() * st.value).eval();
        if (what == EvalWhat::Gradient) {
            Eigen::MatrixXd out(2, nq);
            const Eigen::RowVectorXd dx = c.transpose() * st.dx;
            const Eigen::RowVectorXd dy = c.transpose() * st.dy;
            for (int q = 0; q < nq; ++q)
                out.col(q) = geo.jacobian_inv_t * Eigen::Vector2d(dx(q), dy(q));
            return out;
        }
        throw std::logic_error("unsupported evaluation for pressure space");
    }

    if (map.kind == SpaceKind::Facet) {
        if (local_facet < 0) throw std::logic_error("facet space needs a local facet");
        const Mesh::SideInfo& side = mesh.element_sides[element][local_facet];
        const int modes = map.order + 1;
        Eigen::VectorXd c(modes);
        for (int d = 0; d < modes; ++d)
            c(d) = u.coeffs(map.facet_base[side.dof_facet] + d);
        Eigen::MatrixXd tpts(points.rows(), 1);
        for (int q = 0; q < points.rows(); ++q)
            tpts(q, 0) = side.flip ? 1.0 - points(q, 0) : points(q, 0);
        const BasisTable lt = legendre_facet_basis(map.order).tabulate(tpts);
        const Eigen::RowVectorXd scalar = c.transpose() * lt.value;
        const int nq = static_cast<int>(points.rows());
        if (what == EvalWhat::TangentialTrace) return scalar;
        if (what == EvalWhat::Value) {
            Eigen::MatrixXd out(2, nq);
            for (int q = 0; q < nq; ++q) out.col(q) = scalar(q) * side.dof_tangent;
            return out;
        }
        if (what == EvalWhat::NormalTrace) return Eigen::MatrixXd::Zero(1, nq);
        throw std::logic_error("unsupported evaluation for facet space");
    }

    // W kinds and DG.
    const Eigen::MatrixXd ref_pts =
        local_facet >= 0 ? facet_ref_points(local_facet, points) : points;
    const WShape shape(*map.bdm, ref_pts);
    const Eigen::VectorXd c = gather_local(map, u, element);
    const int nq = static_cast<int>(ref_pts.rows());
    const Eigen::RowVectorXd r1 = c.transpose() * shape.v1;
    const Eigen::RowVectorXd r2 = c.transpose() * shape.v2;

    switch (what) {
        case EvalWhat::Value: {
            Eigen::MatrixXd out(2, nq);
            for (int q = 0; q < nq; ++q)
                out.col(q) = geo.jacobian * Eigen::Vector2d(r1(q), r2(q)) / geo.det;
            return out;
        }
        case EvalWhat::Divergence: {
            return ((c.transpose() * shape.div_ref) / geo.det).eval();
        }
        case EvalWhat::Gradient: {
            const Eigen::RowVectorXd a = c.transpose() * shape.g1x;
            const Eigen::RowVectorXd b = c.transpose() * shape.g1y;
            const Eigen::RowVectorXd cc = c.transpose() * shape.g2x;
            const Eigen::RowVectorXd d = c.transpose() * shape.g2y;
            Eigen::MatrixXd out(4, nq);
            for (int q = 0; q < nq; ++q) {
                Eigen::Matrix2d gref;
                gref << a(q), b(q), cc(q), d(q);
                const Eigen::Matrix2d g =
                    geo.jacobian * gref * geo.jacobian_inv / geo.det;
                out(0, q) = g(0, 0);
                out(1, q) = g(0, 1);
                out(2, q) = g(1, 0);
                out(3, q) = g(1, 1);
            }
            return out;
        }
        case EvalWhat::NormalTrace:
        case EvalWhat::TangentialTrace: {
            if (local_facet < 0) throw std::logic_error("trace evaluation needs a facet");
            const Mesh::SideInfo& side = mesh.element_sides[element][local_facet];
            const Eigen::Vector2d dir = what == EvalWhat::NormalTrace
                                            ? (side.sigma * side.dof_normal).eval()
                                            : side.dof_tangent;
            Eigen::MatrixXd out(1, nq);
            for (int q = 0; q < nq; ++q)
                out(0, q) =
                    (geo.jacobian * Eigen::Vector2d(r1(q), r2(q)) / geo.det).dot(dir);
            return out;
        }
    }
    throw std::logic_error("unreachable");
}

Eigen::VectorXd project_facet(const Eigen::VectorXd& samples, const QuadratureRule& rule,
                              int m) {
    const BasisTable lt = legendre_facet_basis(m).tabulate(rule.points);
    Eigen::VectorXd coeffs(m + 1);
    for (int d = 0; d <= m; ++d) {
        double v = 0.0;
        for (int q = 0; q < rule.size(); ++q)
            v += rule.weights(q) * lt.value(d, q) * samples(q);
        coeffs(d) = v;
    }
    return coeffs;
}

Eigen::VectorXd project_element(const VectorField& f, const Mesh& mesh, int element, int m,
                                int quad_degree) {
    const AffineMap geo = mesh.affine_map(element);
    const QuadratureRule rule = triangle_rule(quad_degree);
    const BasisTable st = dubiner_basis(m).tabulate(rule.points);
    const int ns = (m + 1) * (m + 2) / 2;
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(2 * ns);
    for (int q = 0; q < rule.size(); ++q) {
        const Eigen::Vector2d x = geo.apply(rule.points.row(q).transpose());
        const Eigen::Vector2d v = f(x);
        for (int s = 0; s < ns; ++s) {
            coeffs(2 * s + 0) += rule.weights(q) * st.value(s, q) * v.x();
            coeffs(2 * s + 1) += rule.weights(q) * st.value(s, q) * v.y();
        }
    }
    return coeffs;
}

Eigen::MatrixXd evaluate_projected(const Eigen::VectorXd& coeffs, int m, const Mesh& mesh,
                                   int element, const Eigen::MatrixXd& ref_points) {
    (void)mesh;
    (void)element;
    const BasisTable st = dubiner_basis(m).tabulate(ref_points);
    const int ns = (m + 1) * (m + 2) / 2;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2, ref_points.rows());
    for (int q = 0; q < ref_points.rows(); ++q)
        for (int s = 0; s < ns; ++s) {
            out(0, q) += coeffs(2 * s + 0) * st.value(s, q);
            out(1, q) += coeffs(2 * s + 1) * st.value(s, q);
        }
    return out;
}

FeFunction interpolate_bdm(const VectorField& u, const DofMap& map, int extra_degree) {
    if (!map.is_velocity()) throw MapMismatch("interpolate_bdm needs a velocity map");
    const Mesh& mesh = *map.mesh;
    FeFunction out(map);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const AffineMap geo = mesh.affine_map(e);
        const auto pull = [&](const Eigen::Vector2d& ref) -> Eigen::Vector2d {
            return geo.det * geo.jacobian_inv * u(geo.apply(ref));
        };
        const Eigen::VectorXd local = map.bdm->apply_dofs(
            [&](int f, double t) {
                const RefFacet& rf = reference_facets()[f];
                return pull(rf.start + t * rf.dir);
            },
            [&](double x, double y) { return pull(Eigen::Vector2d(x, y)); }, extra_degree);
        const auto& table = map.element_dofs[e];
        for (std::size_t j = 0; j < table.size(); ++j)
            out.coeffs(table[j].global) = local(j) / table[j].scale;
    }
    return out;
}

FeFunction interpolate_facet(const VectorField& u, const DofMap& fmap, int extra_degree) {
    if (fmap.kind != SpaceKind::Facet) throw MapMismatch("facet map required");
    const Mesh& mesh = *fmap.mesh;
    FeFunction out(fmap);
    const int modes = fmap.order + 1;
    const QuadratureRule rule = gauss_rule(fmap.order + 1 + (extra_degree + 1) / 2);
    const BasisTable lt = legendre_facet_basis(fmap.order).tabulate(rule.points);
    for (int f = 0; f < mesh.num_facets(); ++f) {
        if (fmap.facet_base[f] < 0) continue;
        if (mesh.facets[f].tag == BoundaryTag::PeriodicSlave) continue;
        const Mesh::Facet& facet = mesh.facets[f];
        const Eigen::Vector2d a = mesh.vertices[facet.vertices[0]];
        const Eigen::Vector2d b = mesh.vertices[facet.vertices[1]];
        for (int d = 0; d < modes; ++d) {
            double v = 0.0;
            for (int q = 0; q < rule.size(); ++q) {
                const Eigen::Vector2d x = a + rule.points(q, 0) * (b - a);
                v += rule.weights(q) * lt.value(d, q) * u(x).dot(facet.tangent);
            }
            out.coeffs(fmap.facet_base[f] + d) = v;
        }
    }
    return out;
}

FeFunction project_pressure(const ScalarField& p, const DofMap& pmap, int extra_degree) {
    if (pmap.kind != SpaceKind::Pressure) throw MapMismatch("pressure map required");
    const Mesh& mesh = *pmap.mesh;
    FeFunction out(pmap);
    const QuadratureRule rule = triangle_rule(2 * pmap.order + extra_degree);
    const BasisTable st = dubiner_basis(pmap.order).tabulate(rule.points);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const AffineMap geo = mesh.affine_map(e);
        for (int s = 0; s < pmap.element_block_size; ++s) {
            double v = 0.0;
            for (int q = 0; q < rule.size(); ++q)
                v += rule.weights(q) * st.value(s, q) *
                     p(geo.apply(rule.points.row(q).transpose()));
            out.coeffs(pmap.element_base[e] + s) = v;
        }
    }
    return out;
}

Eigen::VectorXd dirichlet_values_w(const DofMap& wmap, const VectorField& u_bc) {
    const Mesh& mesh = *wmap.mesh;
    const int k = wmap.order;
    Eigen::VectorXd values = Eigen::VectorXd::Zero(wmap.total_dofs);
    const QuadratureRule rule = gauss_rule(k + 4);
    const BasisTable lt = legendre_facet_basis(k).tabulate(rule.points);
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const Mesh::Facet& facet = mesh.facets[f];
        if (facet.elems[1] >= 0 || facet.periodic_partner >= 0) continue;
        if (facet.tag == BoundaryTag::Outflow) continue;
        const Eigen::Vector2d a = mesh.vertices[facet.vertices[0]];
        const Eigen::Vector2d b = mesh.vertices[facet.vertices[1]];
        for (int d = 0; d <= k; ++d) {
            double v = 0.0;
            for (int q = 0; q < rule.size(); ++q) {
                const Eigen::Vector2d x = a + rule.points(q, 0) * (b - a);
                v += rule.weights(q) * lt.value(d, q) * u_bc(x).dot(facet.normal);
            }
            if (d < k)
                values(wmap.facet_moment_base[f] + d) = v;
            else
                values(wmap.top_dof[f][0]) = v;
        }
    }
    return values;
}

Eigen::VectorXd dirichlet_values_facet(const DofMap& fmap, const VectorField& u_bc) {
    const Mesh& mesh = *fmap.mesh;
    Eigen::VectorXd values = Eigen::VectorXd::Zero(fmap.total_dofs);
    const int modes = fmap.order + 1;
    const QuadratureRule rule = gauss_rule(fmap.order + 4);
    const BasisTable lt = legendre_facet_basis(fmap.order).tabulate(rule.points);
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const Mesh::Facet& facet = mesh.facets[f];
        if (facet.elems[1] >= 0 || facet.periodic_partner >= 0) continue;
        if (facet.tag == BoundaryTag::Outflow) continue;
        const Eigen::Vector2d a = mesh.vertices[facet.vertices[0]];
        const Eigen::Vector2d b = mesh.vertices[facet.vertices[1]];
        for (int d = 0; d < modes; ++d) {
            double v = 0.0;
            for (int q = 0; q < rule.size(); ++q) {
                const Eigen::Vector2d x = a + rule.points(q, 0) * (b - a);
                v += rule.weights(q) * lt.value(d, q) * u_bc(x).dot(facet.tangent);
            }
            values(fmap.facet_base[f] + d) = v;
        }
    }
    return values;
}

void save_fe_function(const FeFunction& u, const std::string& path_base) {
    std::ofstream csv(path_base + ".csv");
    if (!csv) throw ParseError("cannot write '" + path_base + ".csv'");
    csv << "dof_index,value\n";
    char buf[64];
    for (int i = 0; i < u.coeffs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%d,%.17g\n", i, u.coeffs(i));
        csv << buf;
    }
    nlohmann::json meta;
    meta["kind"] = to_string(u.map->kind);
    meta["order"] = u.map->order;
    meta["mesh_hash"] = u.map->mesh->content_hash();
    std::ofstream js(path_base + ".json");
    js << meta.dump(2) << "\n";
}

FeFunction load_fe_function(const DofMap& map, const std::string& path_base) {
    std::ifstream js(path_base + ".json");
    if (!js) throw ParseError("cannot read '" + path_base + ".json'");
    nlohmann::json meta = nlohmann::json::parse(js);
    if (meta.at("kind").get<std::string>() != to_string(map.kind) ||
        meta.at("order").get<int>() != map.order)
        throw MapMismatch("snapshot space does not match the provided map");
    if (meta.at("mesh_hash").get<std::uint64_t>() != map.mesh->content_hash())
        throw MapMismatch("snapshot was written for a different mesh");
    std::ifstream csv(path_base + ".csv");
    if (!csv) throw ParseError("cannot read '" + path_base + ".csv'");
    std::string line;
    std::getline(csv, line); // header
    FeFunction out(map);
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError("malformed snapshot line");
        const int idx = std::stoi(line.substr(0, comma));
        if (idx < 0 || idx >= map.total_dofs) throw ParseError("snapshot index out of range");
        out.coeffs(idx) = std::stod(line.substr(comma + 1));
    }
    return out;
}

} // namespace hdgflow
