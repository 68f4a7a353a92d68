#pragma once

#include "hdgflow/common.hpp"

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace hdgflow {

enum class BoundaryTag {
    Interior,
    Dirichlet,
    Inflow,
    Outflow,
    Wall,
    PeriodicMaster,
    PeriodicSlave,
};

std::string to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(const std::string& name);

/// Affine reference-to-physical map of one triangle. The Jacobian is
/// constant because all elements are straight-sided.
struct AffineMap {
    int element = -1;
    Eigen::Matrix2d jacobian;
    Eigen::Matrix2d jacobian_inv;
    Eigen::Matrix2d jacobian_inv_t;
    double det = 0.0;
    Eigen::Vector2d translation;

    Eigen::Vector2d apply(const Eigen::Vector2d& ref) const {
        return translation + jacobian * ref;
    }
    Eigen::Vector2d pull_back(const Eigen::Vector2d& phys) const {
        return jacobian_inv * (phys - translation);
    }
};

/// 2D triangulation with full facet connectivity.
///
/// Facets are stored once, directed from the lower to the higher global
/// vertex index; that direction fixes the facet tangent, normal and the
/// parameterization all trace bases share. Immutable after construction.
class Mesh {
public:
    struct Facet {
        std::array<int, 2> vertices{-1, -1}; // v0 < v1
        std::array<int, 2> elems{-1, -1};    // elems[1] = -1 on the boundary
        std::array<int, 2> local_index{-1, -1};
        BoundaryTag tag = BoundaryTag::Interior;
        int periodic_partner = -1;
        double length = 0.0;
        Eigen::Vector2d tangent; // unit, v0 -> v1
        Eigen::Vector2d normal;  // tangent rotated by -90 deg
    };

    /// Orientation data of one element side of a facet, relative to the
    /// facet that carries the degrees of freedom (the periodic master for
    /// slave facets, the facet itself otherwise).
    struct SideInfo {
        int facet = -1;     // geometric facet this side lies on
        int dof_facet = -1; // facet whose DOFs/basis this side couples to
        bool flip = false;  // local param t -> DOF param 1-t
        int sigma = +1;     // element outward normal = sigma * DOF-facet normal
        Eigen::Vector2d dof_tangent;
        Eigen::Vector2d dof_normal;
    };

    std::vector<Eigen::Vector2d> vertices;
    std::vector<std::array<int, 3>> elements; // counterclockwise
    std::vector<Facet> facets;
    std::vector<std::array<int, 3>> element_facets;
    std::vector<std::array<SideInfo, 3>> element_sides;
    std::vector<double> h_local; // element diameter
    std::vector<std::array<int, 2>> periodic_pairs; // (master, slave)

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_elements() const { return static_cast<int>(elements.size()); }
    int num_facets() const { return static_cast<int>(facets.size()); }

    bool is_exterior(int facet) const { return facets[facet].elems[1] < 0; }
    bool has_tag(BoundaryTag tag) const;

    AffineMap affine_map(int element) const;
    double element_area(int element) const;
    double total_area() const;
    double max_h() const;

    /// Local facet endpoints in element traversal order: f0=(0,1),
    /// f1=(1,2), f2=(2,0).
    static std::array<int, 2> local_facet_vertices(int local_facet);

    /// Deterministic content hash (geometry + topology + tags).
    std::uint64_t content_hash() const;

    /// Builds facet connectivity, orientation data and h_local from
    /// vertices/elements and assigns boundary tags (untagged exterior
    /// facets default to dirichlet). Periodic links are added afterwards.
    void finalize(const std::vector<std::pair<std::array<int, 2>, BoundaryTag>>& boundary_spec);

    /// Checks all structural invariants; throws TopologyError on failure.
    void validate() const;
};

/// Structured mesh of [0,1]^2 with 2 n^2 right triangles (one diagonal per
/// cell). With periodic=true, opposite boundary facets are paired.
Mesh generate_unit_square(int n, bool periodic);

/// Structured mesh of [x0,x1] x [y0,y1] with nx x ny cells, each split
/// along the same diagonal.
Mesh generate_rectangle(int nx, int ny, double x0, double x1, double y0, double y1,
                        bool periodic = false);

/// Unstructured mesh of the channel [0,2.2] x [0,0.41] minus the disk of
/// radius 0.05 at (0.2,0.2), built by Delaunay refinement. The cylinder is
/// an inscribed polygon with chord length <= h_target.
Mesh generate_channel_cylinder(double h_target);

/// Unstructured Delaunay-refined mesh of a plain rectangle; exterior
/// facets are tagged dirichlet.
Mesh generate_unstructured_rectangle(double x0, double x1, double y0, double y1,
                                     double h_target);

Mesh read_mesh(const std::string& path);
Mesh read_mesh(std::istream& in);
void write_mesh(const Mesh& mesh, const std::string& path);
void write_mesh(const Mesh& mesh, std::ostream& out);

} // namespace hdgflow
