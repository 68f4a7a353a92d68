#pragma once

#include "hdgflow/bdm.hpp"
#include "hdgflow/mesh.hpp"

#include <functional>
#include <memory>

namespace hdgflow {

enum class SpaceKind { WRelaxed, WConf, Facet, Pressure, DG };

std::string to_string(SpaceKind kind);
SpaceKind space_kind_from_string(const std::string& name);

/// Vector-valued field callback in physical coordinates.
using VectorField = std::function<Eigen::Vector2d(const Eigen::Vector2d&)>;
using ScalarField = std::function<double(const Eigen::Vector2d&)>;

/// Global degree-of-freedom map for one discrete space.
///
/// W spaces store one shared global index per interior-facet normal moment
/// of degree < k; the degree-k moment has one index per side (WRelaxed) or
/// a single shared index (WConf). That sharing is what encodes the relaxed
/// resp. full H(div)-conformity exactly. The facet space carries k scalar
/// tangential modes per facet; the pressure space is element-local.
class DofMap {
public:
    struct LocalDof {
        int global = -1;
        double scale = 1.0; // local reference coefficient = scale * global value
    };

    SpaceKind kind = SpaceKind::WRelaxed;
    int order = 1; // polynomial degree of this space
    const Mesh* mesh = nullptr;
    int total_dofs = 0;
    std::vector<bool> dirichlet;

    // W kinds and DG: per element, aligned with BdmElement::dofs.
    std::vector<std::vector<LocalDof>> element_dofs;
    std::shared_ptr<const BdmElement> bdm;

    // W kinds: normal-moment indexing per canonical facet.
    std::vector<int> facet_moment_base;        // modes 0..k-1
    std::vector<std::array<int, 2>> top_dof;   // degree-k moment per side

    // Facet kind: base of the k tangential modes per canonical facet.
    std::vector<int> facet_base;

    // Pressure: per-element block.
    std::vector<int> element_base;
    int element_block_size = 0;

    bool is_velocity() const {
        return kind == SpaceKind::WRelaxed || kind == SpaceKind::WConf || kind == SpaceKind::DG;
    }
    int num_dirichlet() const;
};

DofMap build_dofmap(const Mesh& mesh, SpaceKind kind, int order);

/// Coefficient vector bound to a DofMap.
struct FeFunction {
    const DofMap* map = nullptr;
    Eigen::VectorXd coeffs;

    FeFunction() = default;
    explicit FeFunction(const DofMap& m)
        : map(&m), coeffs(Eigen::VectorXd::Zero(m.total_dofs)) {}
};

/// Reference dual-basis tables of a W space at a fixed point set:
/// values and reference gradients of every local basis function.
struct WShape {
    Eigen::MatrixXd v1, v2;         // nloc x nq, reference components
    Eigen::MatrixXd g1x, g1y, g2x, g2y;
    Eigen::MatrixXd div_ref;        // nloc x nq

    WShape() = default;
    WShape(const BdmElement& elem, const Eigen::MatrixXd& points);
};

/// Reference points on local facet f for a [0,1] line rule.
Eigen::MatrixXd facet_ref_points(int local_facet, const Eigen::MatrixXd& params);

enum class EvalWhat { Value, Gradient, Divergence, NormalTrace, TangentialTrace };

/// Evaluates an FeFunction on one element at reference points (volume
/// kinds) or at facet parameters of a local facet (trace kinds).
/// Returns: Value -> 2 x nq (1 x nq for pressure); Gradient -> 4 x nq rows
/// (d1/dx, d1/dy, d2/dx, d2/dy); Divergence/NormalTrace -> 1 x nq;
/// TangentialTrace -> 1 x nq (component along the facet DOF tangent).
Eigen::MatrixXd evaluate(const FeFunction& u, int element, const Eigen::MatrixXd& points,
                         EvalWhat what, int local_facet = -1);

/// L2(F) projection of scalar samples given at line-rule points onto
/// P^m(F): returns the m+1 orthonormal Legendre coefficients.
Eigen::VectorXd project_facet(const Eigen::VectorXd& samples, const QuadratureRule& rule,
                              int m);

/// Element-wise L2 projection of a vector field onto [P^m(T)]^2 in the
/// mapped Dubiner basis; returns 2*dim(P^m) coefficients (components
/// interleaved). Evaluate with `evaluate_projected`.
Eigen::VectorXd project_element(const VectorField& f, const Mesh& mesh, int element, int m,
                                int quad_degree);
Eigen::MatrixXd evaluate_projected(const Eigen::VectorXd& coeffs, int m, const Mesh& mesh,
                                   int element, const Eigen::MatrixXd& ref_points);

/// BDM interpolation: applies the DOF functionals of the target space to
/// an arbitrary velocity field.
FeFunction interpolate_bdm(const VectorField& u, const DofMap& map, int extra_degree = 4);

/// Tangential-trace interpolation into the facet space.
FeFunction interpolate_facet(const VectorField& u, const DofMap& facet_map,
                             int extra_degree = 4);

/// Scalar interpolation (L2 projection per element) into the pressure space.
FeFunction project_pressure(const ScalarField& p, const DofMap& pressure_map,
                            int extra_degree = 4);

/// Dirichlet values for the W and facet spaces from boundary data; entries
/// of non-Dirichlet DOFs are zero.
Eigen::VectorXd dirichlet_values_w(const DofMap& wmap, const VectorField& u_bc);
Eigen::VectorXd dirichlet_values_facet(const DofMap& fmap, const VectorField& u_bc);

/// Snapshot I/O: CSV `dof_index,value` next to a JSON sidecar holding
/// (kind, order, mesh hash).
void save_fe_function(const FeFunction& u, const std::string& path_base);
FeFunction load_fe_function(const DofMap& map, const std::string& path_base);

} // namespace hdgflow
