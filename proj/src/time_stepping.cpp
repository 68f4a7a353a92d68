#include "hdgflow/time_stepping.hpp"

#include "hdgflow/common.hpp"

#include <cmath>

namespace hdgflow {

std::string to_string(Semidisc s) {
    switch (s) {
        case Semidisc::A: return "a";
        case Semidisc::B: return "b";
        case Semidisc::C: return "c";
        case Semidisc::D: return "d";
    }
    return "a";
}

std::string to_string(Scheme s) { return s == Scheme::IMEX1 ? "IMEX1" : "SBDF2"; }

Semidisc semidisc_from_string(const std::string& name) {
    if (name == "a") return Semidisc::A;
    if (name == "b") return Semidisc::B;
    if (name == "c") return Semidisc::C;
    if (name == "d") return Semidisc::D;
    throw ParseError("unknown semi-discretization '" + name + "' (expected a|b|c|d)");
}

Scheme scheme_from_string(const std::string& name) {
    if (name == "IMEX1" || name == "imex1") return Scheme::IMEX1;
    if (name == "SBDF2" || name == "sbdf2") return Scheme::SBDF2;
    throw ParseError("unknown scheme '" + name + "' (expected IMEX1|SBDF2)");
}

ImexStepper::ImexStepper(const UnsteadyProblem& problem) : problem_(problem) {
    const Mesh& mesh = *problem.mesh;
    if (problem.dt <= 0.0 || problem.t_end <= 0.0)
        throw std::invalid_argument("dt and t_end must be positive");

    wmap_ = std::make_shared<DofMap>(build_dofmap(mesh, problem.velocity_kind, problem.k));
    fmap_ = std::make_shared<DofMap>(build_dofmap(mesh, SpaceKind::Facet, problem.k - 1));
    pmap_ = std::make_shared<DofMap>(build_dofmap(mesh, SpaceKind::Pressure, problem.k - 1));
    vel_ = velocity_blocks(*wmap_, *fmap_);

    const bool needs_rec = problem.velocity_kind == SpaceKind::WRelaxed;
    if (needs_rec) {
        conf_map_ = std::make_shared<DofMap>(build_dofmap(mesh, SpaceKind::WConf, problem.k));
        rec_ = std::make_unique<ReconstructionOp>(*wmap_, *conf_map_);
        conf_vel_ = velocity_blocks(*conf_map_, *fmap_);
    }

    sys_ = build_sparse_system(mesh, vel_, *pmap_, problem.nu, problem.lambda);
    mass_ = assemble_mass(mesh, vel_);

    // Balanced scaling [[a_mass M + dt A, dt B^T],[B, 0]] keeps the
    // continuity residual at the solver tolerance independently of dt.
    const double a_mass_main = problem.scheme == Scheme::SBDF2 ? 1.5 : 1.0;
    solver_ = std::make_unique<LinearSolver>(
        sys_.compose(problem.dt, a_mass_main, &mass_, problem.dt));
    if (problem.scheme == Scheme::SBDF2)
        solver_first_ =
            std::make_unique<LinearSolver>(sys_.compose(problem.dt, 1.0, &mass_, problem.dt));

    forcing_vec_ = Eigen::VectorXd::Zero(vel_.size());
    if (problem.forcing) {
        const bool robust =
            (problem.semidisc == Semidisc::B || problem.semidisc == Semidisc::D) && rec_;
        forcing_vec_ = robust
                           ? assemble_rhs_reconstructed(mesh, vel_, *rec_, problem.forcing).vector
                           : assemble_rhs(mesh, vel_, problem.forcing).vector;
    }

    g0_ = Eigen::VectorXd::Zero(vel_.size());
    if (problem.dirichlet) {
        g0_.head(vel_.n_w) = dirichlet_values_w(*wmap_, problem.dirichlet);
        g0_.tail(vel_.n_f) = dirichlet_values_facet(*fmap_, problem.dirichlet);
        for (int i = 0; i < vel_.n_w; ++i)
            if (!wmap_->dirichlet[i]) g0_(i) = 0.0;
        for (int i = 0; i < vel_.n_f; ++i)
            if (!fmap_->dirichlet[i]) g0_(vel_.n_w + i) = 0.0;
    }

    state_.t = 0.0;
    state_.velocity = FeFunction(*wmap_);
    state_.facet = FeFunction(*fmap_);
    state_.pressure = FeFunction(*pmap_);
    if (problem.initial) {
        // Oscillatory initial data needs generous quadrature or the
        // interpolant is not weakly incompressible to machine precision.
        state_.velocity = interpolate_bdm(problem.initial, *wmap_, 12);
        state_.facet = interpolate_facet(problem.initial, *fmap_, 12);
    }
    if (problem.post_reconstruct && rec_) apply_post_reconstruct(state_.velocity.coeffs);
    state_.energy = energy_of(state_.velocity.coeffs);
    state_.div_max = max_pointwise_divergence(state_.velocity);
    initial_energy_ = state_.energy;
}

double ImexStepper::energy_of(const Eigen::VectorXd& u_w) const {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(vel_.size());
    full.head(vel_.n_w) = u_w;
    return 0.5 * full.dot(mass_ * full);
}

void ImexStepper::apply_post_reconstruct(Eigen::VectorXd& u_w) const {
    FeFunction u(*wmap_);
    u.coeffs = u_w;
    const FeFunction ru = rec_->apply(u);
    u_w = rec_->embed(ru.coeffs);
}

Eigen::VectorXd ImexStepper::convection(const Eigen::VectorXd& u_w,
                                        const Eigen::VectorXd& u_f, double t) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(vel_.size());
    if (problem_.disable_convection) return r;

    FeFunction u(*wmap_);
    u.coeffs = u_w;
    FeFunction uf(*fmap_);
    uf.coeffs = u_f;
    (void)uf; // convection ignores facet unknowns

    ConvectionOptions opts;
    opts.boundary_data = problem_.dirichlet ? &problem_.dirichlet : nullptr;
    opts.boundary_scale = problem_.bc_ramp ? problem_.bc_ramp(t) : 1.0;
    opts.allow_average_normal =
        problem_.semidisc == Semidisc::A || problem_.semidisc == Semidisc::B;

    const bool rec_advective =
        rec_ && (problem_.semidisc == Semidisc::C || problem_.semidisc == Semidisc::D);
    const bool rec_transported = rec_ && problem_.semidisc == Semidisc::D;
    const bool rec_test =
        rec_ && (problem_.semidisc == Semidisc::B || problem_.semidisc == Semidisc::D);

    FeFunction w_adv = rec_advective ? rec_->apply(u) : u;
    FeFunction u_trans = rec_transported ? rec_->apply(u) : u;

    if (rec_test) {
        const Eigen::VectorXd rc = apply_convection(w_adv, u_trans, conf_vel_, opts);
        r.head(vel_.n_w) = rec_->apply_transpose(rc.head(conf_vel_.n_w));
    } else {
        r = apply_convection(w_adv, u_trans, vel_, opts);
    }
    return r;
}

void ImexStepper::step() {
    const double dt = problem_.dt;
    const double t = state_.t;
    const double t_new = t + dt;

    Eigen::VectorXd u_full = Eigen::VectorXd::Zero(vel_.size());
    u_full.head(vel_.n_w) = state_.velocity.coeffs;
    u_full.tail(vel_.n_f) = state_.facet.coeffs;

    const Eigen::VectorXd conv = convection(state_.velocity.coeffs, state_.facet.coeffs, t);

    Eigen::VectorXd load;
    double a_mass = 1.0;
    const LinearSolver* solver = nullptr;
    if (problem_.scheme == Scheme::SBDF2 && have_prev_) {
        Eigen::VectorXd prev_full = Eigen::VectorXd::Zero(vel_.size());
        prev_full.head(vel_.n_w) = prev_w_;
        prev_full.tail(vel_.n_f) = prev_f_;
        load = mass_ * (2.0 * u_full - 0.5 * prev_full) -
               dt * (2.0 * conv - prev_conv_) + dt * forcing_vec_;
        a_mass = 1.5;
        solver = solver_.get();
    } else {
        load = mass_ * u_full - dt * conv + dt * forcing_vec_;
        a_mass = 1.0;
        solver = problem_.scheme == Scheme::SBDF2 ? solver_first_.get() : solver_.get();
    }

    const double ramp = problem_.bc_ramp ? problem_.bc_ramp(t_new) : 1.0;
    const Eigen::VectorXd g = ramp * g0_;
    const Eigen::VectorXd b = sys_.reduce_rhs(load, g, dt, a_mass, &mass_);
    const Eigen::VectorXd x = solver->solve(b);

    Eigen::VectorXd vel_new, p_new;
    sys_.expand(x, g, vel_new, p_new);

    prev_w_ = state_.velocity.coeffs;
    prev_f_ = state_.facet.coeffs;
    prev_conv_ = conv;
    have_prev_ = true;

    state_.velocity.coeffs = vel_new.head(vel_.n_w);
    state_.facet.coeffs = vel_new.tail(vel_.n_f);
    state_.pressure.coeffs = p_new;
    if (problem_.post_reconstruct && rec_) apply_post_reconstruct(state_.velocity.coeffs);
    state_.t = t_new;
    state_.energy = energy_of(state_.velocity.coeffs);
    state_.div_max = max_pointwise_divergence(state_.velocity);
    ++steps_;

    const double threshold = initial_energy_ > 0.0 ? 1e3 * initial_energy_ : 1e6;
    if (state_.energy > threshold)
        throw Blowup("kinetic energy " + std::to_string(state_.energy) + " at t=" +
                     std::to_string(t_new) + " exceeds the stability threshold");
}

DiagRow ImexStepper::diagnostics() const {
    DiagRow row;
    row.t = state_.t;
    row.energy = state_.energy;
    row.l2_norm = std::sqrt(2.0 * state_.energy);
    row.div_max = max_pointwise_divergence(state_.velocity);
    row.normal_jump_max = max_normal_jump(state_.velocity);
    if (problem_.compute_body_force) {
        const auto [fx, fy] = drag_lift(state_.velocity, state_.pressure, problem_.nu,
                                        problem_.body_tag, problem_.body_filter);
        row.has_body = true;
        row.cd = problem_.body_scale * fx;
        row.cl = problem_.body_scale * fy;
    }
    return row;
}

std::vector<DiagRow> run_unsteady(const UnsteadyProblem& problem,
                                  const std::function<void(const DiagRow&)>& on_row) {
    ImexStepper stepper(problem);
    std::vector<DiagRow> rows;
    auto emit = [&]() {
        rows.push_back(stepper.diagnostics());
        if (on_row) on_row(rows.back());
    };
    emit();
    const long nsteps = std::lround(problem.t_end / problem.dt);
    for (long i = 1; i <= nsteps; ++i) {
        stepper.step();
        if (i % problem.diag_stride == 0 || i == nsteps) emit();
    }
    return rows;
}

} // namespace hdgflow
