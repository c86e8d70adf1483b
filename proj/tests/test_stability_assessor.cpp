#include <doctest.h>

#include <numbers>

#include "fixtures.hpp"

using namespace swing;

TEST_CASE("COI frame sums vanish") {
    Vec M(3), d(3), w(3);
    M << 2.364, 0.64, 0.301;
    d << 0.1, 0.5, -0.3;
    w << 0.2, -1.0, 3.0;
    const CoiFrame f = coi_frame(M, d, w);
    CHECK(std::abs(M.dot(f.delta_rel)) <= 1e-10);
    CHECK(std::abs(M.dot(f.omega_rel)) <= 1e-10);
    CHECK(f.M_T == doctest::Approx(M.sum()));
    CHECK_THROWS_AS(coi_frame(Vec::Zero(3), d, w), ValidationError);
}

TEST_CASE("classification of the no-disturbance case") {
    const PreFault pf = initialize(build_network_model(fx::ieee9()));
    const InitialState s = post_disturbance_state(pf.op, pf.network);
    const SwingSystem sys = assemble_system(pf.model, pf.network.vmap, s.O, s.O_tilde);
    const AnalyticSolution sol = solve_analytic(sys, s.z, 0.0, pf.network.vmap);
    const Verdict v = classify(sol, pf.model);
    CHECK(v.type == StabilityType::I);
    CHECK(v.stable());
    CHECK(v.max_excursion <= 1e-9);
    CHECK(std::string(type_name(v.type)) == "I");
}

TEST_CASE("classification of the scenarios") {
    ScenarioOptions opt;
    opt.methods = {Method::Analytic};
    opt.no_reinit_pass = false;
    SUBCASE("on-fault: generator 2 runs away") {
        const ScenarioResult r = simulate(fx::ieee9(), fx::scenario("on_fault"), opt);
        REQUIRE(r.analytic_verdict);
        CHECK(r.analytic_verdict->type == StabilityType::IV);
        CHECK_FALSE(r.analytic_verdict->stable());
        CHECK(r.analytic_verdict->runaway_machine == 1);
    }
    SUBCASE("cleared fault: unstable modes, bounded excursion") {
        const ScenarioResult r = simulate(fx::ieee9(), fx::scenario("cleared_fault"), opt);
        REQUIRE(r.analytic_verdict);
        CHECK(r.analytic_verdict->type == StabilityType::III);
        CHECK(r.analytic_verdict->max_re > 0.0);
        CHECK(r.analytic_verdict->max_excursion < std::numbers::pi);
    }
}

TEST_CASE("Bauer-Fike split") {
    SUBCASE("zero operating part leaves the spectrum unchanged") {
        std::mt19937 rng(8);
        const Mat A = fx::random_matrix(rng, 6);
        const SplitT s = bauer_fike(A, Mat::Zero(6, 6));
        CHECK(s.diagonalizable);
        CHECK(s.max_distance <= 1e-10);
        CHECK(s.bound_holds());
    }
    SUBCASE("9-bus load loss") {
        const auto st = fx::stage(fx::ieee9(), fx::load_scale(8, 0.9));
        const SplitT s = split_T(st.sys);
        CHECK((s.T_sys - s.T_op - st.sys.T).norm() <= 1e-12 * st.sys.T.norm());
        CHECK(s.diagonalizable);
        CHECK(s.bound_holds());
        // the operating part carries exactly the frozen O and mechanical-power terms
        const int NI = st.sys.NI;
        CHECK(s.T_op.topRows(2 * NI).norm() == 0.0);
        CHECK(s.T_op(2 * NI, 0) == doctest::Approx(st.sys.O0(0)));
    }
}

TEST_CASE("eigenvalue condition numbers") {
    SUBCASE("normal matrix") {
        std::mt19937 rng(9);
        Mat A = fx::random_matrix(rng, 5);
        A = (A + A.transpose()).eval();
        for (const auto& c : eigen_condition(A)) CHECK(c.s == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("near-defective 2x2 against closed-form eigenvectors") {
        for (double e : {1e-2, 1e-4, 1e-6}) {
            Mat A(2, 2);
            A << 1, 1, e, 1;
            // right (1, sqrt e), left (sqrt e, 1): s = 2 sqrt(e) / (1 + e)
            const double want = 2 * std::sqrt(e) / (1 + e);
            for (const auto& c : eigen_condition(A)) {
                CHECK(c.s == doctest::Approx(want).epsilon(1e-6));
                CHECK(c.inv_s == doctest::Approx(1 / want).epsilon(1e-6));
            }
        }
    }
    SUBCASE("multiple eigenvalue is flagged") {
        const auto c = eigen_condition(Mat::Identity(2, 2));
        CHECK_FALSE(c[0].defined);
    }
}

TEST_CASE("COM check with equal angles") {
    const PreFault pf = initialize(build_network_model(fx::ieee9()));
    const CVec V = CVec::Constant(pf.model.n_nodes(), cplx(1.0, 0.0));
    const ComReport r = com_check(pf.network, V, 0.129);
    CHECK(r.delta_max == 0.0);
    CHECK(r.certified);
    CHECK(r.components == 1);
    CHECK_THROWS_AS(com_check(pf.network, CVec::Ones(3), 0.129), ValidationError);
}

TEST_CASE("direct method at the stable equilibrium") {
    const PreFault pf = initialize(build_network_model(fx::ieee9()));
    const InitialState s = post_disturbance_state(pf.op, pf.network);
    const EnergyReport e = dm_margin(pf.network, pf.op.delta, pf.op.omega, s.bus_voltage);
    CHECK(e.kinetic == 0.0);
    CHECK(std::abs(e.potential) <= 1e-10);
    CHECK(e.V_margin > 0);
    CHECK(e.certified);
    for (int i = 0; i < 3; ++i) CHECK(e.delta_u(i) == doctest::Approx(std::numbers::pi - e.delta_s(i)));

    // mechanical power beyond the coupling has no equilibrium
    NetworkState heavy = pf.network;
    heavy.model.units[0].p_mech = 100.0;
    CHECK_THROWS_AS(dm_margin(heavy, pf.op.delta, pf.op.omega, s.bus_voltage), NumericalError);
}

TEST_CASE("lossless energy is stationary at equilibrium") {
    std::mt19937 rng(21);
    const RawCase raw = fx::random_case(rng, 3, 6, true);
    const PreFault pf = initialize(build_network_model(raw));
    const CMat Y = reduced_admittance(pf.network);
    const int NI = pf.model.NI;
    Vec E(NI), M(NI), Pm(NI);
    for (int i = 0; i < NI; ++i) {
        E(i) = pf.model.units[i].E;
        M(i) = pf.model.units[i].M;
        Pm(i) = *pf.model.units[i].p_mech;
    }
    // the flat start is an equilibrium of the unloaded reactive system
    const Vec d0 = Vec::Zero(NI), w0 = Vec::Zero(NI);
    const Vec pe = electrical_power(pf.network, d0, Vec());
    CHECK(pe.cwiseAbs().maxCoeff() <= 1e-12);
    const double h = 1e-6;
    for (int i = 0; i < NI; ++i) {
        Vec dp = d0, dm = d0;
        dp(i) += h;
        dm(i) -= h;
        CHECK(std::abs(lossless_energy(Y, E, M, Pm, dp, w0) - lossless_energy(Y, E, M, Pm, dm, w0)) / (2 * h) <= 1e-8);
    }
}
