// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ieadapt/errors.hpp"
#include "ieadapt/ops.hpp"
#include "ieadapt/sampler.hpp"
#include "oracles.hpp"

using namespace ieadapt;

namespace {

BranchSet random_branches(SeededRng& r, const Dims& dims) {
    BranchSet b;
    b.uA = gaussian(r, dims);
    b.cA = gaussian(r, dims);
    b.cU = gaussian(r, dims);
    b.cI = gaussian(r, dims);
    b.uI = gaussian(r, dims);
    return b;
}

// alpha_bar from the linear beta schedule, written independently.
double alpha_bar(int t, int T = 1000) {
    double ab = 1.0;
    for (int s = 1; s <= t; ++s) {
        const double frac = static_cast<double>(s - 1) / static_cast<double>(T - 1);
        ab *= 1.0 - (1e-4 + (2e-2 - 1e-4) * frac);
    }
    return ab;
}

}  // namespace

TEST_CASE("schedule layout") {
    const NoiseSchedule s = make_schedule(25);
    REQUIRE(s.steps.size() == 25);
    CHECK(s.steps.front() == 1000);
    CHECK(s.steps[1] == 960);
    CHECK(s.steps.back() == 40);
    CHECK(s.transitions().back() == std::pair<int, int>{40, 0});
    CHECK(s.alpha_bar(0) == 1.0);
    CHECK(s.betas[1] == doctest::Approx(1e-4));
    CHECK(s.betas[1000] == doctest::Approx(2e-2));
    for (int t : {1, 10, 500, 1000}) CHECK(s.alpha_bar(t) == doctest::Approx(alpha_bar(t)).epsilon(1e-12));
    CHECK(make_schedule(10).steps == std::vector<int>{1000, 900, 800, 700, 600, 500, 400, 300, 200, 100});
    CHECK_THROWS_AS(make_schedule(0), DomainError);
    CHECK_THROWS_AS(s.alpha_bar(1001), DomainError);
}

TEST_CASE("predict_x0 identities") {
    const NoiseSchedule s = make_schedule(25);
    SeededRng r(1);
    const Tensor x = gaussian(r, {2, 3}), e = gaussian(r, {2, 3});
    CHECK(predict_x0(x, 0, e, s) == x);
    const double ab = s.alpha_bar(500);
    Tensor cancel = x;
    for (auto& v : cancel.data()) v = static_cast<float>(v / std::sqrt(1.0 - ab));
    const Tensor zero = predict_x0(x, 500, cancel, s);
    for (float v : zero.data()) CHECK(std::abs(v) < 1e-5);
    const Tensor x0 = predict_x0(x, 500, e, s);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::sqrt(ab) * x0[i] + std::sqrt(1 - ab) * e[i] == doctest::Approx(x[i]).epsilon(1e-5));
}

TEST_CASE("ddim step endpoints and direction") {
    const NoiseSchedule s = make_schedule(25);
    SeededRng r(2);
    const Tensor x = gaussian(r, {4}), e = gaussian(r, {4});
    CHECK(ddim_step(x, 40, 0, e, s) == predict_x0(x, 40, e, s));
    const Tensor same = ddim_transfer(x, 400, 400, e, s);
    CHECK(oracle::max_abs_diff(same, x) < 1e-6);
    CHECK_THROWS_AS(ddim_step(x, 40, 80, e, s), DomainError);
    // One inversion step then one sampling step with the same eps is the identity.
    const Tensor up = ddim_transfer(x, 40, 80, e, s);
    CHECK(oracle::max_abs_diff(ddim_step(up, 80, 40, e, s), x) < 1e-4);
}

TEST_CASE("cfg combine") {
    SeededRng r(3);
    const Tensor c = gaussian(r, {5}), u = gaussian(r, {5});
    CHECK(cfg_combine(c, u, 1.0) == c);
    CHECK(cfg_combine(c, u, 0.0) == u);
    CHECK(cfg_combine(c, c, 7.5) == c);
}

TEST_CASE("guidance combine equals the direct formula exactly") {
    SeededRng r(4);
    for (int k = 0; k < 30; ++k) {
        const BranchSet b = random_branches(r, {3, 4});
        for (Strategy st : {Strategy::none, Strategy::eq5, Strategy::s1, Strategy::s2, Strategy::s3, Strategy::s4}) {
            for (Combo co : {Combo::A_minus_I, Combo::U_minus_A, Combo::U_minus_I}) {
                GuidanceSpec g;
                g.strategy = st;
                g.combo = co;
                g.omega = 1.5 + 10.0 * r.uniform();
                g.lambda = 0.1 + 2.0 * r.uniform();
                CHECK(ie_guidance_combine(b, g) == oracle::guidance(b, g));
            }
        }
    }
}

TEST_CASE("guidance reductions and validation") {
    SeededRng r(5);
    BranchSet b = random_branches(r, {6});
    GuidanceSpec g;
    g.strategy = Strategy::eq5;
    g.combo = Combo::U_minus_I;
    g.lambda = 0.0;
    CHECK(ie_guidance_combine(b, g) == cfg_combine(*b.cA, *b.uA, g.omega));
    g.strategy = Strategy::s4;
    b.cU = b.cA;
    CHECK(ie_guidance_combine(b, g) == cfg_combine(*b.cA, *b.uA, g.omega));
    GuidanceSpec bad;
    bad.strategy = Strategy::eq5;
    CHECK_THROWS_AS(bad.validate(), SpecError);
    BranchSet partial;
    partial.uA = b.uA;
    partial.cA = b.cA;
    GuidanceSpec s1;
    s1.strategy = Strategy::s1;
    CHECK_THROWS_AS(ie_guidance_combine(partial, s1), SpecError);
    CHECK_THROWS_AS(parse_strategy("s9"), ConfigError);
    CHECK(parse_combo("UA") == Combo::U_minus_A);
}

TEST_CASE("required branches follow the strategy") {
    GuidanceSpec g;
    CHECK(g.required_branches() == std::vector<Branch>{Branch::uA, Branch::cA});
    g.omega = 1.0;
    CHECK(g.required_branches() == std::vector<Branch>{Branch::cA});
    g.omega = 9.0;
    g.strategy = Strategy::eq5;
    g.combo = Combo::U_minus_I;
    CHECK(g.required_branches() == std::vector<Branch>{Branch::uA, Branch::cA, Branch::cU, Branch::cI});
    g.lambda = 0.0;
    CHECK(g.required_branches() == std::vector<Branch>{Branch::uA, Branch::cA});
    g.lambda = 1.0;
    g.strategy = Strategy::s1;
    CHECK(g.required_branches() == std::vector<Branch>{Branch::uA, Branch::cA, Branch::uI});
}

TEST_CASE("guidance is linear in the branches") {
    SeededRng r(6);
    const BranchSet b = random_branches(r, {8});
    BranchSet b2;
    for (Branch br : {Branch::uA, Branch::cA, Branch::cU, Branch::cI, Branch::uI}) b2.get(br) = scale(*b.get(br), 3.0f);
    for (Strategy st : {Strategy::eq5, Strategy::s1, Strategy::s2, Strategy::s3, Strategy::s4}) {
        GuidanceSpec g;
        g.strategy = st;
        g.combo = Combo::A_minus_I;
        CHECK(oracle::max_abs_diff(ie_guidance_combine(b2, g), scale(ie_guidance_combine(b, g), 3.0f)) < 1e-4);
    }
}

TEST_CASE("CFG sampling matches a hand-rolled two-branch loop") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule s = make_schedule(6);
    GuidanceSpec g;
    g.omega = 4.0;
    const SampleResult res = sample(m, "a kite", "", 17, s, g);

    const Condition c = embed_prompt("a kite", 8), u = Condition::null(8);
    Tensor x = initial_noise(m.config, 17);
    const std::vector<int> ts = s.steps;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const int t = ts[k], tp = k + 1 < ts.size() ? ts[k + 1] : 0;
        const Tensor eu = predict_noise(m, {x, t}, u).eps, ec = predict_noise(m, {x, t}, c).eps;
        const double ab = alpha_bar(t), abp = alpha_bar(tp);
        Tensor next(x.dims());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const float e = eu[i] + 4.0f * (ec[i] - eu[i]);
            const double x0 = (static_cast<double>(x[i]) - std::sqrt(1.0 - ab) * e) / std::sqrt(ab);
            next[i] = static_cast<float>(std::sqrt(abp) * x0 + std::sqrt(1.0 - abp) * e);
        }
        x = next;
    }
    CHECK(res.x0 == x);
}

TEST_CASE("sampling determinism, lambda zero reduction and clear") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule s = make_schedule(5);
    GuidanceSpec cfg;
    const Tensor a = sample(m, "a boat", "", 3, s, cfg).x0;
    CHECK(sample(m, "a boat", "", 3, s, cfg).x0 == a);
    CHECK(sample(m, "a boat", "", 4, s, cfg).x0 != a);

    GuidanceSpec eq5;
    eq5.strategy = Strategy::eq5;
    eq5.combo = Combo::U_minus_I;
    eq5.lambda = 0.0;
    SamplePlan plan;
    plan.guidance_layers = {3};
    CHECK(sample(m, "a boat", "", 3, s, eq5, plan).x0 == a);

    Registry reg = m.make_registry();
    reg.replace(2, ReplacementMatrix::uniform());
    reg.clear();
    SamplePlan cleared;
    cleared.registry = reg;
    CHECK(sample(m, "a boat", "", 3, s, cfg, cleared).x0 == a);
}

TEST_CASE("zero-output model inverts in closed form") {
    ToyVDM m = init_model(oracle::small_config());
    for (auto& v : m.w_final.data()) v = 0.0f;
    for (auto& v : m.b_final.data()) v = 0.0f;
    const NoiseSchedule s = make_schedule(10);
    SeededRng r(8);
    const Tensor x0 = gaussian(r, m.config.latent_dims());
    const auto traj = ddim_invert(m, x0, Condition::null(8), s);
    REQUIRE(traj.size() == 11);
    // With eps = 0 every move scales by sqrt(abar_to / abar_from).
    const double f = std::sqrt(alpha_bar(1000));
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(traj.back()[i] == doctest::Approx(f * x0[i]).epsilon(1e-5));
    GuidanceSpec g;
    g.omega = 1.0;
    const Tensor back = sample_from(m, traj.back(), {Condition::null(8), Condition::null(8)}, s, g).x0;
    CHECK(oracle::max_abs_diff(back, x0) < 1e-4);
}

TEST_CASE("trace dump writes per-step tensors") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule s = make_schedule(2);
    const auto dir = std::filesystem::temp_directory_path() / "ieadapt_trace_test";
    std::filesystem::remove_all(dir);
    SamplePlan plan;
    plan.trace_dir = dir / "trace";
    sample(m, "x", "", 1, s, GuidanceSpec{}, plan);
    CHECK(std::filesystem::exists(dir / "trace" / "step0_t1000_latent.iead"));
    CHECK(std::filesystem::exists(dir / "trace" / "step1_t500_eps_cA.iead"));
    CHECK(std::filesystem::exists(dir / "trace" / "step1_t500_eps_guided.iead"));
    std::filesystem::remove_all(dir);
}
