// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ieadapt/errors.hpp"
#include "ieadapt/harness.hpp"
#include "ieadapt/kernels.hpp"
#include "oracles.hpp"

using namespace ieadapt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("ieadapt_harness_" + name);
    fs::remove_all(d);
    return d;
}

// Minimal tag balance check: every element closes in order.
bool well_formed(const std::string& xml) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    while ((i = xml.find('<', i)) != std::string::npos) {
        const std::size_t j = xml.find('>', i);
        if (j == std::string::npos) return false;
        const std::string tag = xml.substr(i + 1, j - i - 1);
        i = j + 1;
        if (tag.empty()) return false;
        if (tag[0] == '?' || tag[0] == '!') continue;
        if (tag.back() == '/') continue;
        const std::string name = tag.substr(tag[0] == '/' ? 1 : 0, tag.find_first_of(" \t\n/", 1) - (tag[0] == '/' ? 1 : 0));
        if (tag[0] == '/') {
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
        } else {
            stack.push_back(name);
        }
    }
    return stack.empty();
}

bool same_metrics(const RunRecord& a, const RunRecord& b) {
    return a.metrics.ssim == b.metrics.ssim && a.metrics.mse == b.metrics.mse &&
           a.metrics.motion_magnitude == b.metrics.motion_magnitude &&
           a.metrics.motion_smoothness == b.metrics.motion_smoothness &&
           a.metrics.subject_consistency == b.metrics.subject_consistency &&
           a.metrics.sharpness == b.metrics.sharpness;
}

SweepSpec small_spec(SweepKind k) {
    SweepSpec s;
    s.kind = k;
    s.prompts = {"a red kite", "a blue boat"};
    s.steps = 3;
    s.omega = 5.0;
    return s;
}

}  // namespace

TEST_CASE("single-layer sweep runs every layer with both matrices") {
    const ToyVDM m = init_model(oracle::small_config());
    const SweepSpec spec = small_spec(SweepKind::single_layer);
    SweepStats st;
    const auto runs = run_sweep(spec, m, make_schedule(spec.steps), {}, &st);
    CHECK(runs.size() == 2 * m.layer_count() * spec.prompts.size());
    CHECK(st.baselines == 2);
    for (const auto& r : runs) {
        CHECK(r.status == "ok");
        CHECK(r.spec_hash == spec.hash());
        CHECK((r.matrix == "I" || r.matrix == "U"));
        CHECK(r.metrics.ssim <= 1.0);
    }
}

TEST_CASE("blend endpoints reproduce the single-layer runs") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule sched = make_schedule(3);
    SweepSpec single = small_spec(SweepKind::single_layer);
    single.prompts = {"a red kite"};
    single.layers = {1, 4};
    SweepSpec blend = single;
    blend.kind = SweepKind::blend;
    blend.alphas = {0.0, 1.0};
    const auto a = run_sweep(single, m, sched);
    const auto b = run_sweep(blend, m, sched);
    REQUIRE(a.size() == 4);
    REQUIRE(b.size() == 4);
    for (const auto& x : a)
        for (const auto& y : b)
            if (x.layer_set == y.layer_set && x.alpha == y.alpha) {
                CHECK(same_metrics(x, y));
                CHECK(x.entropy_pct_mean == y.entropy_pct_mean);
            }
}

TEST_CASE("resume reproduces the report") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule sched = make_schedule(2);
    SweepSpec spec = small_spec(SweepKind::single_layer);
    spec.layers = {0, 1, 2};
    const fs::path dir = scratch("resume");
    SweepOptions opt{dir, 1};
    SweepStats st;
    const auto first = run_sweep(spec, m, sched, opt, &st);
    CHECK(st.executed == first.size());
    emit_report(first, dir / "a");

    std::size_t k = 0, removed = 0;
    for (const auto& e : fs::directory_iterator(dir / "runs"))
        if (k++ % 2 == 0) {
            fs::remove(e.path());
            ++removed;
        }
    const auto second = run_sweep(spec, m, sched, opt, &st);
    CHECK(st.executed == removed);
    CHECK(st.resumed == first.size() - removed);
    CHECK(st.baselines == 0);
    emit_report(second, dir / "b");
    CHECK(slurp(dir / "a" / "report.csv") == slurp(dir / "b" / "report.csv"));
    fs::remove_all(dir);
}

TEST_CASE("worker count does not change results") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule sched = make_schedule(2);
    SweepSpec spec = small_spec(SweepKind::blend);
    spec.layers = {3};
    const auto one = run_sweep(spec, m, sched, {{}, 1});
    const auto four = run_sweep(spec, m, sched, {{}, 4});
    REQUIRE(one.size() == four.size());
    for (std::size_t i = 0; i < one.size(); ++i) CHECK(report_row(one[i]) == report_row(four[i]));
}

TEST_CASE("report csv and svg") {
    const ToyVDM m = init_model(oracle::small_config());
    SweepSpec spec = small_spec(SweepKind::multi_layer);
    spec.prompts = {"a <tag> & \"quote\""};
    spec.combos = {"spatial_only", "temporal_only"};
    const auto runs = run_sweep(spec, m, make_schedule(2));
    const fs::path dir = scratch("report");
    emit_report(runs, dir / "x");
    emit_report(runs, dir / "y");
    std::size_t svgs = 0;
    for (const auto& e : fs::directory_iterator(dir / "x")) {
        CHECK(slurp(e.path()) == slurp(dir / "y" / e.path().filename()));
        if (e.path().extension() == ".svg") {
            ++svgs;
            CHECK(well_formed(slurp(e.path())));
        }
    }
    CHECK(svgs == 6);
    std::istringstream csv(slurp(dir / "x" / "report.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == report_header());
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        const RunRecord r = parse_report_row(line);
        CHECK(report_row(r) == line);
        ++rows;
    }
    CHECK(rows == runs.size());
    CHECK_THROWS_AS(emit_report({}, dir / "z"), DomainError);
    CHECK_THROWS_AS(parse_report_row("a,b,c"), ValidationError);
    CHECK(well_formed(svg_bar_chart("<&>", {"g"}, {"s"}, {{1.0}})));
    fs::remove_all(dir);
}

TEST_CASE("sweep hash depends on content only") {
    SweepSpec a;
    a.kind = SweepKind::blend;
    a.seeds = {1, 2};
    a.omega = 7.0;
    SweepSpec b;
    b.omega = 7.0;
    b.seeds = {1, 2};
    b.kind = SweepKind::blend;
    CHECK(a.hash() == b.hash());
    CHECK(a.canonical() == b.canonical());
    b.omega = 7.5;
    CHECK(a.hash() != b.hash());
    CHECK(a.hash().size() == 16);
}

TEST_CASE("sweep validation and layer presets") {
    SweepSpec s;
    s.matrices = {'X'};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    SweepSpec r;
    r.kind = SweepKind::rho;
    r.prompts = {"no separator"};
    CHECK_THROWS_AS(r.validate(), ConfigError);
    const ToyVDM m = init_model(oracle::small_config());
    CHECK(resolve_layer_set("temporal_only", m, {}) == std::vector<int>{1, 3, 5, 7, 9});
    CHECK(resolve_layer_set("encoder_layers", m, {}) == std::vector<int>{0, 1, 2, 3});
    CHECK(resolve_layer_set("2;0,2", m, {}) == std::vector<int>{0, 2});
    CHECK_THROWS_AS(resolve_layer_set("99", m, {}), ConfigError);
    CHECK_THROWS_AS(resolve_layer_set("bogus", m, {}), ConfigError);
    CHECK_THROWS_AS(resolve_layer_set("top50_entropy", m, {}), DomainError);
    std::vector<LayerStats> probe(m.layer_count());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        probe[i].layer_index = static_cast<int>(i);
        probe[i].entropy_pct = static_cast<double>((i * 7) % 10) / 10.0;
    }
    const auto top = resolve_layer_set("top50_entropy", m, probe);
    const auto bottom = resolve_layer_set("bottom50_entropy", m, probe);
    CHECK(bottom == oracle::bottom_fraction(probe, 0.5));
    CHECK(top.size() + bottom.size() == m.layer_count());
    CHECK_THROWS_AS(read_prompts("/nonexistent/prompts.txt"), IoError);
    CHECK(default_prompts().size() >= 16);
}

TEST_CASE("strategy and rho sweeps") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule sched = make_schedule(2);
    SweepSpec s = small_spec(SweepKind::strategy);
    s.prompts = {"a red kite"};
    GuidanceSpec g;
    g.strategy = Strategy::eq5;
    g.combo = Combo::U_minus_I;
    s.strategies = {g};
    const auto sr = run_sweep(s, m, sched);
    REQUIRE(sr.size() == 1);
    CHECK(sr[0].status == "ok");
    SweepSpec r = small_spec(SweepKind::rho);
    r.prompts = {"a red kite|a blue kite"};
    r.rhos = {0.5, 1.0};
    const auto rr = run_sweep(r, m, sched);
    REQUIRE(rr.size() == 2);
    CHECK(rr[0].status == "ok");
    CHECK(std::count(rr[1].layer_set.begin(), rr[1].layer_set.end(), ';') == 9);
}

TEST_CASE("entropy report") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule sched = make_schedule(3);
    const fs::path dir = scratch("entropy");
    EntropyReportOptions o;
    const auto rows = entropy_report(m, {"a red kite", "a blue boat"}, sched, o, dir);
    REQUIRE(rows.size() == m.layer_count());
    for (const auto& r : rows) {
        CHECK(r.eiv_equals_ev);
        CHECK(r.containment >= 0.0);
        CHECK(r.containment <= 1.0);
        CHECK(r.entropy_pct > 0.0);
        CHECK(r.energy_uv <= r.energy_iv);
    }
    CHECK(fs::exists(dir / "entropy_report.csv"));
    CHECK(well_formed(slurp(dir / "energy.svg")));
    std::ifstream ls(dir / "layer_stats.csv");
    const auto stats = read_layer_stats_csv(ls);
    CHECK(stats.size() == 2 * m.layer_count());

    Registry forced = m.make_registry();
    forced.replace(2, ReplacementMatrix::identity());
    o.base = &forced;
    const auto f = entropy_report(m, {"a red kite"}, sched, o);
    CHECK(f[2].entropy_pct == 0.0);
    o.base = nullptr;
    o.policy = ProbePolicy::mean_over_steps;
    for (const auto& r : entropy_report(m, {"a red kite"}, sched, o)) CHECK(r.eiv_equals_ev);
    fs::remove_all(dir);
}
