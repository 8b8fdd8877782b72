// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "ieadapt/adapt.hpp"
#include "ieadapt/errors.hpp"
#include "ieadapt/infotheory.hpp"
#include "ieadapt/ops.hpp"
#include "ieadapt/rng.hpp"
#include "oracles.hpp"

using namespace ieadapt;

namespace {

std::vector<LayerStats> fabricated(const std::vector<double>& pct) {
    std::vector<LayerStats> s(pct.size());
    for (std::size_t i = 0; i < pct.size(); ++i) {
        s[i].layer_index = static_cast<int>(i);
        s[i].entropy_pct = pct[i];
    }
    return s;
}

std::map<std::string, std::string> read_kv(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

}  // namespace

TEST_CASE("replaying recorded maps reproduces the run") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule s = make_schedule(4);
    auto store = std::make_shared<RecordStore>();
    SamplePlan rec;
    rec.record = RecordPolicy::all_steps;
    rec.store = store;
    const Tensor a = sample(m, "red car", "", 11, s, GuidanceSpec{}, rec).x0;
    REQUIRE(store->size() == 2 * 4 * m.layer_count());

    Registry reg = m.make_registry();
    for (std::size_t l = 0; l < m.layer_count(); ++l) reg.inject(static_cast<int>(l), store);
    HookLog log;
    SamplePlan replay;
    replay.registry = reg;
    replay.log = &log;
    CHECK(sample(m, "red car", "", 11, s, GuidanceSpec{}, replay).x0 == a);
    CHECK(log.count(HookAction::inject) == 2 * 4 * m.layer_count());
}

TEST_CASE("self edit is the identity") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule s = make_schedule(4);
    for (InjectKind k : {InjectKind::map, InjectKind::kv, InjectKind::value}) {
        EditConfig cfg;
        cfg.rho = 1.0;
        cfg.inject = k;
        const EditResult r = edit_generated(m, "a dog", "a dog", 5, s, cfg);
        CHECK(r.dst_video == r.src_video);
        CHECK(r.layers.size() == m.layer_count());
    }
}

TEST_CASE("edit injects the bottom entropy half") {
    ModelConfig c = oracle::small_config();
    c.encoder_blocks = 1;
    c.bottleneck_blocks = 0;
    c.decoder_blocks = 1;
    const ToyVDM m = init_model(c);
    REQUIRE(m.layer_count() == 4);
    EditConfig cfg;
    cfg.probe_stats = fabricated({0.1, 0.9, 0.4, 0.7});
    const EditResult r = edit_generated(m, "a cat", "a tiger", 1, make_schedule(3), cfg);
    CHECK(r.layers == std::vector<int>{0, 2});
    CHECK(r.log.layers(HookAction::inject) == std::vector<int>{0, 2});
    // Two branches per step, two layers each.
    CHECK(r.log.count(HookAction::inject) == 3 * 2 * 2);
    for (const auto& e : r.log.events) CHECK((e.branch == "cA" || e.branch == "uA"));
}

TEST_CASE("layer policies") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule s = make_schedule(3);
    EditConfig tf;
    tf.layer_policy = LayerPolicy::tokenflow;
    const EditResult a = edit_generated(m, "a cat", "a tiger", 1, s, tf);
    CHECK(a.layers == tokenflow_layers(m));
    for (int l : a.layers) CHECK(m.layers[static_cast<std::size_t>(l)].stage == Stage::decoder);

    EditConfig en;
    const EditResult b = edit_generated(m, "a cat", "a tiger", 1, s, en);
    CHECK(b.layers == oracle::bottom_fraction(b.probe, 0.5));
    CHECK(b.layers != a.layers);

    EditConfig ex;
    ex.layer_policy = LayerPolicy::explicit_set;
    CHECK_THROWS_AS(edit_generated(m, "a cat", "a tiger", 1, s, ex), DomainError);
    ex.layers = {3};
    CHECK(edit_generated(m, "a cat", "a tiger", 1, s, ex).log.layers(HookAction::inject) == std::vector<int>{3});

    CHECK_THROWS_AS(parse_inject_kind("p2p"), ConfigError);
    CHECK(parse_inject_kind("kv") == InjectKind::kv);
    CHECK(parse_layer_policy("tokenflow") == LayerPolicy::tokenflow);
    CHECK(parse_probe_policy("mean") == ProbePolicy::mean_over_steps);
}

TEST_CASE("fewer layers are injected as rho shrinks") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule s = make_schedule(2);
    std::size_t prev = SIZE_MAX;
    for (double rho : {1.0, 0.5, 0.25}) {
        EditConfig cfg;
        cfg.rho = rho;
        const EditResult r = edit_generated(m, "a cat", "a tiger", 2, s, cfg);
        const std::size_t n = r.log.count(HookAction::inject);
        CHECK(n < prev);
        CHECK(r.layers.size() == static_cast<std::size_t>(rho * static_cast<double>(m.layer_count())));
        prev = n;
    }
}

TEST_CASE("injection leaves earlier layers untouched") {
    const ToyVDM m = init_model(oracle::small_config());
    const std::size_t d = m.config.channels;
    const Tensor x = initial_noise(m.config, 9);
    const Condition src = embed_prompt("a cat", d), dst = embed_prompt("a tiger", d);

    Registry rec = m.make_registry();
    rec.record_all();
    ForwardHooks h;
    h.registry = &rec;
    auto store = std::make_shared<RecordStore>();
    for (auto& r : predict_noise(m, {x, 1000}, src, h).records) store->put(std::move(r));
    const auto plain = predict_noise(m, {x, 1000}, dst, h).records;

    const int first = 4;
    Registry inj = m.make_registry();
    inj.record_all();
    for (int l = first; l < static_cast<int>(m.layer_count()); l += 2) inj.inject(l, store);
    h.registry = &inj;
    const auto edited = predict_noise(m, {x, 1000}, dst, h).records;
    REQUIRE(edited.size() == plain.size());
    for (std::size_t i = 0; i < plain.size(); ++i) {
        const int l = plain[i].layer_index;
        if (l < first) CHECK(edited[i].maps == plain[i].maps);
        if (l == first) CHECK(edited[i].maps == store->find("cA", 1000, l)->maps);
    }
}

TEST_CASE("enhance picks the maximum entropy layer") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule s = make_schedule(3);
    GuidanceSpec g;
    g.strategy = Strategy::eq5;
    g.combo = Combo::U_minus_I;
    HookLog log;
    const EnhanceResult r = enhance(m, "a bird", 42, s, g, ProbePolicy::first_step, &log);
    CHECK(r.layer == oracle::argmax(r.probe));
    CHECK(log.layers(HookAction::replace) == std::vector<int>{r.layer});
    g.lambda = 0.0;
    CHECK(enhance(m, "a bird", 42, s, g).x0 == sample(m, "a bird", "", 42, s, GuidanceSpec{}).x0);
}

TEST_CASE("probe statistics agree with the recorded maps") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule s = make_schedule(3);
    const auto stats = probe_entropy(m, "a fish", 3, s, ProbePolicy::first_step);
    REQUIRE(stats.size() == m.layer_count());
    SamplePlan plan;
    plan.record = RecordPolicy::first_step;
    const auto recs = sample(m, "a fish", "", 3, s, GuidanceSpec{}, plan).records;
    for (const auto& r : recs) {
        if (r.branch != "cA") continue;
        const std::size_t n = r.n_tokens, units = r.blocks * r.heads;
        double h = 0.0, e = 0.0;
        for (std::size_t u = 0; u < units; ++u) {
            h += oracle::entropy(r.maps.data().data() + u * n * n, n * n);
            e += oracle::energy(r.maps.data().data() + u * n * n, n * n);
        }
        h /= static_cast<double>(units);
        e /= static_cast<double>(units);
        const auto& st = stats[static_cast<std::size_t>(r.layer_index)];
        CHECK(st.entropy == doctest::Approx(h).epsilon(1e-12));
        CHECK(st.energy_map == doctest::Approx(e).epsilon(1e-12));
        CHECK(st.entropy_pct == doctest::Approx(h / (static_cast<double>(n) * std::log(static_cast<double>(n)))));
        CHECK(st.timestep == 1000);
    }
    const auto mean = probe_entropy(m, "a fish", 3, s, ProbePolicy::mean_over_steps);
    REQUIRE(mean.size() == m.layer_count());
    for (const auto& st : mean) {
        CHECK(st.timestep == -1);
        CHECK(st.entropy_pct >= 0.0);
        CHECK(st.entropy_pct <= 1.0 + 1e-12);
    }
}

TEST_CASE("real video edit with the same prompt is the identity") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule s = make_schedule(4);
    SeededRng r(12);
    const Tensor x0 = gaussian(r, m.config.latent_dims());
    EditConfig cfg;
    cfg.rho = 1.0;
    const EditResult e = edit_real(m, x0, "a lake", "a lake", s, cfg);
    CHECK(e.dst_video == e.src_video);
    CHECK_THROWS_AS(edit_real(m, x0, "", "a lake", s, cfg), DomainError);
}

TEST_CASE("edit manifest") {
    const ToyVDM m = init_model(oracle::small_config());
    const NoiseSchedule s = make_schedule(2);
    EditConfig cfg;
    cfg.probe_stats = fabricated(std::vector<double>(m.layer_count(), 0.5));
    const EditResult r = edit_generated(m, "a cat", "a tiger", 8, s, cfg);
    const auto path = std::filesystem::temp_directory_path() / "ieadapt_manifest_test" / "edit_manifest.txt";
    write_edit_manifest(path, r, cfg, "a cat", "a tiger", 8, s, "generated");
    const auto kv = read_kv(path);
    CHECK(kv.at("source") == "generated");
    CHECK(kv.at("seed") == "8");
    CHECK(kv.at("src_prompt") == "a cat");
    CHECK(kv.at("dst_prompt") == "a tiger");
    CHECK(kv.at("rho") == "0.5");
    CHECK(kv.at("inject") == "map");
    CHECK(kv.at("layers") == "0,1,2,3,4");
    CHECK(kv.at("schedule.steps") == "1000,500");
    std::filesystem::remove_all(path.parent_path());
}
