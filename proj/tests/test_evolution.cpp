#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oilfield/errors.hpp"
#include "oilfield/evolution.hpp"
#include "support/synthetic.hpp"

using namespace oilfield;
using oilfield::testsupport::make_synthetic_field;

namespace {

EvoConfig small_config(std::uint64_t seed = 1) {
    EvoConfig config;
    config.population_size = 6;
    config.generations = 3;
    config.tournament_size = 2;
    config.elitism_count = 1;
    config.seed = seed;
    config.lag_min = 5;
    config.lag_max = 25;
    config.trees_min = 5;
    config.trees_max = 25;
    config.k_max = 8;
    config.crm_window_lens = {70};
    config.crm_fit.restarts = 2;
    config.crm_fit.optimizer_max_iters = 40;
    return config;
}

ProductionHistory small_history(std::uint64_t seed = 13, std::int64_t days = 260) {
    testsupport::SyntheticSpec spec;
    spec.days = days;
    spec.seed = seed;
    spec.disturbance_amp = 15.0;
    spec.noise_std = 3.0;
    return make_synthetic_field(spec).history;
}

} // namespace

TEST_CASE("init population is valid, sized, and deterministic") {
    const auto config = small_config(7);
    const auto a = init_population(config, "P1", 10);
    const auto b = init_population(config, "P1", 10);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(validate(a[i].pipeline).empty());
        CHECK(a[i].pipeline == b[i].pipeline);
        CHECK(static_cast<int>(a[i].pipeline.nodes.size()) <= config.max_nodes);
    }
    // the mix covers hybrid, ML-only and CRM-only shapes
    const auto has_kind = [&](std::size_t i, NodeKind kind) {
        return std::any_of(a[i].pipeline.nodes.begin(), a[i].pipeline.nodes.end(),
                           [&](const PipelineNode& n) { return n.kind == kind; });
    };
    CHECK(has_kind(0, NodeKind::CrmNode));
    CHECK(has_kind(0, NodeKind::Learner));
    CHECK(has_kind(1, NodeKind::Learner));
    CHECK_FALSE(has_kind(1, NodeKind::CrmNode));
    CHECK(has_kind(2, NodeKind::CrmNode));
    CHECK_FALSE(has_kind(2, NodeKind::Learner));
}

TEST_CASE("init population stays valid over many draws") {
    auto config = small_config(17);
    config.population_size = 100;
    const auto population = init_population(config, "P1", 10);
    for (const auto& ind : population) {
        CHECK(validate(ind.pipeline).empty());
        CHECK(static_cast<int>(ind.pipeline.nodes.size()) <= config.max_nodes);
    }
}

TEST_CASE("mutation respects rate, closure, and determinism") {
    const auto config = small_config(23);
    const auto population = init_population(config, "P1", 10);
    const Pipeline& base = population[0].pipeline;

    SUBCASE("zero rate is the identity") {
        auto cfg = config;
        cfg.mutation_rate = 0.0;
        Rng rng(5);
        CHECK(mutate(base, cfg, rng) == base);
    }
    SUBCASE("mutants always validate") {
        auto cfg = config;
        cfg.mutation_rate = 1.0;
        Rng rng(6);
        Pipeline current = base;
        for (int step = 0; step < 50; ++step) {
            current = mutate(current, cfg, rng);
            CHECK(validate(current).empty());
            CHECK(static_cast<int>(current.nodes.size()) <= cfg.max_nodes);
        }
    }
    SUBCASE("equal seeds give equal mutants") {
        auto cfg = config;
        cfg.mutation_rate = 1.0;
        Rng r1(42), r2(42);
        CHECK(mutate(base, cfg, r1) == mutate(base, cfg, r2));
    }
}

TEST_CASE("crossover combines stages and guards preconditions") {
    const auto config = small_config(29);
    const auto population = init_population(config, "P1", 10);
    const Pipeline& hybrid = population[0].pipeline;
    const Pipeline& ml_only = population[1].pipeline;

    SUBCASE("self-cross is the identity") {
        Rng rng(1);
        CHECK(crossover(hybrid, hybrid, rng) == hybrid);
        CHECK(crossover(ml_only, ml_only, rng) == ml_only);
    }
    SUBCASE("hybrid x ml child has exactly one learner stage and validates") {
        Rng rng(2);
        for (int trial = 0; trial < 10; ++trial) {
            const Pipeline child = crossover(hybrid, ml_only, rng);
            CHECK(validate(child).empty());
            int learners = 0;
            for (const auto& n : child.nodes)
                if (n.kind == NodeKind::Learner) ++learners;
            CHECK(learners == 1);
        }
    }
    SUBCASE("differing horizons are incompatible") {
        Pipeline other = ml_only;
        other.horizon_days = 99;
        for (auto& n : other.nodes)
            if (n.kind == NodeKind::LagTransform) n.lag.horizon_f = 99;
        Rng rng(3);
        CHECK_THROWS_AS(crossover(hybrid, other, rng), IncompatibleParents);
    }
}

TEST_CASE("selection is a tournament over fitted individuals") {
    const auto config = small_config(31);
    auto population = init_population(config, "P1", 10);
    SUBCASE("missing fitness is an error") {
        Rng rng(4);
        CHECK_THROWS_AS(select(population, config, rng), MissingFitness);
    }
    for (std::size_t i = 0; i < population.size(); ++i)
        population[i].fitness = static_cast<double>(population.size() - i); // last is best

    SUBCASE("returns population minus elites") {
        Rng rng(5);
        const auto parents = select(population, config, rng);
        CHECK(parents.size() == population.size() - 1);
    }
    SUBCASE("full tournament always picks the global best") {
        auto cfg = config;
        cfg.tournament_size = cfg.population_size;
        Rng rng(6);
        const auto parents = select(population, cfg, rng);
        for (const auto& p : parents) CHECK(*p.fitness == 1.0);
    }
    SUBCASE("seeded selection is reproducible") {
        Rng r1(7), r2(7);
        const auto a = select(population, config, r1);
        const auto b = select(population, config, r2);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].pipeline == b[i].pipeline);
    }
}

TEST_CASE("regularize prunes dangling nodes and collapses ensembles") {
    const auto config = small_config(37);
    Pipeline p = init_population(config, "P1", 10)[1].pipeline; // ML-only

    SUBCASE("dangling node is removed") {
        PipelineNode dangling{.id = "orphan", .kind = NodeKind::Standardize,
                              .inputs = {p.nodes[1].id}};
        Pipeline with = p;
        with.nodes.push_back(dangling);
        const Pipeline cleaned = regularize(with);
        CHECK(cleaned.find("orphan") == nullptr);
        CHECK(cleaned.nodes.size() == p.nodes.size());
    }
    SUBCASE("minimal pipeline is unchanged") {
        CHECK(regularize(p) == p);
    }
    SUBCASE("single-input ensemble collapses and the op is idempotent") {
        Pipeline with = p;
        PipelineNode wrap{.id = "wrap", .kind = NodeKind::Ensemble, .inputs = {p.output_node}};
        with.nodes.push_back(wrap);
        with.output_node = "wrap";
        const Pipeline once = regularize(with);
        CHECK(once.find("wrap") == nullptr);
        CHECK(once.output_node == p.output_node);
        CHECK(regularize(once) == once);
    }
    SUBCASE("idempotent over random mutants") {
        auto cfg = config;
        cfg.mutation_rate = 1.0;
        Rng rng(8);
        Pipeline current = p;
        for (int step = 0; step < 100; ++step) {
            current = mutate(current, cfg, rng);
            const Pipeline once = regularize(current);
            CHECK(regularize(once) == once);
        }
    }
}

TEST_CASE("evolve with zero generations returns the best initial individual") {
    auto config = small_config(41);
    config.generations = 0;
    config.population_size = 4;
    const auto history = small_history(43);
    const EvolveResult result = evolve(config, history, "P1", 10);
    REQUIRE(result.log.size() == 1);
    CHECK(result.log.front().generation == 0);
    CHECK(result.best.fitness.has_value());
    CHECK(result.log.front().best_rmse == *result.best.fitness);
}

TEST_CASE("evolve logs non-increasing best fitness and is seed-deterministic") {
    auto config = small_config(47);
    config.generations = 3;
    config.population_size = 5;
    const auto history = small_history(47);

    const EvolveResult a = evolve(config, history, "P1", 10);
    REQUIRE(a.log.size() == 4);
    for (std::size_t g = 1; g < a.log.size(); ++g)
        CHECK(a.log[g].best_rmse <= a.log[g - 1].best_rmse + 1e-12);
    CHECK(a.log.back().best_rmse <= a.log.front().best_rmse);
    CHECK(validate(a.best.pipeline).empty());

    const EvolveResult b = evolve(config, history, "P1", 10);
    CHECK(a.best.pipeline == b.best.pipeline);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t g = 0; g < a.log.size(); ++g) {
        CHECK(a.log[g].best_rmse == b.log[g].best_rmse);
        CHECK(a.log[g].mean_rmse == b.log[g].mean_rmse);
        CHECK(a.log[g].best_pipeline_id == b.log[g].best_pipeline_id);
    }
}

TEST_CASE("evolve rejects a history too short for the split") {
    const auto config = small_config(49);
    const auto history = small_history(53, 20);
    CHECK_THROWS_AS(evolve(config, history, "P1", 10), HistoryTooShort);
}
