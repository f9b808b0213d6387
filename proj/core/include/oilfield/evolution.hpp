#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oilfield/csv.hpp"
#include "oilfield/pipeline.hpp"
#include "oilfield/rng.hpp"

namespace oilfield {

/// Search settings. The hyperparameter ranges below bound what mutation
/// and initialization may draw; override them to match the data scale.
struct EvoConfig {
    int population_size = 10;
    int generations = 10;
    double mutation_rate = 0.7;
    double crossover_rate = 0.7;
    int tournament_size = 3;
    int elitism_count = 1;
    std::int64_t validation_len = 0; // 0 => pipeline horizon
    std::uint64_t seed = 0;
    int max_nodes = 12;

    // Search ranges.
    int lag_min = 7;
    int lag_max = 120;
    double ridge_lambda_min = 1e-4;
    double ridge_lambda_max = 1e2;
    int k_min = 1;
    int k_max = 20;
    int depth_min = 2;
    int depth_max = 16;
    int trees_min = 10;
    int trees_max = 200;

    // CRM block shared by every generated pipeline that carries one.
    std::vector<std::int64_t> crm_window_lens = {60, 90};
    FitConfig crm_fit;

    void validate() const;
};

struct Individual {
    Pipeline pipeline;
    std::optional<double> fitness; // validation RMSE, lower is better
    std::string id;
};

/// population_size valid pipelines cycling through hybrid, ML-only and
/// CRM-only shapes with randomized lag windows and learner specs.
/// Deterministic given config.seed.
std::vector<Individual> init_population(const EvoConfig& config, const std::string& target_well,
                                        std::int64_t horizon);

/// Applies one structural or hyperparameter operator (uniformly chosen
/// among the applicable ones); with probability 1 - mutation_rate returns
/// the input unchanged. The result always validates: operators that would
/// break the graph are re-drawn a bounded number of times, then the input
/// is returned as-is.
Pipeline mutate(const Pipeline& pipeline, const EvoConfig& config, Rng& rng);

/// Child takes the preprocessing stages (lag/standardize/CRM) of one
/// parent and the learner/ensemble output stage of the other (donor chosen
/// from rng). Throws IncompatibleParents on differing target or horizon.
Pipeline crossover(const Pipeline& a, const Pipeline& b, Rng& rng);

/// Tournament selection: population_size - elitism_count parents, each the
/// best of tournament_size uniform draws. Throws MissingFitness if any
/// individual is unevaluated.
std::vector<Individual> select(const std::vector<Individual>& population, const EvoConfig& config,
                               Rng& rng);

/// Removes nodes whose output cannot reach output_node and collapses
/// single-input ensembles. Idempotent.
Pipeline regularize(const Pipeline& pipeline);

struct EvolveResult {
    Individual best;
    std::vector<EvolutionLogRow> log; // one row per generation, including generation 0
};

/// Full loop: evaluate -> select -> crossover/mutate -> regularize ->
/// elitist replacement, with fitness the RMSE of each pipeline's forecast
/// against the held-out validation tail of `train`. A tail spanning
/// several horizon blocks is scored per block (refit on the data before
/// each) and averaged. Individuals that fail evaluation get +inf fitness;
/// the run aborts only if an entire generation fails. Deterministic given
/// config.seed.
EvolveResult evolve(const EvoConfig& config, const ProductionHistory& train,
                    const std::string& target_well, std::int64_t horizon,
                    EvalCache* cache = nullptr);

} // namespace oilfield
