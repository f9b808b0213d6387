#include "oilfield/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "oilfield/errors.hpp"
#include "oilfield/metrics.hpp"
#include "oilfield/parallel.hpp"

namespace oilfield {

void EvoConfig::validate() const {
    if (population_size < 2) throw ConfigError("evolution: population_size must be >= 2");
    if (generations < 0) throw ConfigError("evolution: generations must be >= 0");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0))
        throw ConfigError("evolution: mutation_rate must be in [0, 1]");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
        throw ConfigError("evolution: crossover_rate must be in [0, 1]");
    if (tournament_size < 1 || tournament_size > population_size)
        throw ConfigError("evolution: tournament_size must be in [1, population_size]");
    if (elitism_count < 1 || elitism_count >= population_size)
        throw ConfigError("evolution: elitism_count must be in [1, population_size)");
    if (max_nodes < 3) throw ConfigError("evolution: max_nodes must be >= 3");
    if (lag_min < 1 || lag_max < lag_min) throw ConfigError("evolution: bad lag range");
    if (crm_window_lens.empty()) throw ConfigError("evolution: crm_window_lens is empty");
}

namespace {

// The search works on a canonical decomposition of the pipeline family the
// operators generate: an optional dataset chain (lag [+ standardize]), an
// optional CRM block, and an output stage that is either the CRM itself or
// one-or-more learners (ensembled when more than one).
struct Chromosome {
    std::optional<LagSpec> lag;
    bool standardized = false;
    bool has_crm = false;
    std::vector<std::int64_t> crm_window_lens;
    FitConfig crm_fit;
    std::int64_t crm_predict_len = 0;
    bool crm_only = false;
    std::vector<LearnerSpec> learners;
    EnsembleMode ensemble_mode = EnsembleMode::Mean;
};

std::optional<Chromosome> decompose(const Pipeline& p) {
    const PipelineNode* output = p.find(p.output_node);
    if (!output) return std::nullopt;

    Chromosome ch;
    std::vector<const PipelineNode*> learner_nodes;

    if (output->kind == NodeKind::CrmNode) {
        ch.crm_only = true;
        ch.has_crm = true;
        ch.crm_window_lens = output->crm_window_lens;
        ch.crm_fit = output->crm_fit;
        ch.crm_predict_len = output->crm_predict_len;
        return ch;
    }
    if (output->kind == NodeKind::Learner) {
        learner_nodes.push_back(output);
    } else if (output->kind == NodeKind::Ensemble) {
        ch.ensemble_mode = output->ensemble;
        for (const auto& in : output->inputs) {
            const PipelineNode* n = p.find(in);
            if (!n || n->kind != NodeKind::Learner) return std::nullopt;
            learner_nodes.push_back(n);
        }
    } else {
        return std::nullopt;
    }

    const PipelineNode* crm = nullptr;
    const PipelineNode* dataset_head = nullptr;
    for (const auto* ln : learner_nodes) {
        ch.learners.push_back(ln->learner);
        if (ln->inputs.empty()) return std::nullopt;
        const PipelineNode* ds = p.find(ln->inputs[0]);
        if (dataset_head && ds != dataset_head) return std::nullopt; // shared chain only
        dataset_head = ds;
        for (std::size_t s = 1; s < ln->inputs.size(); ++s) {
            const PipelineNode* e = p.find(ln->inputs[s]);
            if (!e || e->kind != NodeKind::CrmNode) return std::nullopt;
            if (crm && e != crm) return std::nullopt;
            crm = e;
        }
    }
    if (!dataset_head) return std::nullopt;

    const PipelineNode* lag_node = dataset_head;
    if (dataset_head->kind == NodeKind::Standardize) {
        ch.standardized = true;
        lag_node = p.find(dataset_head->inputs[0]);
    }
    if (!lag_node || lag_node->kind != NodeKind::LagTransform) return std::nullopt;
    ch.lag = lag_node->lag;

    if (crm) {
        ch.has_crm = true;
        ch.crm_window_lens = crm->crm_window_lens;
        ch.crm_fit = crm->crm_fit;
        ch.crm_predict_len = crm->crm_predict_len;
    }
    return ch;
}

Pipeline compose(const Chromosome& ch, const std::string& target_well, std::int64_t horizon) {
    Pipeline p;
    p.target_well = target_well;
    p.horizon_days = horizon;
    p.nodes.push_back({.id = "source", .kind = NodeKind::HistorySource});

    std::string crm_id;
    if (ch.has_crm) {
        PipelineNode crm{.id = "crm", .kind = NodeKind::CrmNode, .inputs = {"source"}};
        crm.crm_window_lens = ch.crm_window_lens;
        crm.crm_fit = ch.crm_fit;
        crm.crm_predict_len = ch.crm_predict_len;
        p.nodes.push_back(std::move(crm));
        crm_id = "crm";
    }
    if (ch.crm_only) {
        p.output_node = "crm";
        return p;
    }

    PipelineNode lagn{.id = "lags", .kind = NodeKind::LagTransform, .inputs = {"source"}};
    lagn.lag = ch.lag.value_or(LagSpec{});
    lagn.lag.horizon_f = static_cast<int>(horizon);
    p.nodes.push_back(std::move(lagn));
    std::string tail = "lags";
    if (ch.standardized) {
        p.nodes.push_back({.id = "scale", .kind = NodeKind::Standardize, .inputs = {"lags"}});
        tail = "scale";
    }

    std::vector<std::string> model_ids;
    for (std::size_t m = 0; m < ch.learners.size(); ++m) {
        PipelineNode learn{.id = ch.learners.size() == 1 ? "model" : "model_" + std::to_string(m),
                           .kind = NodeKind::Learner,
                           .inputs = {tail}};
        if (ch.has_crm) learn.inputs.push_back(crm_id);
        learn.learner = ch.learners[m];
        model_ids.push_back(learn.id);
        p.nodes.push_back(std::move(learn));
    }
    if (model_ids.size() == 1) {
        p.output_node = model_ids.front();
    } else {
        PipelineNode blend{.id = "blend", .kind = NodeKind::Ensemble, .inputs = model_ids};
        blend.ensemble = ch.ensemble_mode;
        p.nodes.push_back(std::move(blend));
        p.output_node = "blend";
    }
    return p;
}

LearnerSpec random_learner(const EvoConfig& cfg, Rng& rng) {
    static constexpr LearnerKind menu[] = {LearnerKind::Linear, LearnerKind::Ridge,
                                           LearnerKind::KNearest, LearnerKind::DecisionTree,
                                           LearnerKind::RandomForest};
    LearnerSpec spec;
    spec.kind = menu[rng.uniform_int(0, 4)];
    spec.seed = static_cast<std::uint64_t>(rng.uniform_int(0, std::numeric_limits<std::int64_t>::max()));
    switch (spec.kind) {
        case LearnerKind::Ridge:
            spec.lambda = rng.log_uniform(cfg.ridge_lambda_min, cfg.ridge_lambda_max);
            break;
        case LearnerKind::KNearest:
            spec.k = static_cast<int>(rng.uniform_int(cfg.k_min, cfg.k_max));
            break;
        case LearnerKind::DecisionTree:
            spec.max_depth = static_cast<int>(rng.uniform_int(cfg.depth_min, cfg.depth_max));
            break;
        case LearnerKind::RandomForest:
            spec.n_trees = static_cast<int>(rng.uniform_int(cfg.trees_min, cfg.trees_max));
            spec.max_depth = static_cast<int>(rng.uniform_int(cfg.depth_min, cfg.depth_max));
            spec.feature_subsample_fraction = rng.uniform(1.0 / 3.0, 1.0);
            break;
        default: break;
    }
    return spec;
}

LagSpec random_lag(const EvoConfig& cfg, Rng& rng, std::int64_t horizon) {
    LagSpec lag;
    lag.window_w = static_cast<int>(rng.uniform_int(cfg.lag_min, cfg.lag_max));
    lag.horizon_f = static_cast<int>(horizon);
    return lag;
}

} // namespace

std::vector<Individual> init_population(const EvoConfig& config, const std::string& target_well,
                                        std::int64_t horizon) {
    config.validate();
    std::vector<Individual> population;
    population.reserve(static_cast<std::size_t>(config.population_size));
    const Rng master(config.seed);

    for (int i = 0; i < config.population_size; ++i) {
        Rng rng = master.fork(static_cast<std::uint64_t>(i));
        Chromosome ch;
        switch (i % 3) {
            case 0: // hybrid
                ch.lag = random_lag(config, rng, horizon);
                ch.standardized = true;
                ch.has_crm = true;
                ch.learners = {random_learner(config, rng)};
                break;
            case 1: // ML-only
                ch.lag = random_lag(config, rng, horizon);
                ch.standardized = rng.bernoulli(0.5);
                ch.learners = {random_learner(config, rng)};
                break;
            default: // CRM-only
                ch.has_crm = true;
                ch.crm_only = true;
                break;
        }
        if (ch.has_crm) {
            ch.crm_window_lens = config.crm_window_lens;
            ch.crm_fit = config.crm_fit;
        }
        Individual ind;
        ind.pipeline = compose(ch, target_well, horizon);
        ind.id = "init_" + std::to_string(i);
        population.push_back(std::move(ind));
    }
    return population;
}

Pipeline mutate(const Pipeline& pipeline, const EvoConfig& config, Rng& rng) {
    if (!rng.bernoulli(config.mutation_rate)) return pipeline;

    const auto base = decompose(pipeline);
    if (!base) return pipeline; // non-canonical shapes pass through untouched

    enum Op { ReplaceLearner, PerturbHyper, ChangeLag, AddEnsemble, DropOptional };

    for (int attempt = 0; attempt < 8; ++attempt) {
        std::vector<Op> applicable;
        if (!base->crm_only) {
            applicable.push_back(ReplaceLearner);
            applicable.push_back(PerturbHyper);
            applicable.push_back(ChangeLag);
            if (base->learners.size() == 1) applicable.push_back(AddEnsemble);
        }
        if (!base->crm_only && (base->standardized || base->has_crm || base->learners.size() > 1))
            applicable.push_back(DropOptional);
        if (applicable.empty()) return pipeline;

        Chromosome ch = *base;
        const Op op = applicable[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(applicable.size()) - 1))];
        switch (op) {
            case ReplaceLearner: {
                const auto slot = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(ch.learners.size()) - 1));
                const LearnerKind old = ch.learners[slot].kind;
                for (int tries = 0; tries < 8; ++tries) {
                    ch.learners[slot] = random_learner(config, rng);
                    if (ch.learners[slot].kind != old) break;
                }
                break;
            }
            case PerturbHyper: {
                const auto slot = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(ch.learners.size()) - 1));
                LearnerSpec& s = ch.learners[slot];
                switch (s.kind) {
                    case LearnerKind::Ridge:
                        s.lambda = rng.log_uniform(config.ridge_lambda_min, config.ridge_lambda_max);
                        break;
                    case LearnerKind::KNearest:
                        s.k = static_cast<int>(rng.uniform_int(config.k_min, config.k_max));
                        break;
                    case LearnerKind::DecisionTree:
                        s.max_depth = static_cast<int>(rng.uniform_int(config.depth_min, config.depth_max));
                        break;
                    case LearnerKind::RandomForest:
                        if (rng.bernoulli(0.5))
                            s.n_trees = static_cast<int>(rng.uniform_int(config.trees_min, config.trees_max));
                        else
                            s.max_depth = static_cast<int>(rng.uniform_int(config.depth_min, config.depth_max));
                        break;
                    default:
                        s.seed = static_cast<std::uint64_t>(
                            rng.uniform_int(0, std::numeric_limits<std::int64_t>::max()));
                        break;
                }
                break;
            }
            case ChangeLag:
                ch.lag = random_lag(config, rng, pipeline.horizon_days);
                break;
            case AddEnsemble:
                ch.learners.push_back(random_learner(config, rng));
                ch.ensemble_mode = EnsembleMode::Mean;
                break;
            case DropOptional: {
                std::vector<int> options;
                if (ch.standardized) options.push_back(0);
                if (ch.has_crm) options.push_back(1);
                if (ch.learners.size() > 1) options.push_back(2);
                const int pick = options[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(options.size()) - 1))];
                if (pick == 0) ch.standardized = false;
                else if (pick == 1) ch.has_crm = false;
                else ch.learners.pop_back();
                break;
            }
        }

        Pipeline candidate = compose(ch, pipeline.target_well, pipeline.horizon_days);
        if (static_cast<int>(candidate.nodes.size()) <= config.max_nodes &&
            validate(candidate).empty())
            return candidate;
    }
    return pipeline;
}

Pipeline crossover(const Pipeline& a, const Pipeline& b, Rng& rng) {
    if (a.target_well != b.target_well || a.horizon_days != b.horizon_days)
        throw IncompatibleParents("parents differ in target well or horizon");

    const auto ca = decompose(a);
    const auto cb = decompose(b);
    if (!ca || !cb) return a;

    const bool a_donates_preprocessing = rng.bernoulli(0.5);
    const Chromosome& pre = a_donates_preprocessing ? *ca : *cb;
    const Chromosome& out = a_donates_preprocessing ? *cb : *ca;

    Chromosome child;
    // Preprocessing stages come from one parent...
    child.lag = pre.lag ? pre.lag : out.lag;
    child.standardized = pre.lag ? pre.standardized : out.standardized;
    child.has_crm = pre.has_crm;
    if (pre.has_crm) {
        child.crm_window_lens = pre.crm_window_lens;
        child.crm_fit = pre.crm_fit;
        child.crm_predict_len = pre.crm_predict_len;
    }
    // ...the output stage from the other.
    if (out.crm_only) {
        child.crm_only = true;
        child.has_crm = true;
        if (!pre.has_crm) {
            child.crm_window_lens = out.crm_window_lens;
            child.crm_fit = out.crm_fit;
            child.crm_predict_len = out.crm_predict_len;
        }
        child.learners.clear();
    } else {
        child.crm_only = false;
        child.learners = out.learners;
        child.ensemble_mode = out.ensemble_mode;
        if (!child.lag) child.lag = out.lag;
    }
    return compose(child, a.target_well, a.horizon_days);
}

std::vector<Individual> select(const std::vector<Individual>& population, const EvoConfig& config,
                               Rng& rng) {
    for (const auto& ind : population)
        if (!ind.fitness) throw MissingFitness();

    const int n_parents = config.population_size - config.elitism_count;
    std::vector<Individual> parents;
    parents.reserve(static_cast<std::size_t>(n_parents));
    for (int s = 0; s < n_parents; ++s) {
        std::size_t best = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(population.size()) - 1));
        for (int t = 1; t < config.tournament_size; ++t) {
            const auto candidate = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(population.size()) - 1));
            if (*population[candidate].fitness < *population[best].fitness ||
                (*population[candidate].fitness == *population[best].fitness && candidate < best))
                best = candidate;
        }
        parents.push_back(population[best]);
    }
    return parents;
}

Pipeline regularize(const Pipeline& pipeline) {
    Pipeline p = pipeline;
    bool changed = true;
    while (changed) {
        changed = false;

        // Collapse ensembles with a single input.
        for (std::size_t i = 0; i < p.nodes.size(); ++i) {
            const PipelineNode& n = p.nodes[i];
            if (n.kind != NodeKind::Ensemble || n.inputs.size() != 1) continue;
            const std::string victim = n.id;
            const std::string replacement = n.inputs[0];
            p.nodes.erase(p.nodes.begin() + static_cast<std::ptrdiff_t>(i));
            for (auto& m : p.nodes)
                for (auto& in : m.inputs)
                    if (in == victim) in = replacement;
            if (p.output_node == victim) p.output_node = replacement;
            changed = true;
            break;
        }
        if (changed) continue;

        // Drop nodes that cannot reach the output.
        std::set<std::string> keep;
        std::vector<std::string> frontier{p.output_node};
        while (!frontier.empty()) {
            const std::string id = frontier.back();
            frontier.pop_back();
            if (!keep.insert(id).second) continue;
            if (const PipelineNode* n = p.find(id))
                for (const auto& in : n->inputs) frontier.push_back(in);
        }
        const auto before = p.nodes.size();
        std::erase_if(p.nodes, [&](const PipelineNode& n) { return !keep.contains(n.id); });
        changed = p.nodes.size() != before;
    }
    return p;
}

EvolveResult evolve(const EvoConfig& config, const ProductionHistory& train,
                    const std::string& target_well, std::int64_t horizon, EvalCache* cache) {
    config.validate();
    if (horizon < 1) throw ConfigError("evolve: horizon must be >= 1");
    const std::int64_t validation_len =
        config.validation_len > 0 ? config.validation_len : horizon;
    if (validation_len < horizon)
        throw ConfigError("evolve: validation_len must be >= the pipeline horizon");
    const auto len = static_cast<std::int64_t>(train.size());
    if (len < config.lag_min + horizon + validation_len)
        throw HistoryTooShort("evolve: history of " + std::to_string(len) +
                              " days cannot hold lag + horizon + validation tail");

    const WellSeries* target = train.find(target_well);
    if (!target || target->kind != WellKind::Producer)
        throw UnknownWell(target_well);

    // The validation tail is scored in consecutive horizon-length blocks
    // (one when validation_len == horizon); each block's forecast comes
    // from the pipeline refit on all data preceding that block, and the
    // fitness is the mean block RMSE.
    const std::int64_t n_blocks = validation_len / horizon;
    std::vector<ProductionHistory> fit_parts;
    std::vector<std::vector<double>> observed_blocks;
    for (std::int64_t b = 0; b < n_blocks; ++b) {
        const std::int64_t block_start = len - validation_len + b * horizon;
        fit_parts.push_back(split(train, len - block_start).first);
        std::vector<double> observed;
        observed.reserve(static_cast<std::size_t>(horizon));
        for (std::int64_t d = 0; d < horizon; ++d)
            observed.push_back(
                target->oil_rate[static_cast<std::size_t>(block_start + d)].value());
        observed_blocks.push_back(std::move(observed));
    }

    EvalCache local_cache;
    EvalCache* memo = cache ? cache : &local_cache;
    const Rng master(config.seed);
    std::vector<Individual> population = init_population(config, target_well, horizon);

    EvolveResult result;
    std::string last_error;

    for (int gen = 0;; ++gen) {
        // Evaluate everyone missing a fitness; failures get +inf.
        std::vector<std::string> errors(population.size());
        parallel_for(population.size(), [&](std::size_t i) {
            if (population[i].fitness) return;
            try {
                double total = 0.0;
                for (std::size_t b = 0; b < fit_parts.size(); ++b) {
                    const Eigen::VectorXd forecast =
                        evaluate(population[i].pipeline, fit_parts[b], horizon, memo);
                    const std::vector<double> predicted(forecast.data(),
                                                        forecast.data() + forecast.size());
                    total += rmse(predicted, observed_blocks[b]);
                }
                population[i].fitness = total / static_cast<double>(fit_parts.size());
            } catch (const std::exception& e) {
                population[i].fitness = std::numeric_limits<double>::infinity();
                errors[i] = e.what();
            }
        });
        for (const auto& e : errors)
            if (!e.empty()) last_error = e;

        std::size_t best = 0;
        double fitness_sum = 0.0;
        int finite = 0;
        for (std::size_t i = 0; i < population.size(); ++i) {
            if (*population[i].fitness < *population[best].fitness) best = i;
            if (std::isfinite(*population[i].fitness)) {
                fitness_sum += *population[i].fitness;
                ++finite;
            }
        }
        if (finite == 0)
            throw Error("evolve: every individual failed evaluation (last error: " + last_error +
                        ")");

        result.log.push_back({gen, *population[best].fitness,
                              fitness_sum / static_cast<double>(finite), population[best].id});
        if (gen == config.generations) {
            result.best = population[best];
            break;
        }

        // Elites survive unchanged; the rest are bred from tournament
        // winners. Every random draw comes from a generation/slot-keyed
        // sub-stream, so concurrency cannot reorder outcomes.
        std::vector<std::size_t> ranking(population.size());
        std::iota(ranking.begin(), ranking.end(), std::size_t{0});
        std::stable_sort(ranking.begin(), ranking.end(), [&](std::size_t x, std::size_t y) {
            return *population[x].fitness < *population[y].fitness;
        });

        std::vector<Individual> next;
        next.reserve(population.size());
        for (int e = 0; e < config.elitism_count; ++e)
            next.push_back(population[ranking[static_cast<std::size_t>(e)]]);

        Rng select_rng = master.fork(0x5e1ec700ull + static_cast<std::uint64_t>(gen));
        const std::vector<Individual> parents = select(population, config, select_rng);

        for (std::size_t s = 0; s < parents.size(); ++s) {
            Rng rng = master.fork((static_cast<std::uint64_t>(gen) + 1) * 1000003ull + s);
            const Individual& mate = parents[(s + 1) % parents.size()];
            Pipeline child = rng.bernoulli(config.crossover_rate)
                                 ? crossover(parents[s].pipeline, mate.pipeline, rng)
                                 : parents[s].pipeline;
            child = mutate(child, config, rng);
            child = regularize(child);

            Individual ind;
            ind.pipeline = std::move(child);
            ind.id = "g" + std::to_string(gen + 1) + "_c" + std::to_string(s);
            if (ind.pipeline == parents[s].pipeline) ind.fitness = parents[s].fitness;
            next.push_back(std::move(ind));
        }
        population = std::move(next);
    }
    return result;
}

} // namespace oilfield
