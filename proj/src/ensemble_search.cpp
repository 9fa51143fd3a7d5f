#include <multisim/ensemble_search.hpp>

#include <multisim/errors.hpp>
#include <multisim/parallel.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace multisim::search {

FilterDecision surrogate_filter_hook(const road::RoadGenotype& candidate, const DisagreementPredictor* model, double tau)
{
    if (model == nullptr) {
        throw ModelMissing("surrogate filter enabled without a model");
    }
    return model->predict_disagreement(candidate) > tau ? FilterDecision::discard : FilterDecision::execute;
}

std::vector<double> FitnessVector::objectives(bool seek_disagreement) const
{
    std::vector<double> out = per_sim;
    if (per_sim.size() >= 2) {
        out.push_back(seek_disagreement ? -v_d : v_d);
    }
    out.push_back(v_a);
    return out;
}

double mean_pairwise_distance(std::span<const double> values)
{
    const std::size_t j = values.size();
    if (j < 2) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < j; ++k) {
        for (std::size_t l = k + 1; l < j; ++l) {
            sum += std::abs(values[k] - values[l]);
        }
    }
    return sum / (static_cast<double>(j) * static_cast<double>(j - 1) / 2.0);
}

double Archive::distance_to(const road::RoadGenotype& genotype) const
{
    if (entries_.empty()) {
        return std::numeric_limits<double>::infinity();
    }
    const auto q = road::normalized(genotype, cfg_);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : entries_) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < q.size() && i < e.size(); ++i) {
            const double d = q[i] - e[i];
            d2 += d * d;
        }
        best = std::min(best, std::sqrt(d2));
    }
    return best;
}

bool Archive::add(const road::RoadGenotype& genotype)
{
    if (distance_to(genotype) > delta_) {
        entries_.push_back(road::normalized(genotype, cfg_));
        return true;
    }
    return false;
}

double distance_to_archive(const road::RoadGenotype& genotype, const Archive& archive)
{
    return archive.distance_to(genotype);
}

bool dominates(std::span<const double> a, std::span<const double> b) noexcept
{
    bool strictly = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) {
            return false;
        }
        if (a[i] < b[i]) {
            strictly = true;
        }
    }
    return strictly;
}

std::vector<std::vector<std::size_t>> nondominated_sort(const std::vector<std::vector<double>>& objectives)
{
    const std::size_t n = objectives.size();
    std::vector<std::vector<std::size_t>> dominated_by_me(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);

    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            if (dominates(objectives[p], objectives[q])) {
                dominated_by_me[p].push_back(q);
                ++domination_count[q];
            } else if (dominates(objectives[q], objectives[p])) {
                dominated_by_me[q].push_back(p);
                ++domination_count[p];
            }
        }
    }
    for (std::size_t p = 0; p < n; ++p) {
        if (domination_count[p] == 0) {
            fronts[0].push_back(p);
        }
    }
    for (std::size_t f = 0; f < fronts.size() && !fronts[f].empty(); ++f) {
        std::vector<std::size_t> next;
        for (auto p : fronts[f]) {
            for (auto q : dominated_by_me[p]) {
                if (--domination_count[q] == 0) {
                    next.push_back(q);
                }
            }
        }
        if (!next.empty()) {
            std::sort(next.begin(), next.end());
            fronts.push_back(std::move(next));
        }
    }
    if (fronts.back().empty()) {
        fronts.pop_back();
    }
    return fronts;
}

std::vector<double> crowding_distance(const std::vector<std::vector<double>>& objectives, std::span<const std::size_t> front)
{
    const std::size_t size = front.size();
    std::vector<double> dist(size, 0.0);
    if (size <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    const std::size_t m = objectives[front[0]].size();
    std::vector<std::size_t> order(size);
    for (std::size_t obj = 0; obj < m; ++obj) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return objectives[front[a]][obj] < objectives[front[b]][obj]; });
        // range over finite values only; the empty-archive sentinel is -inf
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (auto i : front) {
            const double v = objectives[i][obj];
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        const double range = hi - lo;
        if (!(range > 0.0) || !std::isfinite(range)) {
            continue;
        }
        for (std::size_t k = 1; k + 1 < size; ++k) {
            double diff = objectives[front[order[k + 1]]][obj] - objectives[front[order[k - 1]]][obj];
            if (!std::isfinite(diff)) {
                diff = range;
            }
            dist[order[k]] += diff / range;
        }
    }
    return dist;
}

std::vector<Individual> survive(std::vector<Individual> candidates, std::size_t target_size, bool seek_disagreement)
{
    std::vector<std::vector<double>> objs;
    objs.reserve(candidates.size());
    for (const auto& c : candidates) {
        if (!c.fitness) {
            throw Error("survival requires evaluated individuals");
        }
        objs.push_back(c.fitness->objectives(seek_disagreement));
    }
    const auto fronts = nondominated_sort(objs);

    std::vector<Individual> out;
    out.reserve(std::min(target_size, candidates.size()));
    for (std::size_t f = 0; f < fronts.size() && out.size() < target_size; ++f) {
        const auto& front = fronts[f];
        const auto crowd = crowding_distance(objs, front);
        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), 0);
        if (out.size() + front.size() > target_size) {
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return crowd[a] > crowd[b]; });
        }
        for (auto k : order) {
            if (out.size() == target_size) {
                break;
            }
            Individual ind = std::move(candidates[front[k]]);
            ind.rank = f;
            ind.crowding = crowd[k];
            out.push_back(std::move(ind));
        }
    }
    return out;
}

std::vector<Individual> repopulate(std::vector<Individual> population, Rng& rng, double ratio, const road::RoadConfig& cfg)
{
    std::vector<std::size_t> dominated;
    for (std::size_t i = 0; i < population.size(); ++i) {
        if (population[i].rank > 0) {
            dominated.push_back(i);
        }
    }
    if (ratio <= 0.0 || dominated.empty()) {
        return population;
    }
    std::stable_sort(dominated.begin(), dominated.end(), [&](std::size_t a, std::size_t b) {
        if (population[a].rank != population[b].rank) {
            return population[a].rank > population[b].rank;
        }
        return population[a].crowding < population[b].crowding;
    });
    const auto count = std::min(dominated.size(), static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(dominated.size()) - 1e-12)));
    for (std::size_t k = 0; k < count; ++k) {
        Individual fresh;
        fresh.genotype = road::sample_random(rng, cfg);
        population[dominated[k]] = std::move(fresh);
    }
    return population;
}

bool TestRecord::all_failed() const noexcept
{
    return !evaluations.empty() && std::all_of(evaluations.begin(), evaluations.end(), [](const auto& e) { return e.failed; });
}

bool TestRecord::any_failed() const noexcept
{
    return std::any_of(evaluations.begin(), evaluations.end(), [](const auto& e) { return e.failed; });
}

std::uint64_t rollout_seed(std::uint64_t campaign_seed, std::size_t index, std::size_t backend)
{
    return derive_seed({campaign_seed, 0x524F4C4CULL, index, backend});
}

BatchEvaluation evaluate_multisim(std::span<const road::RoadGenotype> batch, const SearchConfig& cfg, Archive& archive,
                                  std::size_t first_index)
{
    const std::size_t j = cfg.backends.size();
    BatchEvaluation out;
    out.evaluations.assign(batch.size(), std::vector<sim::Evaluation>(j));
    out.run_seeds.assign(batch.size(), std::vector<std::uint64_t>(j));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        for (std::size_t k = 0; k < j; ++k) {
            out.run_seeds[i][k] = rollout_seed(cfg.seed, first_index + i, k);
        }
    }

    parallel_for(batch.size() * j, cfg.jobs, [&](std::size_t task) {
        const std::size_t i = task / j;
        const std::size_t k = task % j;
        const auto trace = sim::simulate(batch[i], cfg.backends[k], out.run_seeds[i][k], cfg.road, cfg.controller);
        out.evaluations[i][k] = sim::evaluate(trace, cfg.oracle_threshold);
    });

    out.fitness.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        FitnessVector f;
        for (const auto& e : out.evaluations[i]) {
            f.per_sim.push_back(e.fitness);
        }
        f.v_d = mean_pairwise_distance(f.per_sim);
        f.v_a = -archive.distance_to(batch[i]);
        archive.add(batch[i]);
        out.fitness.push_back(std::move(f));
    }
    return out;
}

namespace {

class Campaign {
public:
    explicit Campaign(const SearchConfig& cfg)
        : cfg_(cfg), rng_(derive_seed({cfg.seed, 0x4741ULL})), archive_(cfg.archive_delta, cfg.road),
          start_(std::chrono::steady_clock::now())
    {
        result_.seed = cfg.seed;
        result_.budget = cfg.budget;
        for (const auto& b : cfg.backends) {
            result_.backend_ids.push_back(b.id);
        }
    }

    CampaignResult run()
    {
        std::vector<Individual> population;
        for (std::size_t i = 0; i < cfg_.population; ++i) {
            population.push_back({road::sample_random(rng_, cfg_.road), {}, {}, 0, 0.0});
        }
        evaluate(population, 0);
        population = survive(std::move(population), cfg_.population, cfg_.seek_disagreement);

        std::size_t generation = 0;
        while (budget_left() > 0) {
            ++generation;
            auto offspring = make_offspring(population, std::min(cfg_.population, budget_left()));
            evaluate(offspring, generation);

            std::vector<Individual> merged = std::move(population);
            merged.insert(merged.end(), std::make_move_iterator(offspring.begin()), std::make_move_iterator(offspring.end()));
            population = survive(std::move(merged), cfg_.population, cfg_.seek_disagreement);
            population = repopulate(std::move(population), rng_, cfg_.repopulation_ratio, cfg_.road);

            std::vector<Individual> fresh;
            std::vector<Individual> kept;
            for (auto& ind : population) {
                (ind.fitness ? kept : fresh).push_back(std::move(ind));
            }
            fresh.resize(std::min(fresh.size(), budget_left()));
            evaluate(fresh, generation);
            kept.insert(kept.end(), std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()));
            // re-rank so tournament selection sees current fronts
            population = survive(std::move(kept), cfg_.population, cfg_.seek_disagreement);
        }

        for (std::size_t i = 0; i < result_.tests.size(); ++i) {
            if (result_.tests[i].all_failed()) {
                result_.agreed_failures.push_back(i);
            }
        }
        for (const auto& ind : population) {
            if (ind.test_index) {
                result_.final_population.push_back(*ind.test_index);
            }
        }
        std::sort(result_.final_population.begin(), result_.final_population.end());
        result_.wall_time_s = elapsed();
        return std::move(result_);
    }

private:
    double elapsed() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    std::size_t budget_left() const
    {
        if (cfg_.time_budget_s && elapsed() >= *cfg_.time_budget_s) {
            return 0;
        }
        return cfg_.budget > result_.evaluations ? cfg_.budget - result_.evaluations : 0;
    }

    void apply_filter(std::vector<Individual>& batch)
    {
        if (!cfg_.filter_enabled) {
            return;
        }
        for (auto& ind : batch) {
            int redraws = 0;
            while (surrogate_filter_hook(ind.genotype, cfg_.filter_model, cfg_.filter_tau) == FilterDecision::discard &&
                   redraws < cfg_.filter_max_redraws) {
                ++result_.discarded;
                ++redraws;
                ind.genotype = road::sample_random(rng_, cfg_.road);
            }
        }
    }

    void evaluate(std::vector<Individual>& batch, std::size_t generation)
    {
        if (batch.empty()) {
            return;
        }
        apply_filter(batch);
        std::vector<road::RoadGenotype> genotypes;
        genotypes.reserve(batch.size());
        for (const auto& ind : batch) {
            genotypes.push_back(ind.genotype);
        }
        const std::size_t first = result_.evaluations + 1;
        auto evals = evaluate_multisim(genotypes, cfg_, archive_, first);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            TestRecord rec;
            rec.index = first + i;
            rec.generation = generation;
            rec.genotype = batch[i].genotype;
            rec.fitness = evals.fitness[i];
            rec.evaluations = std::move(evals.evaluations[i]);
            rec.run_seeds = std::move(evals.run_seeds[i]);
            batch[i].fitness = evals.fitness[i];
            batch[i].test_index = result_.tests.size();
            result_.tests.push_back(std::move(rec));
        }
        result_.evaluations += batch.size();
    }

    const Individual& tournament(const std::vector<Individual>& pop)
    {
        const auto& a = pop[rng_.index(pop.size())];
        const auto& b = pop[rng_.index(pop.size())];
        if (a.rank != b.rank) {
            return a.rank < b.rank ? a : b;
        }
        return b.crowding > a.crowding ? b : a;
    }

    std::vector<Individual> make_offspring(const std::vector<Individual>& pop, std::size_t count)
    {
        std::vector<Individual> out;
        out.reserve(count + 1);
        while (out.size() < count) {
            const auto& p1 = tournament(pop);
            const auto& p2 = tournament(pop);
            road::RoadGenotype c1 = p1.genotype;
            road::RoadGenotype c2 = p2.genotype;
            if (rng_.bernoulli(cfg_.crossover_rate)) {
                auto o = road::crossover(p1.genotype, p2.genotype, rng_, cfg_.road);
                c1 = std::move(o.first);
                c2 = std::move(o.second);
            }
            out.push_back({road::mutate(c1, rng_, cfg_.mutation_rate, cfg_.mutation_extent, cfg_.road), {}, {}, 0, 0.0});
            if (out.size() < count) {
                out.push_back({road::mutate(c2, rng_, cfg_.mutation_rate, cfg_.mutation_extent, cfg_.road), {}, {}, 0, 0.0});
            }
        }
        return out;
    }

    const SearchConfig& cfg_;
    Rng rng_;
    Archive archive_;
    CampaignResult result_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace

CampaignResult run_campaign(const SearchConfig& cfg)
{
    if (cfg.backends.empty()) {
        throw Error("campaign needs at least one backend");
    }
    for (const auto& b : cfg.backends) {
        b.check();
    }
    if (cfg.population < 2) {
        throw Error("population must be >= 2");
    }
    if (cfg.budget < cfg.population) {
        throw BudgetTooSmall("budget " + std::to_string(cfg.budget) + " is below one population evaluation (" +
                             std::to_string(cfg.population) + ")");
    }
    if (cfg.filter_enabled && cfg.filter_model == nullptr) {
        throw ModelMissing("surrogate filter enabled without a model");
    }
    return Campaign(cfg).run();
}

} // namespace multisim::search
