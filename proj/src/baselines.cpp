#include <multisim/baselines.hpp>

#include <multisim/errors.hpp>
#include <multisim/parallel.hpp>

namespace multisim::baselines {

search::CampaignResult run_ssim(const search::SearchConfig& cfg)
{
    if (cfg.backends.size() != 1) {
        throw Error("single-backend search needs exactly one backend, got " + std::to_string(cfg.backends.size()));
    }
    return search::run_campaign(cfg);
}

std::size_t dss_evaluation_index(Origin origin, std::size_t run1_total, std::size_t run2_total, std::size_t local_index)
{
    switch (origin) {
    case Origin::run1:
        return run1_total + run2_total + local_index;
    case Origin::run2:
        return run1_total + run2_total + run1_total + local_index;
    }
    throw UnknownOrigin("unknown migration origin");
}

Origin origin_from_code(int code)
{
    if (code == 1) {
        return Origin::run1;
    }
    if (code == 2) {
        return Origin::run2;
    }
    throw UnknownOrigin("unknown migration origin " + std::to_string(code));
}

int origin_code(Origin origin) noexcept
{
    return origin == Origin::run1 ? 1 : 2;
}

DssResult run_dss(const search::SearchConfig& cfg)
{
    if (cfg.backends.size() != 2) {
        throw Error("digital-siblings baseline needs exactly two backends, got " + std::to_string(cfg.backends.size()));
    }
    const std::size_t quarter = cfg.budget / 4;
    if (quarter < cfg.population) {
        throw BudgetTooSmall("budget " + std::to_string(cfg.budget) + " is below four population evaluations");
    }

    DssResult out;
    out.budget = cfg.budget;
    out.seed = cfg.seed;

    search::SearchConfig c1 = cfg;
    c1.backends = {cfg.backends[0]};
    c1.budget = quarter;
    c1.seed = derive_seed({cfg.seed, 1});
    search::SearchConfig c2 = c1;
    c2.backends = {cfg.backends[1]};
    c2.seed = derive_seed({cfg.seed, 2});
    out.run1 = run_ssim(c1);
    out.run2 = run_ssim(c2);

    const std::size_t a_total = out.run1.evaluations;
    const std::size_t b_total = out.run2.evaluations;
    const std::size_t room = cfg.budget > a_total + b_total ? cfg.budget - a_total - b_total : 0;

    for (const Origin origin : {Origin::run1, Origin::run2}) {
        const auto& run = origin == Origin::run1 ? out.run1 : out.run2;
        std::size_t local = 0;
        for (std::size_t t = 0; t < run.tests.size(); ++t) {
            if (!run.tests[t].all_failed()) {
                continue;
            }
            Migration m;
            m.origin = origin;
            m.test = t;
            m.migration_index = ++local;
            m.global_index = dss_evaluation_index(origin, a_total, b_total, m.migration_index);
            if (m.global_index > a_total + b_total + room) {
                break;
            }
            m.run_seed = derive_seed({cfg.seed, 0x4D494752ULL, static_cast<std::uint64_t>(origin_code(origin)), m.migration_index});
            out.migrations.push_back(m);
        }
    }

    parallel_for(out.migrations.size(), cfg.jobs, [&](std::size_t i) {
        auto& m = out.migrations[i];
        const auto& run = m.origin == Origin::run1 ? out.run1 : out.run2;
        const auto& target = m.origin == Origin::run1 ? cfg.backends[1] : cfg.backends[0];
        const auto trace = sim::simulate(run.tests[m.test].genotype, target, m.run_seed, cfg.road, cfg.controller);
        m.evaluation = sim::evaluate(trace, cfg.oracle_threshold);
    });

    for (std::size_t i = 0; i < out.migrations.size(); ++i) {
        if (out.migrations[i].evaluation.failed) {
            out.critical.push_back(i);
        }
    }
    return out;
}

} // namespace multisim::baselines
