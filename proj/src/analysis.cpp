#include <multisim/analysis.hpp>

#include <multisim/errors.hpp>
#include <multisim/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace multisim::analysis {

std::size_t FeatureMap::failing_cells() const noexcept
{
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& kv) { return kv.second.failing; }));
}

long curvature_bucket(double curvature) noexcept
{
    return static_cast<long>(std::floor((curvature + curvature_half_width) / curvature_step));
}

FeatureMap build_map(std::vector<MapTest> tests)
{
    FeatureMap map;
    map.tests = std::move(tests);
    for (std::size_t i = 0; i < map.tests.size(); ++i) {
        const auto& t = map.tests[i];
        if (!std::isfinite(t.features.curvature)) {
            continue;
        }
        const CellKey key{curvature_bucket(t.features.curvature), t.features.turn_count};
        auto [it, inserted] = map.cells.try_emplace(key);
        Cell& cell = it->second;
        if (inserted || t.fitness < cell.worst_fitness) {
            cell.worst_fitness = t.fitness;
        }
        cell.failing = cell.failing || t.failed;
        cell.members.push_back(i);
    }
    return map;
}

namespace {

MapTest place(const road::RoadGenotype& genotype, std::size_t index, double fitness, bool failed, const road::RoadConfig& cfg)
{
    return {index, genotype, road::features(road::encode(genotype, cfg)), fitness, failed};
}

double mildest(const search::TestRecord& t)
{
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& e : t.evaluations) {
        best = std::max(best, e.fitness);
    }
    return best;
}

} // namespace

std::vector<MapTest> map_tests(const search::CampaignResult& campaign, const road::RoadConfig& cfg)
{
    std::vector<MapTest> out;
    out.reserve(campaign.tests.size());
    for (const auto& t : campaign.tests) {
        out.push_back(place(t.genotype, t.index, mildest(t), t.all_failed(), cfg));
    }
    return out;
}

std::vector<MapTest> map_tests(const baselines::DssResult& dss, const road::RoadConfig& cfg)
{
    const std::size_t a_total = dss.run1.evaluations;
    std::vector<MapTest> out;
    out.reserve(dss.run1.tests.size() + dss.run2.tests.size());
    for (const auto& t : dss.run1.tests) {
        out.push_back(place(t.genotype, t.index, mildest(t), false, cfg));
    }
    for (const auto& t : dss.run2.tests) {
        out.push_back(place(t.genotype, a_total + t.index, mildest(t), false, cfg));
    }
    for (const auto c : dss.critical) {
        const auto& m = dss.migrations[c];
        const std::size_t pos = m.origin == baselines::Origin::run1 ? m.test : dss.run1.tests.size() + m.test;
        out[pos].failed = true;
        out[pos].evaluation_index = m.global_index;
        out[pos].fitness = std::max(out[pos].fitness, m.evaluation.fitness);
    }
    return out;
}

std::vector<std::size_t> select_for_validation(const FeatureMap& map, std::size_t per_cell, Rng& rng, const road::RoadConfig& cfg)
{
    std::vector<std::size_t> out;
    for (const auto& [key, cell] : map.cells) {
        if (!cell.failing) {
            continue;
        }
        std::vector<std::size_t> pool;
        std::vector<std::vector<double>> seen;
        for (const auto m : cell.members) {
            if (!map.tests[m].failed) {
                continue;
            }
            auto v = road::normalized(map.tests[m].genotype, cfg);
            const bool duplicate = std::any_of(seen.begin(), seen.end(), [&](const auto& s) {
                double d2 = 0.0;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    d2 += (v[i] - s[i]) * (v[i] - s[i]);
                }
                return std::sqrt(d2) < 1e-9;
            });
            if (!duplicate) {
                seen.push_back(std::move(v));
                pool.push_back(m);
            }
        }
        const std::size_t take = std::min(per_cell, pool.size());
        for (std::size_t k = 0; k < take; ++k) {
            std::swap(pool[k], pool[k + rng.index(pool.size() - k)]);
            out.push_back(pool[k]);
        }
    }
    return out;
}

std::vector<sim::BackendSpec> held_out_backends(const std::vector<sim::BackendSpec>& all, const std::vector<std::string>& search_ids)
{
    std::vector<sim::BackendSpec> out;
    for (const auto& b : all) {
        if (std::find(search_ids.begin(), search_ids.end(), b.id) == search_ids.end()) {
            out.push_back(b);
        }
    }
    return out;
}

namespace {

std::uint64_t id_hash(const std::string& id)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : id) {
        h = (h ^ c) * 1099511628211ULL;
    }
    return h;
}

} // namespace

ValidationReport validate(const std::vector<MapTest>& failures, const ValidationConfig& cfg)
{
    for (const auto& b : cfg.held_out) {
        if (std::find(cfg.search_backends.begin(), cfg.search_backends.end(), b.id) != cfg.search_backends.end()) {
            throw BackendOverlap("backend '" + b.id + "' was used by the search and cannot validate it");
        }
    }
    if (cfg.n_runs < 1) {
        throw Error("validation needs at least one run per backend");
    }
    if (cfg.held_out.empty()) {
        throw Error("validation needs at least one held-out backend");
    }

    ValidationReport report;
    report.n_runs = cfg.n_runs;
    report.threshold = cfg.threshold;
    for (const auto& b : cfg.held_out) {
        report.held_out.push_back(b.id);
    }
    for (const auto& f : failures) {
        FailureReport fr;
        fr.evaluation_index = f.evaluation_index;
        fr.genotype = f.genotype;
        fr.cell = {curvature_bucket(f.features.curvature), f.features.turn_count};
        for (const auto& b : cfg.held_out) {
            BackendOutcome o;
            o.backend_id = b.id;
            o.verdicts.assign(cfg.n_runs, false);
            o.max_abs_xte.assign(cfg.n_runs, 0.0);
            for (std::size_t r = 0; r < cfg.n_runs; ++r) {
                o.run_seeds.push_back(derive_seed({cfg.seed, 0x56414CULL, f.evaluation_index, id_hash(b.id), r}));
            }
            fr.outcomes.push_back(std::move(o));
        }
        report.failures.push_back(std::move(fr));
    }

    const std::size_t per_failure = cfg.held_out.size() * cfg.n_runs;
    parallel_for(report.failures.size() * per_failure, cfg.jobs, [&](std::size_t task) {
        auto& fr = report.failures[task / per_failure];
        const std::size_t b = (task % per_failure) / cfg.n_runs;
        const std::size_t r = task % cfg.n_runs;
        auto& o = fr.outcomes[b];
        const auto trace = sim::simulate(fr.genotype, cfg.held_out[b], o.run_seeds[r], cfg.road, cfg.controller);
        const auto e = sim::evaluate(trace, cfg.oracle_threshold);
        o.verdicts[r] = e.failed;
        o.max_abs_xte[r] = e.max_abs_xte;
    });

    judge(report);
    return report;
}

void judge(ValidationReport& report)
{
    report.n_valid = 0;
    for (auto& fr : report.failures) {
        fr.valid = !fr.outcomes.empty();
        for (auto& o : fr.outcomes) {
            const auto fails = std::count(o.verdicts.begin(), o.verdicts.end(), true);
            o.failure_rate = o.verdicts.empty() ? 0.0 : static_cast<double>(fails) / static_cast<double>(o.verdicts.size());
            fr.valid = fr.valid && o.failure_rate >= report.threshold - 1e-12;
        }
        report.n_valid += fr.valid ? 1 : 0;
    }
    report.valid_rate.reset();
    if (!report.failures.empty()) {
        report.valid_rate = static_cast<double>(report.n_valid) / static_cast<double>(report.failures.size());
    }
}

std::optional<double> first_valid_budget(const ValidationReport& report, std::size_t budget)
{
    std::optional<std::size_t> first;
    for (const auto& fr : report.failures) {
        if (fr.valid && (!first || fr.evaluation_index < *first)) {
            first = fr.evaluation_index;
        }
    }
    if (!first || budget == 0) {
        return std::nullopt;
    }
    return static_cast<double>(*first) / static_cast<double>(budget);
}

std::string map_csv(const FeatureMap& map)
{
    std::ostringstream os;
    os << "cell_curvature,turn_count,n_tests,worst_fitness,failing\n";
    os << std::setprecision(17);
    for (const auto& [key, cell] : map.cells) {
        os << std::fixed << std::setprecision(2) << key.curvature_center() << ',' << key.turn_count << ','
           << cell.members.size() << ',' << std::defaultfloat << std::setprecision(17) << cell.worst_fitness << ','
           << (cell.failing ? 1 : 0) << '\n';
    }
    return os.str();
}

namespace {

std::string heat_color(double fitness, double cutoff)
{
    const double t = std::clamp(-fitness / cutoff, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(255.0 * std::min(1.0, 2.0 * t)));
    const int g = static_cast<int>(std::lround(200.0 * std::min(1.0, 2.0 * (1.0 - t))));
    std::ostringstream os;
    os << "rgb(" << r << ',' << g << ",0)";
    return os.str();
}

} // namespace

std::string map_svg(const FeatureMap& map, double cutoff)
{
    constexpr int cell_px = 28;
    constexpr int margin = 60;
    constexpr int bar_w = 18;

    long cmin = 0;
    long cmax = 0;
    int tmin = 0;
    int tmax = 0;
    if (!map.cells.empty()) {
        cmin = cmax = map.cells.begin()->first.curvature_index;
        tmin = tmax = map.cells.begin()->first.turn_count;
        for (const auto& [key, cell] : map.cells) {
            cmin = std::min(cmin, key.curvature_index);
            cmax = std::max(cmax, key.curvature_index);
            tmin = std::min(tmin, key.turn_count);
            tmax = std::max(tmax, key.turn_count);
        }
    }
    const int cols = static_cast<int>(cmax - cmin + 1);
    const int rows = tmax - tmin + 1;
    const int width = margin * 2 + cols * cell_px + 3 * bar_w;
    const int height = margin * 2 + rows * cell_px;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    for (int row = 0; row < rows; ++row) {
        for (int col = 0; col < cols; ++col) {
            const CellKey key{cmin + col, tmax - row};
            const auto it = map.cells.find(key);
            const std::string fill = it == map.cells.end() ? "white" : heat_color(it->second.worst_fitness, cutoff);
            os << "<rect x=\"" << margin + col * cell_px << "\" y=\"" << margin + row * cell_px << "\" width=\"" << cell_px
               << "\" height=\"" << cell_px << "\" fill=\"" << fill << "\" stroke=\"#999\"";
            if (it != map.cells.end() && it->second.failing) {
                os << " stroke-width=\"2\"";
            }
            os << "/>\n";
        }
    }
    os << std::fixed << std::setprecision(2);
    for (int col = 0; col < cols; ++col) {
        os << "<text x=\"" << margin + col * cell_px + cell_px / 2 << "\" y=\"" << margin + rows * cell_px + 14
           << "\" text-anchor=\"middle\">" << static_cast<double>(cmin + col) * curvature_step << "</text>\n";
    }
    for (int row = 0; row < rows; ++row) {
        os << "<text x=\"" << margin - 6 << "\" y=\"" << margin + row * cell_px + cell_px / 2 + 4 << "\" text-anchor=\"end\">"
           << tmax - row << "</text>\n";
    }
    os << "<text x=\"" << margin + cols * cell_px / 2 << "\" y=\"" << height - 16 << "\" text-anchor=\"middle\">curvature (1/m)</text>\n";
    os << "<text x=\"16\" y=\"" << margin + rows * cell_px / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << margin + rows * cell_px / 2 << ")\">turn count</text>\n";

    const int bar_x = margin + cols * cell_px + bar_w;
    const int bar_h = rows * cell_px;
    constexpr int steps = 20;
    for (int s = 0; s < steps; ++s) {
        const double f = -cutoff * (static_cast<double>(s) + 0.5) / steps;
        os << "<rect x=\"" << bar_x << "\" y=\"" << margin + s * bar_h / steps << "\" width=\"" << bar_w << "\" height=\""
           << bar_h / steps + 1 << "\" fill=\"" << heat_color(f, cutoff) << "\"/>\n";
    }
    os << "<text x=\"" << bar_x + bar_w + 4 << "\" y=\"" << margin + 8 << "\">0</text>\n";
    os << "<text x=\"" << bar_x + bar_w + 4 << "\" y=\"" << margin + bar_h << "\">" << -cutoff << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

} // namespace multisim::analysis
