// Writes the sample study used by demo/config.json: four latent subgroups
// observed through continuous, ordinal and categorical components, plus two
// outcome targets and a covariate file. A handful of cells are missing.
//
//   make_sample_data <out-dir> [n] [seed]

#include <cstdio>
#include <filesystem>
#include <string>

#include "metafuse/csv.hpp"
#include "metafuse/rng.hpp"
#include "metafuse/synthetic.hpp"

using namespace metafuse;

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <out-dir> [n] [seed]\n", argv[0]);
        return 1;
    }
    const std::filesystem::path out = argv[1];
    const std::size_t n = argc > 2 ? std::stoul(argv[2]) : 80;
    const std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 7;
    std::filesystem::create_directories(out);

    Rng rng(seed);
    csv::Table clinical{{"uid", "age", "bmi", "systolic"}, {}};
    csv::Table imaging{{"uid", "vol_frontal", "vol_parietal", "vol_temporal", "thickness"}, {}};
    csv::Table survey{{"uid", "sleep", "stress", "activity"}, {}};
    csv::Table history{{"uid", "smoker", "site"}, {}};
    csv::Table outcomes{{"uid", "outcome_score", "diagnosis"}, {}};
    csv::Table covariate{{"uid", "scanner_drift"}, {}};

    const double age_mu[] = {35, 50, 42, 60}, bmi_mu[] = {22, 30, 26, 27}, sys_mu[] = {115, 140, 125, 135};
    const double vol_mu[][3] = {{1.0, 0.2, 0.4}, {0.3, 1.1, 0.1}, {0.5, 0.5, 1.2}, {0.2, 0.3, 0.3}};
    const int ord_mu[][3] = {{4, 2, 4}, {2, 4, 2}, {3, 3, 3}, {1, 5, 1}};
    const char* sites[] = {"north", "south", "east"};

    for (std::size_t i = 0; i < n; ++i) {
        const auto g = i % 4;
        const auto uid = synthetic::uid_name(i);
        auto num = [&](double mu, double sd) { return csv::format_number(std::round(rng.normal(mu, sd) * 1000) / 1000); };
        auto ord = [&](int mu) {
            const int v = std::clamp(mu + static_cast<int>(std::lround(rng.normal(0, 0.6))), 1, 5);
            return std::to_string(v);
        };
        const double drift = rng.normal(0, 1);
        clinical.rows.push_back({uid, num(age_mu[g], 4), num(bmi_mu[g], 1.5), num(sys_mu[g], 6)});
        imaging.rows.push_back({uid, num(vol_mu[g][0] + 0.3 * drift, 0.15), num(vol_mu[g][1] + 0.3 * drift, 0.15),
                                num(vol_mu[g][2] + 0.3 * drift, 0.15), num(2.5 - 0.2 * static_cast<double>(g), 0.1)});
        survey.rows.push_back({uid, ord(ord_mu[g][0]), ord(ord_mu[g][1]), ord(ord_mu[g][2])});
        history.rows.push_back({uid, rng.uniform() < (g == 1 ? 0.8 : 0.2) ? "yes" : "no", sites[rng.index(3)]});
        outcomes.rows.push_back({uid, num(10.0 * static_cast<double>(g), 3), g < 2 ? "control" : "case"});
        covariate.rows.push_back({uid, csv::format_number(std::round(drift * 1000) / 1000)});
    }
    // incomplete observations, dropped when the data list is built
    clinical.rows[3][2] = "NA";
    survey.rows[10][1] = "";
    imaging.rows.erase(imaging.rows.begin() + 17);

    const std::pair<const char*, const csv::Table*> files[] = {
        {"clinical.csv", &clinical}, {"imaging.csv", &imaging},   {"survey.csv", &survey},
        {"history.csv", &history},   {"outcomes.csv", &outcomes}, {"covariate.csv", &covariate}};
    for (const auto& [name, table] : files) csv::write((out / name).string(), *table);
    std::printf("wrote %zu subjects to %s\n", n, out.string().c_str());
    return 0;
}
