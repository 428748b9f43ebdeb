// metafuse: file-driven command line front end for the metafuse library.
// Every stage reads its inputs from files and writes its outputs to files.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>

#include "config.hpp"
#include "metafuse/bench.hpp"

// after Eigen: <resolv.h> defines a _res macro that clashes with Eigen internals
#include <CLI11.hpp>
#include <httplib.h>

namespace fs = std::filesystem;
using namespace metafuse;
using namespace metafuse::cli;

namespace {

// Registry sizes for stages that only read labels and never dispatch on the
// settings indices.
RegistrySizes permissive_sizes() {
    RegistrySizes s;
    s.clust_algs = 1u << 20;
    s.metrics.fill(1u << 20);
    return s;
}

SolutionsMatrix read_solutions(const std::string& path, const PipelineConfig* cfg = nullptr) {
    auto solm = solutions_from_table(csv::read(path), cfg ? cfg->registry_sizes() : permissive_sizes());
    if (cfg) solm.settings.seed = cfg->seed;
    return solm;
}

SettingsMatrix read_settings(const std::string& path, const PipelineConfig& cfg) {
    auto sm = settings_from_table(csv::read(path), cfg.registry_sizes());
    sm.seed = cfg.seed;
    sm.validate();
    return sm;
}

void write_csv(const std::string& path, const csv::Table& t) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    csv::write(path, t);
}

csv::Table uid_table(const std::vector<std::string>& uids, const std::string& column) {
    csv::Table t{{column}, {}};
    for (const auto& u : uids) t.rows.push_back({u});
    return t;
}

csv::Table order_table(const AriMatrix& am, const std::vector<std::size_t>& order) {
    csv::Table t{{"position", "row_id"}, {}};
    for (std::size_t p = 0; p < order.size(); ++p) t.rows.push_back({std::to_string(p + 1), std::to_string(am.row_ids[order[p]])});
    return t;
}

std::vector<std::size_t> read_order(const std::string& path, const AriMatrix& am) {
    const auto t = csv::read(path);
    const auto col = t.require_column("row_id", path);
    std::vector<std::size_t> order;
    for (const auto& row : t.rows) {
        const int id = static_cast<int>(csv::parse_cell_number(row[col]));
        auto it = std::find(am.row_ids.begin(), am.row_ids.end(), id);
        require(it != am.row_ids.end(), "order", path + ": row_id " + row[col] + " is not in the ARI matrix");
        order.push_back(static_cast<std::size_t>(it - am.row_ids.begin()));
    }
    require(order.size() == am.size(), "order", path + ": order length does not match the ARI matrix");
    return order;
}

std::vector<int> read_splits(const std::string& inline_text, const std::string& file) {
    require(inline_text.empty() || file.empty(), "split", "give --splits or --splits-file, not both");
    if (!file.empty()) return parse_split_vector(csv::read_file(file));
    return parse_split_vector(inline_text);
}

csv::Table similarity_table(const std::vector<std::string>& uids, const Eigen::MatrixXd& w) {
    csv::Table t{{"uid"}, {}};
    t.header.insert(t.header.end(), uids.begin(), uids.end());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        std::vector<std::string> row{uids[static_cast<std::size_t>(i)]};
        for (Eigen::Index j = 0; j < w.cols(); ++j) row.push_back(csv::format_number(w(i, j)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Eigen::MatrixXd similarity_from_table(const csv::Table& t, const std::vector<std::string>& uids, const std::string& path) {
    require(t.header.size() == uids.size() + 1 && std::equal(uids.begin(), uids.end(), t.header.begin() + 1), "similarity",
            path + ": uids do not match the solutions matrix");
    const auto n = static_cast<Eigen::Index>(uids.size());
    Eigen::MatrixXd w(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            w(i, j) = csv::parse_cell_number(t.rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j) + 1));
    return w;
}

std::string similarity_path(const std::string& dir, int row_id) {
    return (fs::path(dir) / ("similarity_row_" + std::to_string(row_id) + ".csv")).string();
}

BatchOptions batch_options(const PipelineConfig& cfg, const std::string& weights_path, const std::string& processes) {
    BatchOptions opt;
    opt.metrics = cfg.metrics_registry();
    opt.clust_algs = cfg.clust_algs_registry();
    opt.processes = parse_processes(processes);
    if (!weights_path.empty()) opt.weights = weights_from_table(csv::read(weights_path));
    return opt;
}

// Progress lines on standard error, serialized across workers.
std::function<void(std::size_t, std::size_t)> progress_printer(bool quiet, const std::string& prefix = "") {
    if (quiet) return {};
    auto mu = std::make_shared<std::mutex>();
    return [mu, prefix](std::size_t done, std::size_t total) {
        std::lock_guard lock(*mu);
        std::fprintf(stderr, "%srow %zu/%zu\n", prefix.c_str(), done, total);
    };
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
    std::vector<std::size_t> out;
    for (int v : parse_split_vector(text)) {
        require(v >= 1, what, "values must be positive");
        out.push_back(static_cast<std::size_t>(v));
    }
    require(!out.empty(), what, "at least one value is required");
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::string cur;
    for (char c : text + ",") {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) {
                auto v = csv::parse_number(cur);
                require(v.has_value(), "settings", "'" + cur + "' is not a number");
                out.push_back(*v);
                cur.clear();
            }
        } else {
            cur += c;
        }
    }
    return out;
}

std::vector<int> to_ints(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

// Annotation tracks for the UI: named numeric columns of a (possibly
// extended) solutions CSV, aligned with the ARI matrix row ids.
std::vector<Track> read_tracks(const std::string& path, const std::vector<std::string>& names, const AriMatrix& am) {
    const auto t = csv::read(path);
    const auto id_col = t.require_column("row_id", path);
    std::unordered_map<int, std::size_t> row_of;
    for (std::size_t r = 0; r < t.rows.size(); ++r) row_of[static_cast<int>(csv::parse_cell_number(t.rows[r][id_col]))] = r;
    std::vector<Track> tracks;
    for (const auto& name : names) {
        const auto col = t.require_column(name, path);
        Track tr{name, {}};
        for (int id : am.row_ids) {
            auto it = row_of.find(id);
            require(it != row_of.end(), "export-ui", path + " has no row_id " + std::to_string(id));
            const auto& cell = t.rows[it->second][col];
            tr.values.push_back(csv::is_missing(cell) ? NAN : csv::parse_cell_number(cell));
        }
        tracks.push_back(std::move(tr));
    }
    return tracks;
}

std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    return out;
}

std::string mime_type(const std::string& path) {
    const auto ext = fs::path(path).extension().string();
    if (ext == ".html") return "text/html";
    if (ext == ".js" || ext == ".mjs") return "text/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".csv" || ext == ".txt") return "text/plain";
    if (ext == ".svg") return "image/svg+xml";
    return "application/octet-stream";
}

// Options shared by most subcommands.
struct Common {
    std::string config;
    std::string out;
    std::string processes = "1";
    bool quiet = false;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"metafuse: batch similarity network fusion with meta clustering"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "metafuse 0.1.0");

    Common c;
    std::function<void()> run;
    auto add = [&](const char* name, const char* help) { return app.add_subcommand(name, help); };
    auto needs_config = [&](CLI::App* s) { s->add_option("--config", c.config, "pipeline config (JSON)")->required()->check(CLI::ExistingFile); };
    auto needs_out = [&](CLI::App* s, const char* help) { s->add_option("-o,--out", c.out, help)->required(); };

    // ---- complete ----
    {
        auto* s = add("complete", "write the uids complete across every component");
        needs_config(s);
        needs_out(s, "output CSV (one uid column)");
        s->callback([&] {
            run = [&] {
                const auto cfg = load_config(c.config);
                const auto specs = read_specs(cfg.components);
                write_csv(c.out, uid_table(get_complete_uids(specs, cfg.uid), cfg.uid));
            };
        });
    }

    // ---- settings ----
    struct {
        std::optional<std::size_t> nrow;
        std::optional<double> min_alpha, max_alpha;
        std::string alpha_values, k_values, t_values, snf_schemes, clust_algs, dropout, append, scaled_out;
        std::optional<int> min_k, max_k, min_t, max_t, min_removed, max_removed;
        std::optional<std::uint64_t> seed;
    } so;
    {
        auto* s = add("settings", "generate (or extend) a settings matrix");
        needs_config(s);
        needs_out(s, "output settings CSV");
        s->add_option("--nrow", so.nrow, "rows to draw");
        s->add_option("--seed", so.seed, "overrides the config seed");
        s->add_option("--min-alpha", so.min_alpha);
        s->add_option("--max-alpha", so.max_alpha);
        s->add_option("--alpha-values", so.alpha_values, "comma separated alpha choices");
        s->add_option("--min-k", so.min_k);
        s->add_option("--max-k", so.max_k);
        s->add_option("--k-values", so.k_values, "comma separated k choices");
        s->add_option("--min-t", so.min_t);
        s->add_option("--max-t", so.max_t);
        s->add_option("--t-values", so.t_values, "comma separated t choices");
        s->add_option("--snf-schemes", so.snf_schemes, "comma separated scheme choices (1, 2, 3)");
        s->add_option("--clust-algs", so.clust_algs, "comma separated registry indices");
        s->add_option("--dropout", so.dropout, "none, uniform or exponential");
        s->add_option("--min-removed-inputs", so.min_removed);
        s->add_option("--max-removed-inputs", so.max_removed);
        s->add_option("--append", so.append, "existing settings CSV to extend")->check(CLI::ExistingFile);
        s->add_option("--scaled-out", so.scaled_out, "also write every column min-max scaled to [0, 1]");
        s->callback([&] {
            run = [&] {
                auto cfg = load_config(c.config);
                auto& o = cfg.settings;
                if (so.seed) cfg.seed = *so.seed;
                if (so.nrow) cfg.nrow = *so.nrow;
                if (so.min_alpha) o.min_alpha = *so.min_alpha;
                if (so.max_alpha) o.max_alpha = *so.max_alpha;
                if (!so.alpha_values.empty()) o.alpha_values = parse_double_list(so.alpha_values);
                if (so.min_k) o.min_k = *so.min_k;
                if (so.max_k) o.max_k = *so.max_k;
                if (!so.k_values.empty()) o.k_values = to_ints(parse_size_list(so.k_values, "settings"));
                if (so.min_t) o.min_t = *so.min_t;
                if (so.max_t) o.max_t = *so.max_t;
                if (!so.t_values.empty()) o.t_values = to_ints(parse_size_list(so.t_values, "settings"));
                if (!so.snf_schemes.empty()) o.snf_schemes = to_ints(parse_size_list(so.snf_schemes, "settings"));
                if (!so.clust_algs.empty()) o.clust_algs = to_ints(parse_size_list(so.clust_algs, "settings"));
                if (!so.dropout.empty()) o.dropout = parse_dropout(so.dropout);
                if (so.min_removed) o.min_removed_inputs = *so.min_removed;
                if (so.max_removed) o.max_removed_inputs = *so.max_removed;
                const auto dl = load_data_list(cfg);
                SettingsMatrix sm;
                if (!so.append.empty()) {
                    sm = read_settings(so.append, cfg);
                    require(sm.component_names == dl.component_names(), "settings",
                            so.append + ": inclusion columns do not match the config components");
                    sm = add_settings_matrix_rows(std::move(sm), cfg.nrow, o, cfg.seed);
                } else {
                    sm = generate_settings_matrix(dl, cfg.nrow, o, cfg.registry_sizes(), cfg.seed);
                }
                write_csv(c.out, to_table(sm));
                if (!so.scaled_out.empty()) write_csv(so.scaled_out, scaled_settings_table(sm));
            };
        });
    }

    // ---- weights ----
    std::size_t w_nrow = 0;
    std::string w_fill = "uniform";
    std::optional<std::uint64_t> w_seed;
    {
        auto* s = add("weights", "generate a feature weights matrix");
        needs_config(s);
        needs_out(s, "output weights CSV");
        s->add_option("--nrow", w_nrow, "rows (match the settings matrix)")->required();
        s->add_option("--fill", w_fill, "ones, uniform or exponential")->capture_default_str();
        s->add_option("--seed", w_seed, "overrides the config seed");
        s->callback([&] {
            run = [&] {
                const auto cfg = load_config(c.config);
                const auto dl = load_data_list(cfg);
                write_csv(c.out, to_table(generate_weights_matrix(dl, w_nrow, parse_weight_fill(w_fill), w_seed.value_or(cfg.seed))));
            };
        });
    }

    // ---- batch ----
    std::string b_settings, b_weights, b_simdir;
    bool b_keep_going = false;
    {
        auto* s = add("batch", "run every settings row and write the solutions matrix");
        needs_config(s);
        needs_out(s, "output solutions CSV");
        s->add_option("--settings", b_settings, "settings CSV")->required()->check(CLI::ExistingFile);
        s->add_option("--weights", b_weights, "weights CSV (default: all ones)")->check(CLI::ExistingFile);
        s->add_option("--processes", c.processes, "worker count or 'max'")->capture_default_str();
        s->add_option("--save-similarity", b_simdir, "directory for one fused similarity CSV per row");
        s->add_flag("--keep-going", b_keep_going, "skip failing rows instead of stopping");
        s->add_flag("-q,--quiet", c.quiet, "no progress output");
        s->callback([&] {
            run = [&] {
                const auto cfg = load_config(c.config);
                const auto dl = load_data_list(cfg);
                const auto sm = read_settings(b_settings, cfg);
                auto opt = batch_options(cfg, b_weights, c.processes);
                opt.keep_going = b_keep_going;
                opt.return_similarity = !b_simdir.empty();
                opt.progress = progress_printer(c.quiet);
                const auto res = batch_snf(dl, sm, opt);
                print_warnings(res.warnings);
                write_csv(c.out, to_table(res.solutions));
                if (!b_simdir.empty()) {
                    fs::create_directories(b_simdir);
                    for (std::size_t i = 0; i < res.similarities.size(); ++i)
                        write_csv(similarity_path(b_simdir, res.solutions.row_id(i)), similarity_table(dl.uids(), res.similarities[i]));
                }
            };
        });
    }

    // ---- aris ----
    std::string solutions_path;
    {
        auto* s = add("aris", "pairwise adjusted Rand indices between solutions");
        needs_out(s, "output ARI CSV");
        s->add_option("--solutions", solutions_path, "solutions CSV")->required()->check(CLI::ExistingFile);
        s->add_option("--processes", c.processes, "worker count or 'max'")->capture_default_str();
        s->callback([&] {
            run = [&] { write_csv(c.out, to_table(calc_aris(read_solutions(solutions_path), parse_processes(c.processes)))); };
        });
    }

    // ---- order ----
    std::string aris_path, o_distance = "euclidean", o_linkage = "complete";
    {
        auto* s = add("order", "hierarchical clustering order of an ARI matrix");
        needs_out(s, "output order CSV (position, row_id)");
        s->add_option("--aris", aris_path, "ARI CSV")->required()->check(CLI::ExistingFile);
        s->add_option("--distance", o_distance, "euclidean or manhattan")->capture_default_str();
        s->add_option("--linkage", o_linkage, "complete, single or average")->capture_default_str();
        s->callback([&] {
            run = [&] {
                const auto am = ari_matrix_from_table(csv::read(aris_path));
                write_csv(c.out, order_table(am, get_matrix_order(am, o_distance, o_linkage)));
            };
        });
    }

    // ---- extend ----
    std::string e_target_config, e_test = "chi_squared";
    double e_min_pval = 1e-10;
    bool e_no_summaries = false, e_no_data = false;
    {
        auto* s = add("extend", "append per-feature association p-values to a solutions matrix");
        needs_config(s);
        needs_out(s, "output extended solutions CSV");
        s->add_option("--solutions", solutions_path, "solutions CSV")->required()->check(CLI::ExistingFile);
        s->add_option("--target-config", e_target_config, "config whose targets (or components) are target features")
            ->check(CLI::ExistingFile);
        s->add_option("--min-pval", e_min_pval, "floor applied to every p-value")->capture_default_str();
        s->add_option("--categorical-test", e_test, "chi_squared or fisher")->capture_default_str();
        s->add_flag("--no-summaries", e_no_summaries, "skip min/mean/max over target p-values");
        s->add_flag("--targets-only", e_no_data, "test only target features");
        s->add_option("--processes", c.processes, "worker count or 'max'")->capture_default_str();
        s->callback([&] {
            run = [&] {
                const auto cfg = load_config(c.config);
                const auto solm = read_solutions(solutions_path, &cfg);
                std::optional<DataList> data, targets;
                if (!e_no_data) data = load_data_list(cfg);
                if (!e_target_config.empty()) {
                    const auto tcfg = load_config(e_target_config);
                    targets = tcfg.targets.empty() ? load_data_list(tcfg) : load_target_list(tcfg);
                } else if (!cfg.targets.empty()) {
                    targets = load_target_list(cfg);
                }
                ExtendOptions opt;
                opt.min_pval = e_min_pval;
                opt.calculate_summaries = !e_no_summaries;
                opt.categorical_test = parse_categorical_test(e_test);
                opt.processes = parse_processes(c.processes);
                const auto ext = extend_solutions(solm, data ? &*data : nullptr, targets ? &*targets : nullptr, opt);
                for (const auto& f : ext.flags) std::fprintf(stderr, "note: %s\n", f.c_str());
                write_csv(c.out, to_table(ext));
            };
        });
    }

    // ---- nmi ----
    std::string n_weights;
    {
        auto* s = add("nmi", "feature-level NMI against each solution");
        needs_config(s);
        needs_out(s, "output NMI CSV (feature x row_id)");
        s->add_option("--solutions", solutions_path, "solutions CSV")->required()->check(CLI::ExistingFile);
        s->add_option("--weights", n_weights, "weights CSV used for the batch")->check(CLI::ExistingFile);
        s->add_option("--processes", c.processes, "worker count or 'max'")->capture_default_str();
        s->callback([&] {
            run = [&] {
                const auto cfg = load_config(c.config);
                const auto dl = load_data_list(cfg);
                const auto solm = read_solutions(solutions_path, &cfg);
                write_csv(c.out, to_table(batch_nmi(dl, solm, batch_options(cfg, n_weights, c.processes))));
            };
        });
    }

    // ---- quality ----
    std::string q_simdir, q_weights;
    {
        auto* s = add("quality", "silhouette, Dunn and Davies-Bouldin indices per solution");
        needs_config(s);
        needs_out(s, "output quality CSV");
        s->add_option("--solutions", solutions_path, "solutions CSV")->required()->check(CLI::ExistingFile);
        s->add_option("--similarity-dir", q_simdir, "similarities saved by batch --save-similarity (default: recompute)")
            ->check(CLI::ExistingDirectory);
        s->add_option("--weights", q_weights, "weights CSV used for the batch")->check(CLI::ExistingFile);
        s->add_option("--processes", c.processes, "worker count or 'max'")->capture_default_str();
        s->callback([&] {
            run = [&] {
                const auto cfg = load_config(c.config);
                const auto solm = read_solutions(solutions_path, &cfg);
                std::vector<Eigen::MatrixXd> sims;
                if (!q_simdir.empty()) {
                    for (int id : solm.row_ids()) {
                        const auto p = similarity_path(q_simdir, id);
                        sims.push_back(similarity_from_table(csv::read(p), solm.uids, p));
                    }
                } else {
                    const auto dl = load_data_list(cfg);
                    require(dl.uids() == solm.uids, "quality", "solutions uids do not match the config data");
                    auto opt = batch_options(cfg, q_weights, c.processes);
                    opt.return_similarity = true;
                    sims = batch_snf(dl, solm.settings, opt).similarities;
                }
                write_csv(c.out, to_table(compute_quality_indices(solm, sims)));
            };
        });
    }

    // ---- subsample ----
    std::size_t s_count = 100;
    double s_fraction = 0.8;
    std::string s_outdir;
    std::optional<std::uint64_t> s_seed;
    {
        auto* s = add("subsample", "run the settings matrix on random subsamples of the observations");
        needs_config(s);
        s->add_option("--settings", b_settings, "settings CSV")->required()->check(CLI::ExistingFile);
        s->add_option("--weights", b_weights, "weights CSV")->check(CLI::ExistingFile);
        s->add_option("--n-subsamples", s_count, "number of subsamples")->capture_default_str();
        s->add_option("--fraction", s_fraction, "fraction of observations kept per subsample")->capture_default_str();
        s->add_option("--seed", s_seed, "overrides the config seed for the draws");
        s->add_option("--out-dir", s_outdir, "directory for subsample_<s>.csv solutions matrices")->required();
        s->add_option("--processes", c.processes, "worker count or 'max'")->capture_default_str();
        s->add_flag("-q,--quiet", c.quiet, "no progress output");
        s->callback([&] {
            run = [&] {
                const auto cfg = load_config(c.config);
                const auto dl = load_data_list(cfg);
                const auto sm = read_settings(b_settings, cfg);
                auto opt = batch_options(cfg, b_weights, c.processes);
                const auto lists = subsample_data_list(dl, s_count, s_fraction, s_seed.value_or(cfg.seed));
                fs::create_directories(s_outdir);
                for (std::size_t i = 0; i < lists.size(); ++i) {
                    opt.progress = progress_printer(c.quiet, "subsample " + std::to_string(i + 1) + "/" + std::to_string(lists.size()) + " ");
                    const auto res = batch_snf(lists[i], sm, opt);
                    print_warnings(res.warnings);
                    write_csv((fs::path(s_outdir) / ("subsample_" + std::to_string(i + 1) + ".csv")).string(), to_table(res.solutions));
                }
            };
        });
    }

    // ---- cocluster ----
    std::string cc_subdir, cc_outdir;
    {
        auto* s = add("cocluster", "stability of each solution across subsamples");
        s->add_option("--solutions", solutions_path, "full-data solutions CSV")->required()->check(CLI::ExistingFile);
        s->add_option("--subsample-dir", cc_subdir, "directory written by subsample")->required()->check(CLI::ExistingDirectory);
        s->add_option("--out-dir", cc_outdir, "output directory")->required();
        s->add_option("--processes", c.processes, "worker count or 'max'")->capture_default_str();
        s->callback([&] {
            run = [&] {
                const auto solm = read_solutions(solutions_path);
                std::vector<SolutionsMatrix> subs;
                for (std::size_t i = 1;; ++i) {
                    const auto p = fs::path(cc_subdir) / ("subsample_" + std::to_string(i) + ".csv");
                    if (!fs::exists(p)) break;
                    subs.push_back(read_solutions(p.string()));
                }
                require(!subs.empty(), "cocluster", cc_subdir + " contains no subsample_<s>.csv files");
                const unsigned procs = parse_processes(c.processes);
                const auto cc = calculate_coclustering(subs, solm, procs);
                const auto sa = subsample_pairwise_aris(subs, false, procs);
                const fs::path out = cc_outdir;
                write_csv((out / "cocluster_records.csv").string(), cocluster_records_table(cc));
                write_csv((out / "cocluster_summary.csv").string(), cocluster_summary_table(cc));
                write_csv((out / "subsample_aris.csv").string(), to_table(sa.summary));
            };
        });
    }

    // ---- split ----
    std::string sp_order, sp_splits, sp_splits_file, sp_labels_out;
    {
        auto* s = add("split", "cut the ordered ARI matrix into meta clusters and pick representatives");
        needs_out(s, "output representatives CSV (one solutions row per meta cluster)");
        s->add_option("--aris", aris_path, "ARI CSV")->required()->check(CLI::ExistingFile);
        s->add_option("--solutions", solutions_path, "solutions CSV")->required()->check(CLI::ExistingFile);
        s->add_option("--order", sp_order, "order CSV (default: recomputed)")->check(CLI::ExistingFile);
        s->add_option("--splits", sp_splits, "split vector, for example 2,5,12,17");
        s->add_option("--splits-file", sp_splits_file, "file holding a split vector")->check(CLI::ExistingFile);
        s->add_option("--labels-out", sp_labels_out, "also write row_id, position and meta_cluster per solution");
        s->callback([&] {
            run = [&] {
                const auto am = ari_matrix_from_table(csv::read(aris_path));
                const auto solm = read_solutions(solutions_path);
                const auto order = sp_order.empty() ? get_matrix_order(am) : read_order(sp_order, am);
                const auto part = partition_by_split_vector(order, read_splits(sp_splits, sp_splits_file));
                auto reps = get_representative_solutions(am, part, solm);
                // label column ahead of nclust, like the provenance columns of combine
                reps.extra_names.insert(reps.extra_names.begin(), "meta_cluster");
                if (reps.extra.empty()) reps.extra.resize(reps.size());
                for (std::size_t b = 0; b < reps.size(); ++b) reps.extra[b].insert(reps.extra[b].begin(), meta_cluster_label(b));
                write_csv(c.out, to_table(reps));
                if (!sp_labels_out.empty()) {
                    csv::Table t{{"row_id", "position", "meta_cluster"}, {}};
                    for (std::size_t b = 0; b < part.blocks.size(); ++b)
                        for (auto i : part.blocks[b]) {
                            const auto pos = std::find(order.begin(), order.end(), i) - order.begin();
                            t.rows.push_back({std::to_string(am.row_ids[i]), std::to_string(pos + 1), meta_cluster_label(b)});
                        }
                    write_csv(sp_labels_out, t);
                }
                std::fprintf(stderr, "%zu meta clusters, %zu representatives\n", part.blocks.size(), reps.size());
            };
        });
    }

    // ---- propagate ----
    double p_train = 0.8;
    std::string p_train_solutions, p_assign_out;
    {
        auto* s = add("propagate", "cluster held-out observations from training solutions");
        needs_config(s);
        needs_out(s, "output labels CSV (uid, group, one column per row_id)");
        s->add_option("--settings", b_settings, "settings CSV (runs the batch on the training split)")->check(CLI::ExistingFile);
        s->add_option("--train-solutions", p_train_solutions, "solutions already computed on the training observations")
            ->check(CLI::ExistingFile);
        s->add_option("--train-fraction", p_train, "training fraction when splitting")->capture_default_str();
        s->add_option("--weights", b_weights, "weights CSV")->check(CLI::ExistingFile);
        s->add_option("--assignments-out", p_assign_out, "write uid, group for the train/test split");
        s->add_option("--processes", c.processes, "worker count or 'max'")->capture_default_str();
        s->add_flag("-q,--quiet", c.quiet, "no progress output");
        s->callback([&] {
            run = [&] {
                const auto cfg = load_config(c.config);
                const auto full = load_data_list(cfg);
                auto opt = batch_options(cfg, b_weights, c.processes);
                SolutionsMatrix train;
                if (!p_train_solutions.empty()) {
                    require(b_settings.empty(), "propagate", "give --settings or --train-solutions, not both");
                    train = read_solutions(p_train_solutions, &cfg);
                } else {
                    require(!b_settings.empty(), "propagate", "--settings or --train-solutions is required");
                    const auto split = train_test_assign(p_train, full.uids(), cfg.seed);
                    opt.progress = progress_printer(c.quiet);
                    auto res = batch_snf(full.select(split.train), read_settings(b_settings, cfg), opt);
                    print_warnings(res.warnings);
                    train = std::move(res.solutions);
                    opt.progress = {};
                }
                const auto out = propagate_labels(train, full, opt);
                print_warnings(out.warnings);
                write_csv(c.out, to_table(out));
                if (!p_assign_out.empty()) {
                    csv::Table t{{cfg.uid, "group"}, {}};
                    for (std::size_t i = 0; i < out.uids.size(); ++i) t.rows.push_back({out.uids[i], out.group[i]});
                    write_csv(p_assign_out, t);
                }
            };
        });
    }

    // ---- adjust ----
    std::string a_cov_file, a_cov, a_outdir;
    {
        auto* s = add("adjust", "replace continuous features by residuals on a covariate");
        needs_config(s);
        s->add_option("--covariate-file", a_cov_file, "CSV with the uid column and the covariate")->required()->check(CLI::ExistingFile);
        s->add_option("--covariate", a_cov, "covariate column name")->required();
        s->add_option("--out-dir", a_outdir, "directory for <component>.csv files")->required();
        s->callback([&] {
            run = [&] {
                const auto cfg = load_config(c.config);
                const auto dl = load_data_list(cfg);
                const auto t = csv::read(a_cov_file);
                const auto uc = t.require_column(cfg.uid, a_cov_file), vc = t.require_column(a_cov, a_cov_file);
                std::unordered_map<std::string, double> cov;
                for (const auto& row : t.rows) cov[row[uc]] = csv::parse_cell_number(row[vc]);
                std::vector<double> x;
                for (const auto& u : dl.uids()) {
                    auto it = cov.find(u);
                    require(it != cov.end() && std::isfinite(it->second), "adjust", "no covariate value for uid '" + u + "'");
                    x.push_back(it->second);
                }
                const auto res = linear_adjust(dl, x);
                for (const auto& f : res.unadjusted) std::fprintf(stderr, "warning: feature '%s' is not continuous and was not adjusted\n", f.c_str());
                fs::create_directories(a_outdir);
                for (const auto& comp : res.data.components()) {
                    csv::Table out{{cfg.uid}, {}};
                    for (const auto& col : comp.columns) out.header.push_back(col.name);
                    for (std::size_t i = 0; i < res.data.n_obs(); ++i) {
                        std::vector<std::string> row{res.data.uids()[i]};
                        for (const auto& col : comp.columns) row.push_back(col.cell(i));
                        out.rows.push_back(std::move(row));
                    }
                    write_csv((fs::path(a_outdir) / (comp.name + ".csv")).string(), out);
                }
            };
        });
    }

    // ---- combine ----
    std::vector<std::string> cb_inputs;
    {
        auto* s = add("combine", "stack solutions matrices with source provenance");
        needs_out(s, "output combined solutions CSV");
        s->add_option("inputs", cb_inputs, "name=path pairs (or plain paths, named by file stem)")->required();
        s->callback([&] {
            run = [&] {
                std::vector<std::pair<std::string, SolutionsMatrix>> parts;
                for (const auto& in : cb_inputs) {
                    const auto eq = in.find('=');
                    const std::string name = eq == std::string::npos ? fs::path(in).stem().string() : in.substr(0, eq);
                    const std::string path = eq == std::string::npos ? in : in.substr(eq + 1);
                    require(fs::exists(path), "combine", "no such file: " + path);
                    parts.emplace_back(name, read_solutions(path));
                }
                write_csv(c.out, to_table(combine_solutions(parts)));
            };
        });
    }

    // ---- bench ----
    std::string bn_rows = "10,20,40,80";
    std::size_t bn_n = 100, bn_f = 50, bn_components = 5;
    int bn_reps = 3;
    bool bn_strict = false;
    std::uint64_t bn_seed = 42;
    {
        auto* s = add("bench", "time solution generation and ARI computation against the row count");
        needs_out(s, "output timing CSV");
        s->add_option("--rows", bn_rows, "settings row counts")->capture_default_str();
        s->add_option("--observations", bn_n, "observations in the synthetic data")->capture_default_str();
        s->add_option("--features", bn_f, "features in the synthetic data")->capture_default_str();
        s->add_option("--components", bn_components, "components the features are split over")->capture_default_str();
        s->add_option("--reps", bn_reps, "repetitions per timing (minimum kept)")->capture_default_str();
        s->add_option("--seed", bn_seed)->capture_default_str();
        s->add_option("--processes", c.processes, "worker count or 'max'")->capture_default_str();
        s->add_flag("--strict", bn_strict, "exit nonzero when a scaling shape does not hold");
        s->callback([&] {
            run = [&] {
                const auto rows = parse_size_list(bn_rows, "bench");
                require(rows.size() >= 3, "bench", "at least three row counts are needed");
                const auto dl = bench::normal_data_list(bn_n, bn_f, bn_components, bn_seed);
                SettingsOptions opt;
                opt.max_k = static_cast<int>(std::min<std::size_t>(100, bn_n - 1));
                opt.min_k = std::min(10, opt.max_k);
                const auto sol = bench::time_solutions(dl, rows, opt, bn_seed, bn_reps, static_cast<int>(parse_processes(c.processes)));
                const auto ari = bench::time_aris(rows, bn_n, bn_seed, bn_reps);
                csv::Table t{{"stage", "rows", "seconds"}, {}};
                for (const auto& p : sol) t.rows.push_back({"solutions", std::to_string(p.rows), csv::format_number(p.seconds)});
                for (const auto& p : ari) t.rows.push_back({"aris", std::to_string(p.rows), csv::format_number(p.seconds)});
                write_csv(c.out, t);
                const auto fs_ = bench::compare_fits(sol), fa = bench::compare_fits(ari);
                std::printf("solutions: R2 linear %.4f, quadratic %.4f -> %s\n", fs_.r2_linear, fs_.r2_quadratic,
                            fs_.linear_wins() ? "linear (expected)" : "quadratic (unexpected)");
                std::printf("aris:      R2 linear %.4f, quadratic %.4f -> %s\n", fa.r2_linear, fa.r2_quadratic,
                            fa.quadratic_wins() ? "quadratic (expected)" : "linear (unexpected)");
                if (bn_strict && !(fs_.linear_wins() && fa.quadratic_wins()))
                    throw Error("bench", "scaling shapes do not hold on this machine");
            };
        });
    }

    // ---- export-ui ----
    std::string ui_tracks, ui_track_source;
    {
        auto* s = add("export-ui", "write the annotator bundle (ARI matrix, order, splits, tracks)");
        needs_out(s, "output bundle JSON");
        s->add_option("--aris", aris_path, "ARI CSV")->required()->check(CLI::ExistingFile);
        s->add_option("--order", sp_order, "order CSV (default: recomputed)")->check(CLI::ExistingFile);
        s->add_option("--splits", sp_splits, "initial split vector");
        s->add_option("--splits-file", sp_splits_file, "file holding the initial split vector")->check(CLI::ExistingFile);
        s->add_option("--solutions", ui_track_source, "solutions or extended solutions CSV holding the track columns")
            ->check(CLI::ExistingFile);
        s->add_option("--tracks", ui_tracks, "comma separated column names (default: nclust when --solutions is given)");
        s->callback([&] {
            run = [&] {
                const auto am = ari_matrix_from_table(csv::read(aris_path));
                const auto order = sp_order.empty() ? get_matrix_order(am) : read_order(sp_order, am);
                std::vector<Track> tracks;
                if (!ui_track_source.empty())
                    tracks = read_tracks(ui_track_source, ui_tracks.empty() ? std::vector<std::string>{"nclust"} : split_names(ui_tracks), am);
                else
                    require(ui_tracks.empty(), "export-ui", "--tracks needs --solutions");
                write_ui_bundle(c.out, make_ui_bundle(am, order, std::move(tracks), read_splits(sp_splits, sp_splits_file)));
            };
        });
    }

    // ---- serve ----
    int sv_port = 8080;
    std::string sv_root = ".", sv_bundle, sv_host = "127.0.0.1";
    {
        auto* s = add("serve", "static host for the annotator and its bundle");
        s->add_option("--port", sv_port, "TCP port on localhost")->capture_default_str()->check(CLI::Range(1, 65535));
        s->add_option("--root", sv_root, "directory served at /")->capture_default_str()->check(CLI::ExistingDirectory);
        s->add_option("--bundle", sv_bundle, "bundle served at /bundle.json")->check(CLI::ExistingFile);
        s->add_option("--host", sv_host, "bind address")->capture_default_str();
        s->callback([&] {
            run = [&] {
                if (!sv_bundle.empty()) (void)read_ui_bundle(sv_bundle);  // fail early on a bad bundle
                httplib::Server server;
                const std::string bundle = sv_bundle;
                server.Get("/bundle.json", [bundle](const httplib::Request&, httplib::Response& res) {
                    if (bundle.empty()) {
                        res.status = 404;
                        res.set_content("no bundle configured\n", "text/plain");
                        return;
                    }
                    res.set_content(csv::read_file(bundle), "application/json");
                });
                const std::string root = fs::absolute(sv_root).string();
                server.Get(R"(/(.*))", [root](const httplib::Request& req, httplib::Response& res) {
                    fs::path rel = req.matches[1].str();
                    if (rel.empty()) rel = "index.html";
                    const fs::path full = (fs::path(root) / rel).lexically_normal();
                    const auto r = fs::path(root).lexically_normal().string();
                    if (full.string().compare(0, r.size(), r) != 0 || !fs::is_regular_file(full)) {
                        res.status = 404;
                        res.set_content("not found\n", "text/plain");
                        return;
                    }
                    res.set_content(csv::read_file(full.string()), mime_type(full.string()));
                });
                require(server.bind_to_port(sv_host, sv_port), "serve", "cannot bind " + sv_host + ":" + std::to_string(sv_port));
                std::fprintf(stderr, "serving %s on http://%s:%d/\n", root.c_str(), sv_host.c_str(), sv_port);
                server.listen_after_bind();
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        run();
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
