#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "isinglab/datagen.hpp"
#include "isinglab/eval.hpp"
#include "isinglab/io.hpp"
#include "isinglab/methods.hpp"
#include "isinglab/metrics.hpp"
#include "isinglab/selection.hpp"

namespace isinglab {

namespace detail {

inline std::string path_file_name(std::size_t i)
{
    std::ostringstream os;
    os << "edges_" << std::setw(3) << std::setfill('0') << i << ".csv";
    return os.str();
}

inline void ensure_directory(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

inline SelectionMode parse_mode(const std::string& m)
{
    if (m == "bic")
        return SelectionMode::BIC;
    if (m == "oracle")
        return SelectionMode::ORACLE;
    throw InvalidArgument("mode must be bic or oracle");
}

} // namespace detail

/// Command-line entry point. Returns the process exit code: 0 on success,
/// 2 on usage errors, 1 on runtime failures (reported on `err` as
/// "error: <kind>: <message>").
inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr)
{
    CLI::App app{"Structure learning benchmark for binary (Ising) graphical models", "isinglab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "isinglab 1.0.0");

    // simulate
    std::string design_text, out_path, theta_out, truth_out;
    long long n = 0;
    std::uint64_t seed = 1, design_seed = kDefaultDesignSeed;
    GibbsOptions gibbs;
    auto* sim = app.add_subcommand("simulate", "Draw a dataset from a simulation design");
    sim->add_option("--design", design_text, "T1..T5 or BLOCK(Tj,copies)")->required();
    sim->add_option("--n", n, "Sample size")->required()->check(CLI::PositiveNumber);
    sim->add_option("--seed", seed, "Data seed")->capture_default_str();
    sim->add_option("--design-seed", design_seed, "Seed of the random design instance")->capture_default_str();
    sim->add_option("--burn-in", gibbs.burn_in, "Gibbs burn-in sweeps (large p)")->capture_default_str();
    sim->add_option("--thinning", gibbs.thinning, "Gibbs sweeps between draws (large p)")->capture_default_str();
    sim->add_option("--out", out_path, "Dataset CSV")->required();
    sim->add_option("--theta-out", theta_out, "Design Theta (native coding) as a matrix CSV");
    sim->add_option("--truth-out", truth_out, "True edge list with native-coding coefficients");

    // fit / select / deviance share these
    std::string data_path, method_text, out_dir, truth_path, scores_path, mode_text = "bic";
    int grid_count = 50;
    double grid_ratio = 1000.0;
    auto add_grid = [&](CLI::App* c) {
        c->add_option("--grid-count", grid_count, "Number of lambda values")->capture_default_str();
        c->add_option("--grid-ratio", grid_ratio, "lambda_max / lambda_min")->capture_default_str();
    };

    auto* fit = app.add_subcommand("fit", "Fit a method's regularization path");
    fit->add_option("--data", data_path, "Dataset CSV")->required();
    fit->add_option("--method", method_text, "Method name")->required();
    fit->add_option("--out-dir", out_dir, "Directory for path.csv and per-lambda edge lists")->required();
    add_grid(fit);

    auto* sel = app.add_subcommand("select", "Select one model on the path (BIC or oracle)");
    sel->add_option("--data", data_path, "Dataset CSV")->required();
    sel->add_option("--method", method_text, "Method name")->required();
    sel->add_option("--mode", mode_text, "bic or oracle")->capture_default_str();
    sel->add_option("--truth", truth_path, "True edge list (oracle mode)");
    sel->add_option("--out", out_path, "Selected edge list")->required();
    sel->add_option("--scores", scores_path, "BIC score table");
    add_grid(sel);

    std::string config_path, summary_path;
    int threads = -1;
    auto* bench = app.add_subcommand("benchmark", "Run a simulation campaign");
    bench->add_option("--config", config_path, "Campaign INI file")->required();
    bench->add_option("--out", out_path, "Per-replicate report CSV (default <output_dir>/report.csv)");
    bench->add_option("--summary", summary_path, "Aggregate CSV (default <output_dir>/summary.csv)");
    bench->add_option("--threads", threads, "Worker threads (overrides the config)");

    auto* dev = app.add_subcommand("deviance", "Approximate-deviance curves along the BMNPseudo path");
    dev->add_option("--data", data_path, "Dataset CSV")->required();
    dev->add_option("--out", out_path, "Curve CSV")->required();
    add_grid(dev);

    std::string edges_a, edges_b;
    auto* agr = app.add_subcommand("agree", "Agreement between two edge lists");
    agr->add_option("a", edges_a, "First edge list")->required();
    agr->add_option("b", edges_b, "Second edge list")->required();

    std::vector<std::string> filters, labels;
    std::size_t min_positives = 5;
    bool drop_constant = false;
    auto* ing = app.add_subcommand("ingest", "Validate and stratify a binary indicator CSV");
    ing->add_option("--data", data_path, "Input CSV")->required();
    ing->add_option("--filter", filters, "Stratum filter column=value (repeatable)");
    ing->add_option("--label", labels, "Extra non-binary column to ignore (repeatable)");
    ing->add_option("--min-positives", min_positives, "Drop variables with fewer ones in the stratum")
        ->capture_default_str();
    ing->add_flag("--drop-constant", drop_constant, "Drop zero-variance variables");
    ing->add_option("--out", out_path, "Cleaned dataset CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*sim) {
            const DesignSpec spec = parse_design(design_text, design_seed);
            const BuiltDesign d = build_theta(spec);
            const BinaryDataset data = sample_design(d, static_cast<Index>(n), seed, gibbs);
            save_binary_csv(out_path, data);
            if (!theta_out.empty()) {
                auto f = open_output(theta_out);
                write_matrix_csv(f, d.native.values(), data.names());
            }
            if (!truth_out.empty())
                save_edge_list(truth_out, d.truth, data.names(), d.native);
            out << "design=" << d.name << " p=" << data.p() << " n=" << data.n() << " edges=" << d.truth.size()
                << '\n';
        } else if (*fit) {
            const BinaryDataset data = load_binary_csv(data_path);
            const MethodId m = parse_method(method_text);
            PathOptions opt;
            const LambdaGrid grid = make_grid(lambda_max(data, m), grid_count, grid_ratio);
            const auto path = fit_path(data, m, grid, opt);
            detail::ensure_directory(out_dir);
            auto idx = open_output((std::filesystem::path(out_dir) / "path.csv").string());
            idx << "index,lambda,edges,file\n";
            for (std::size_t i = 0; i < path.size(); ++i) {
                const std::string file = detail::path_file_name(i);
                save_edge_list((std::filesystem::path(out_dir) / file).string(), path[i].edges, data.names(),
                               path[i].theta_shrunk);
                idx << i << ',' << format_double(path[i].lambda) << ',' << path[i].edges.size() << ',' << file
                    << '\n';
            }
            out << "method=" << to_string(m) << " points=" << path.size() << '\n';
        } else if (*sel) {
            const BinaryDataset data = load_binary_csv(data_path);
            const MethodId m = parse_method(method_text);
            const SelectionMode mode = detail::parse_mode(mode_text);
            const LambdaGrid grid = make_grid(lambda_max(data, m), grid_count, grid_ratio);
            const auto path = fit_path(data, m, grid);
            GraphEstimate chosen;
            if (mode == SelectionMode::ORACLE) {
                if (truth_path.empty())
                    throw InvalidArgument("oracle mode needs --truth");
                const EdgeSet truth = to_edge_set(read_edge_list(truth_path), data.names());
                chosen = oracle_select(path, truth);
                save_edge_list(out_path, chosen.edges, data.names(), chosen.theta_shrunk);
            } else {
                const BicSelection b = bic_select(data, path, m);
                for (const auto& w : b.warnings)
                    err << "warning: " << w << '\n';
                chosen = b.chosen;
                save_edge_list(out_path, chosen.edges, data.names(), chosen.theta_unshrunk);
                if (!scores_path.empty()) {
                    auto f = open_output(scores_path);
                    write_bic_csv(f, b, path);
                }
            }
            out << "method=" << to_string(m) << " lambda=" << format_double(chosen.lambda)
                << " edges=" << chosen.edges.size() << '\n';
        } else if (*bench) {
            CampaignConfig cfg = load_campaign_config(config_path);
            if (threads >= 0)
                cfg.threads = threads;
            const BenchmarkReport rep = run_benchmark(cfg);
            const std::filesystem::path dir(cfg.output_dir);
            if (out_path.empty() || summary_path.empty())
                detail::ensure_directory(cfg.output_dir);
            const std::string report_file = out_path.empty() ? (dir / "report.csv").string() : out_path;
            const std::string summary_file = summary_path.empty() ? (dir / "summary.csv").string() : summary_path;
            {
                auto f = open_output(report_file);
                write_report_csv(f, rep.rows);
            }
            {
                auto f = open_output(summary_file);
                write_summary_csv(f, rep.aggregates);
            }
            std::size_t failed = 0;
            for (const auto& r : rep.rows)
                if (!r.ok()) {
                    ++failed;
                    err << "warning: " << r.design << " n=" << r.n << " replicate=" << r.replicate << ' '
                        << to_string(r.method) << ": " << r.status << '\n';
                }
            out << "rows=" << rep.rows.size() << " failed=" << failed << " report=" << report_file
                << " summary=" << summary_file << '\n';
        } else if (*dev) {
            const BinaryDataset data = load_binary_csv(data_path);
            DevianceOptions opt;
            opt.grid_count = grid_count;
            opt.grid_ratio = grid_ratio;
            const DevianceCurves curves = deviance_curves(data, opt);
            for (const auto& w : curves.warnings)
                err << "warning: " << w << '\n';
            auto f = open_output(out_path);
            write_deviance_csv(f, curves.rows);
            out << "rows=" << curves.rows.size() << '\n';
        } else if (*agr) {
            const auto ra = read_edge_list(edges_a);
            const auto rb = read_edge_list(edges_b);
            const auto names = node_names({&ra, &rb});
            if (names.size() < 2) {
                out << "kappa=1 kappa_bar=0\n";
                return 0;
            }
            const Agreement a = agreement(to_edge_set(ra, names), to_edge_set(rb, names));
            out << "kappa=" << format_double(a.kappa) << " kappa_bar=" << a.kappa_bar << '\n';
            if (!a.kappa_defined)
                err << "warning: kappa undefined for an empty edge set, reported as 1\n";
        } else if (*ing) {
            IngestOptions opt;
            opt.label_columns = labels;
            opt.drop_constant = drop_constant;
            if (!filters.empty()) {
                StratumSpec s;
                s.min_positives = min_positives;
                for (const auto& f : filters) {
                    const auto eq = f.find('=');
                    if (eq == std::string::npos || eq == 0)
                        throw InvalidArgument("filter must be column=value, got '" + f + "'");
                    s.filters.emplace_back(f.substr(0, eq), f.substr(eq + 1));
                }
                opt.stratum = s;
            }
            const IngestResult res = ingest_csv(data_path, opt);
            for (const auto& c : res.constant_columns)
                err << "warning: constant column " << c << (drop_constant ? " (dropped)" : "") << '\n';
            for (const auto& c : res.dropped_rare)
                err << "warning: dropped rare variable " << c << '\n';
            if (!out_path.empty())
                save_binary_csv(out_path, res.data);
            out << "rows_total=" << res.rows_total << " n=" << res.data.n() << " p=" << res.data.p()
                << " constant=" << res.constant_columns.size() << " dropped=" << res.dropped_rare.size() << '\n';
        }
    } catch (const Error& e) {
        err << "error: " << e.kind() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: Internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace isinglab
