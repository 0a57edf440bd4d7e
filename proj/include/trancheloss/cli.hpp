// Command-line front end: argument parsing into a RunSpec, engine dispatch,
// and results CSV emission.

#pragma once

#include <chrono>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trancheloss/csv.hpp"
#include "trancheloss/errors.hpp"
#include "trancheloss/model.hpp"
#include "trancheloss/oracles.hpp"
#include "trancheloss/pricer.hpp"

namespace trancheloss::cli {

/// Raised for --help / --version; carries the text to print.
struct HelpRequested {
    std::string text;
};

struct RunSpec {
    enum class Command { price, export_preset, list_presets };

    Command command = Command::price;
    std::string portfolio_path; // file source; empty when a preset is used
    std::string preset;
    std::vector<Tranche> tranches;
    std::string method = "hermite"; // gaussian | hermite | mc | exact
    PricerConfig pricer;
    McConfig mc;
    bool allow_partial_notional = false;
    bool timings = false; // populate runtime_ms (off by default; timings are
                          // the one nondeterministic column)
    std::string out_path; // empty -> stdout
};

namespace detail_cli {

inline void require(bool condition, const std::string& message) {
    if (!condition)
        throw UsageError(message);
}

} // namespace detail_cli

/// Parses a full argument vector (program name excluded) into a validated
/// RunSpec. Throws UsageError on any malformed or conflicting usage and
/// HelpRequested when help is asked for.
inline RunSpec parse_args(const std::vector<std::string>& args) {
    CLI::App app{"Expected tranche loss of a loan portfolio in a Gaussian factor model"};
    app.name("tranche");
    app.require_subcommand(1);
    app.set_version_flag("--version", "tranche 0.1.0");

    RunSpec spec;
    std::vector<double> attach{0.0};
    std::vector<double> detach;
    std::size_t order = 5;
    std::size_t nodes = 64;

    CLI::App* price = app.add_subcommand("price", "Price tranches of a portfolio");
    auto* opt_preset = price->add_option("--preset", spec.preset, "Built-in portfolio name");
    auto* opt_portfolio =
        price->add_option("--portfolio", spec.portfolio_path, "Portfolio CSV file");
    opt_preset->excludes(opt_portfolio);
    price->add_option("--attach", attach,
                      "Attachment points (fractions; single value broadcasts)")
        ->delimiter(',');
    price->add_option("--detach", detach, "Detachment points (fractions, strictly increasing)")
        ->delimiter(',')
        ->required();
    auto* opt_method = price->add_option("--method", spec.method, "gaussian, hermite, mc or exact")
                           ->check(CLI::IsMember({"gaussian", "hermite", "mc", "exact"}));
    auto* opt_order =
        price->add_option("--order", order, "Hermite expansion order N (1 = plain Gaussian)");
    auto* opt_nodes = price->add_option("--nodes", nodes, "Gauss-Hermite nodes per factor");
    auto* opt_samples = price->add_option("--samples", spec.mc.samples, "Monte Carlo paths");
    auto* opt_seed = price->add_option("--seed", spec.mc.seed, "Monte Carlo seed");
    auto* opt_antithetic =
        price->add_flag("--antithetic", spec.mc.antithetic, "Antithetic path pairing");
    price->add_flag("--allow-partial-notional", spec.allow_partial_notional,
                    "Accept notional fractions summing below one");
    price->add_flag("--timings", spec.timings, "Populate the runtime_ms column");
    price->add_option("--out", spec.out_path, "Output CSV path (default: stdout)");

    CLI::App* export_preset =
        app.add_subcommand("export-preset", "Write a built-in portfolio as CSV");
    export_preset->add_option("name", spec.preset, "Preset name")->required();
    export_preset->add_option("--out", spec.out_path, "Output CSV path (default: stdout)");

    CLI::App* presets = app.add_subcommand("presets", "List built-in portfolio presets");
    presets->add_option("--out", spec.out_path, "Output path (default: stdout)");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("tranche");
    for (const std::string& arg : args)
        argv.push_back(arg.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        const auto chosen = app.get_subcommands();
        throw HelpRequested{chosen.size() == 1 ? chosen.front()->help() : app.help()};
    } catch (const CLI::CallForAllHelp&) {
        throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
    } catch (const CLI::CallForVersion&) {
        throw HelpRequested{app.version()};
    } catch (const CLI::ParseError& err) {
        throw UsageError(std::string(err.what()) + "\nrun 'tranche --help' for usage");
    }

    using detail_cli::require;
    if (app.got_subcommand("presets")) {
        spec.command = RunSpec::Command::list_presets;
        return spec;
    }
    if (app.got_subcommand("export-preset")) {
        spec.command = RunSpec::Command::export_preset;
        return spec;
    }

    spec.command = RunSpec::Command::price;
    require(!spec.preset.empty() || !spec.portfolio_path.empty(),
            "price: either --preset or --portfolio is required");

    // method-specific options must not be mixed
    const bool is_mc = spec.method == "mc";
    const bool is_exact = spec.method == "exact";
    require(!(opt_order->count() && (is_mc || is_exact)),
            "price: --order only applies to the gaussian/hermite methods");
    require(!(opt_nodes->count() && is_mc), "price: --nodes does not apply to the mc method");
    require(!(opt_samples->count() && !is_mc), "price: --samples only applies to the mc method");
    require(!(opt_seed->count() && !is_mc), "price: --seed only applies to the mc method");
    require(!(opt_antithetic->count() && !is_mc),
            "price: --antithetic only applies to the mc method");
    require(!(spec.method == "gaussian" && opt_order->count() && order != 1),
            "price: --method gaussian means --order 1");
    if (spec.method == "gaussian")
        order = 1;
    require(order >= 1 && order <= max_cumulant_order,
            "price: --order must lie in [1, " + std::to_string(max_cumulant_order) + "]");
    require(nodes >= 1 && nodes <= max_quadrature_order,
            "price: --nodes must lie in [1, " + std::to_string(max_quadrature_order) + "]");
    require(spec.mc.samples >= 1, "price: --samples must be positive");
    spec.pricer.expansion_order = order;
    spec.pricer.nodes_per_factor = nodes;
    if (!opt_method->count() && order == 1)
        spec.method = "gaussian";

    require(!detach.empty(), "price: --detach needs at least one value");
    for (std::size_t i = 1; i < detach.size(); ++i)
        require(detach[i] > detach[i - 1],
                "price: detachments must be strictly increasing, got " +
                    detail::format_double(detach[i - 1]) + " before " +
                    detail::format_double(detach[i]));
    if (attach.size() == 1)
        attach.assign(detach.size(), attach.front());
    require(attach.size() == detach.size(),
            "price: --attach needs one value or one per detachment");
    for (std::size_t i = 0; i < detach.size(); ++i) {
        try {
            spec.tranches.emplace_back(attach[i], detach[i]);
        } catch (const FieldOutOfRange& err) {
            throw UsageError(std::string("price: ") + err.what());
        }
    }
    return spec;
}

namespace detail_cli {

inline Portfolio load_portfolio(const RunSpec& spec) {
    if (!spec.preset.empty())
        return preset_portfolio(spec.preset);
    ValidateOptions options;
    options.allow_partial_notional = spec.allow_partial_notional;
    return read_portfolio_file(spec.portfolio_path, options);
}

// rows for the deterministic semi-analytic engines
inline std::vector<ResultRow> price_rows(const Portfolio& portfolio, const RunSpec& spec) {
    std::vector<ResultRow> rows;
    if (spec.method == "gaussian" || spec.method == "hermite") {
        const auto results = price_tranches(portfolio, spec.tranches, spec.pricer);
        for (std::size_t i = 0; i < results.size(); ++i) {
            ResultRow row;
            row.attach = spec.tranches[i].attach();
            row.detach = spec.tranches[i].detach();
            row.method = spec.pricer.expansion_order == 1 ? "gaussian" : "hermite";
            row.order = spec.pricer.expansion_order;
            row.nodes = spec.pricer.nodes_per_factor;
            row.value = results[i].value;
            row.floored_points = results[i].floored_points;
            if (spec.timings)
                row.runtime_ms = results[i].runtime_ms;
            rows.push_back(std::move(row));
        }
    } else if (spec.method == "mc") {
        for (const Tranche& tranche : spec.tranches) {
            const auto start = std::chrono::steady_clock::now();
            const McResult result = mc_price(portfolio, tranche, spec.mc);
            ResultRow row;
            row.attach = tranche.attach();
            row.detach = tranche.detach();
            row.method = "mc";
            row.value = result.estimate;
            row.std_error = result.std_error;
            if (spec.timings)
                row.runtime_ms = std::chrono::duration<double, std::milli>(
                                     std::chrono::steady_clock::now() - start)
                                     .count();
            rows.push_back(std::move(row));
        }
    } else { // exact
        for (const Tranche& tranche : spec.tranches) {
            const auto start = std::chrono::steady_clock::now();
            ResultRow row;
            row.attach = tranche.attach();
            row.detach = tranche.detach();
            row.method = "exact";
            row.nodes = spec.pricer.nodes_per_factor;
            row.value = exact_price(portfolio, tranche, spec.pricer.nodes_per_factor);
            if (spec.timings)
                row.runtime_ms = std::chrono::duration<double, std::milli>(
                                     std::chrono::steady_clock::now() - start)
                                     .count();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

template <class Writer>
inline void with_output(const std::string& path, const Writer& writer) {
    if (path.empty()) {
        writer(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary); // binary keeps LF line endings everywhere
    if (!out)
        throw IoError("cannot open output file '" + path + "'");
    writer(out);
    out.flush();
    if (!out)
        throw IoError("failed writing output file '" + path + "'");
}

} // namespace detail_cli

/// Executes a validated RunSpec; returns the process exit code.
inline int run(const RunSpec& spec) {
    switch (spec.command) {
    case RunSpec::Command::list_presets: {
        detail_cli::with_output(spec.out_path, [](std::ostream& out) {
            out << "name,loans,factors\n";
            for (const auto name : preset_names()) {
                const Portfolio portfolio = preset_portfolio(name);
                out << name << ',' << portfolio.size() << ',' << portfolio.factors << '\n';
            }
        });
        return 0;
    }
    case RunSpec::Command::export_preset: {
        const Portfolio portfolio = preset_portfolio(spec.preset);
        detail_cli::with_output(
            spec.out_path, [&](std::ostream& out) { write_portfolio_csv(portfolio, out); });
        return 0;
    }
    case RunSpec::Command::price: {
        const Portfolio portfolio = detail_cli::load_portfolio(spec);
        const auto rows = detail_cli::price_rows(portfolio, spec);
        detail_cli::with_output(spec.out_path,
                                [&](std::ostream& out) { write_results_csv(rows, out); });
        return 0;
    }
    }
    return 0;
}

/// Entry point used by the binary: parse, run, and map failures to the
/// documented exit codes (0 ok, 1 usage, 2 validation, 3 I/O).
inline int cli_main(int argc, const char* const* argv) {
    try {
        const std::vector<std::string> args(argv + 1, argv + argc);
        return run(parse_args(args));
    } catch (const HelpRequested& help) {
        std::cout << help.text;
        return 0;
    } catch (const UsageError& err) {
        std::cerr << "tranche: " << err.what() << '\n';
        return 1;
    } catch (const IoError& err) {
        std::cerr << "tranche: " << err.what() << '\n';
        return 3;
    } catch (const Error& err) {
        std::cerr << "tranche: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "tranche: unexpected error: " << err.what() << '\n';
        return 2;
    }
}

} // namespace trancheloss::cli
