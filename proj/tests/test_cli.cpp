#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "trancheloss/cli.hpp"

using namespace trancheloss;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

fs::path temp_file(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    return fs::temp_directory_path() /
           ("trancheloss_test_" + tag + "_" + std::to_string(rng()) + ".csv");
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

int run_main(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"tranche"};
    for (const auto& a : args)
        argv.push_back(a.c_str());
    return cli::cli_main(static_cast<int>(argv.size()), argv.data());
}

struct FileGuard {
    fs::path path;
    ~FileGuard() {
        std::error_code ec;
        fs::remove(path, ec);
    }
};

} // namespace

TEST_CASE("parse_args") {
    SUBCASE("base-curve run") {
        const auto spec = cli::parse_args({"price", "--preset", "paper125", "--detach",
                                           "0.03,0.07,0.10,0.15", "--order", "1", "--nodes", "64"});
        CHECK(spec.command == cli::RunSpec::Command::price);
        CHECK(spec.preset == "paper125");
        REQUIRE(spec.tranches.size() == 4);
        CHECK(spec.tranches[0].attach() == 0.0);
        CHECK(spec.tranches[3].detach() == 0.15);
        CHECK(spec.pricer.expansion_order == 1);
        CHECK(spec.pricer.nodes_per_factor == 64);
        CHECK(spec.method == "gaussian"); // order one is the plain gaussian
    }

    SUBCASE("equity run with explicit order") {
        const auto spec = cli::parse_args(
            {"price", "--preset", "paper25", "--attach", "0", "--detach", "0.03", "--order", "5"});
        REQUIRE(spec.tranches.size() == 1);
        CHECK(spec.tranches[0].attach() == 0.0);
        CHECK(spec.tranches[0].detach() == 0.03);
        CHECK(spec.pricer.expansion_order == 5);
        CHECK(spec.method == "hermite");
    }

    SUBCASE("attach broadcasts or pairs") {
        const auto broadcast = cli::parse_args(
            {"price", "--preset", "paper25", "--attach", "0.01", "--detach", "0.03,0.07"});
        REQUIRE(broadcast.tranches.size() == 2);
        CHECK(broadcast.tranches[1].attach() == 0.01);
        const auto paired = cli::parse_args(
            {"price", "--preset", "paper25", "--attach", "0.03,0.07", "--detach", "0.07,0.1"});
        CHECK(paired.tranches[1].attach() == 0.07);
        CHECK_THROWS_AS((void)cli::parse_args({"price", "--preset", "paper25", "--attach",
                                               "0,0.01,0.02", "--detach", "0.03,0.07"}),
                        UsageError);
    }

    SUBCASE("usage failures") {
        // non-monotone detachments
        CHECK_THROWS_AS(
            (void)cli::parse_args({"price", "--preset", "paper25", "--detach", "0.07,0.03"}),
            UsageError);
        // no source
        CHECK_THROWS_AS((void)cli::parse_args({"price", "--detach", "0.03"}), UsageError);
        // both sources
        CHECK_THROWS_AS((void)cli::parse_args({"price", "--preset", "paper25", "--portfolio",
                                               "x.csv", "--detach", "0.03"}),
                        UsageError);
        // unknown flag
        CHECK_THROWS_AS(
            (void)cli::parse_args({"price", "--preset", "paper25", "--detach", "0.03", "--bogus"}),
            UsageError);
        // missing detach
        CHECK_THROWS_AS((void)cli::parse_args({"price", "--preset", "paper25"}), UsageError);
        // method/config conflicts
        CHECK_THROWS_AS((void)cli::parse_args({"price", "--preset", "paper25", "--detach", "0.03",
                                               "--method", "mc", "--order", "5"}),
                        UsageError);
        CHECK_THROWS_AS((void)cli::parse_args({"price", "--preset", "paper25", "--detach", "0.03",
                                               "--method", "hermite", "--samples", "1000"}),
                        UsageError);
        CHECK_THROWS_AS((void)cli::parse_args({"price", "--preset", "paper25", "--detach", "0.03",
                                               "--method", "gaussian", "--order", "5"}),
                        UsageError);
        CHECK_THROWS_AS((void)cli::parse_args({"price", "--preset", "paper25", "--detach", "0.03",
                                               "--method", "mc", "--nodes", "32"}),
                        UsageError);
        CHECK_THROWS_AS((void)cli::parse_args({"price", "--preset", "paper25", "--detach", "0.03",
                                               "--order", "11"}),
                        UsageError);
        // attach at or above detach
        CHECK_THROWS_AS((void)cli::parse_args({"price", "--preset", "paper25", "--attach", "0.03",
                                               "--detach", "0.03"}),
                        UsageError);
        // bad method name
        CHECK_THROWS_AS((void)cli::parse_args({"price", "--preset", "paper25", "--detach", "0.03",
                                               "--method", "fourier"}),
                        UsageError);
        // no subcommand
        CHECK_THROWS_AS((void)cli::parse_args({}), UsageError);
    }

    SUBCASE("help is not an error") {
        CHECK_THROWS_AS((void)cli::parse_args({"--help"}), cli::HelpRequested);
        CHECK_THROWS_AS((void)cli::parse_args({"price", "--help"}), cli::HelpRequested);
    }

    SUBCASE("other subcommands") {
        const auto presets = cli::parse_args({"presets"});
        CHECK(presets.command == cli::RunSpec::Command::list_presets);
        const auto exported = cli::parse_args({"export-preset", "paper30"});
        CHECK(exported.command == cli::RunSpec::Command::export_preset);
        CHECK(exported.preset == "paper30");
        CHECK_THROWS_AS((void)cli::parse_args({"export-preset"}), UsageError);
    }
}

TEST_CASE("run writes the results schema") {
    FileGuard out{temp_file("schema")};
    const int rc = run_main({"price", "--preset", "paper25", "--detach", "0.03,0.07", "--order",
                             "5", "--out", out.path.string()});
    REQUIRE(rc == 0);
    const std::string text = slurp(out.path);
    CHECK(text.rfind("attach,detach,method,order,nodes,value,std_error,runtime_ms,floored_points\n",
                     0) == 0);
    // header plus one row per tranche, LF terminated
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(text.find("0.03,hermite,5,64,") != std::string::npos);
    // deterministic columns only: std_error and runtime stay empty
    CHECK(text.find(",,,") != std::string::npos);
}

TEST_CASE("identical invocations produce identical bytes") {
    for (const auto& method : {std::string("hermite"), std::string("mc")}) {
        FileGuard a{temp_file("det_a")};
        FileGuard b{temp_file("det_b")};
        std::vector<std::string> args{"price",    "--preset", "paper25", "--detach",
                                      "0.03,0.1", "--method", method,    "--out"};
        if (method == "mc") {
            args.insert(args.end() - 1, "--samples");
            args.insert(args.end() - 1, "50000");
            args.insert(args.end() - 1, "--seed");
            args.insert(args.end() - 1, "11");
        }
        auto args_a = args;
        args_a.push_back(a.path.string());
        auto args_b = args;
        args_b.push_back(b.path.string());
        REQUIRE(run_main(args_a) == 0);
        REQUIRE(run_main(args_b) == 0);
        CHECK(slurp(a.path) == slurp(b.path));
    }
}

TEST_CASE("mc rows carry a standard error") {
    FileGuard out{temp_file("mc")};
    REQUIRE(run_main({"price", "--preset", "paper25", "--detach", "0.03", "--method", "mc",
                      "--samples", "20000", "--seed", "3", "--out", out.path.string()}) == 0);
    const std::string text = slurp(out.path);
    CHECK(text.find(",mc,,,") != std::string::npos); // no order, no nodes
    // value and std_error populated
    std::istringstream lines(text);
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    const auto fields = trancheloss::detail::split_fields(row);
    REQUIRE(fields.size() == 9);
    CHECK(!fields[5].empty());
    CHECK(!fields[6].empty());
    CHECK(fields[7].empty()); // runtime off without --timings
}

TEST_CASE("timings column is opt in") {
    FileGuard out{temp_file("timed")};
    REQUIRE(run_main({"price", "--preset", "paper25", "--detach", "0.03", "--timings", "--out",
                      out.path.string()}) == 0);
    std::istringstream lines(slurp(out.path));
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    const auto fields = trancheloss::detail::split_fields(row);
    REQUIRE(fields.size() == 9);
    CHECK(!fields[7].empty());
}

TEST_CASE("export-preset round trip") {
    FileGuard exported{temp_file("export")};
    REQUIRE(run_main({"export-preset", "paper30", "--out", exported.path.string()}) == 0);

    FileGuard from_preset{temp_file("rt_a")};
    FileGuard from_file{temp_file("rt_b")};
    REQUIRE(run_main({"price", "--preset", "paper30", "--detach", "0.03,0.07", "--out",
                      from_preset.path.string()}) == 0);
    REQUIRE(run_main({"price", "--portfolio", exported.path.string(), "--detach", "0.03,0.07",
                      "--out", from_file.path.string()}) == 0);
    CHECK(slurp(from_preset.path) == slurp(from_file.path));
}

TEST_CASE("exact method through the cli") {
    FileGuard exported{temp_file("small")};
    {
        const auto pf = truncate_portfolio(preset_portfolio("paper25"), 8);
        std::ofstream out(exported.path);
        write_portfolio_csv(pf, out);
    }
    FileGuard out{temp_file("exact")};
    REQUIRE(run_main({"price", "--portfolio", exported.path.string(), "--detach", "0.03",
                      "--method", "exact", "--out", out.path.string()}) == 0);
    const std::string text = slurp(out.path);
    CHECK(text.find(",exact,,64,") != std::string::npos);
}

TEST_CASE("exit codes") {
    SUBCASE("empty portfolio file is a validation failure") {
        FileGuard empty{temp_file("empty")};
        std::ofstream(empty.path).close();
        FileGuard out{temp_file("unused")};
        CHECK(run_main({"price", "--portfolio", empty.path.string(), "--detach", "0.03", "--out",
                        out.path.string()}) == 2);
    }

    SUBCASE("missing portfolio file is an io failure") {
        CHECK(run_main({"price", "--portfolio", "/no/such/file.csv", "--detach", "0.03"}) == 3);
    }

    SUBCASE("unwritable output is an io failure") {
        CHECK(run_main({"price", "--preset", "paper25", "--detach", "0.03", "--out",
                        "/no/such/dir/out.csv"}) == 3);
    }

    SUBCASE("usage failure") {
        CHECK(run_main({"price", "--preset", "paper25", "--detach", "0.07,0.03"}) == 1);
    }

    SUBCASE("unknown preset is a validation failure") {
        CHECK(run_main({"price", "--preset", "paper9", "--detach", "0.03"}) == 2);
    }

    SUBCASE("oversized pool for the exact method") {
        FileGuard out{temp_file("toolarge")};
        CHECK(run_main({"price", "--preset", "paper25", "--detach", "0.03", "--method", "exact",
                        "--out", out.path.string()}) == 2);
    }
}

TEST_CASE("presets listing") {
    FileGuard out{temp_file("presets")};
    REQUIRE(run_main({"presets", "--out"}) == 1); // missing value
    REQUIRE(run_main({"presets"}) == 0);          // stdout path
    // listing written to a file mentions every preset
    const auto spec = cli::parse_args({"presets"});
    auto with_out = spec;
    with_out.out_path = out.path.string();
    REQUIRE(cli::run(with_out) == 0);
    const std::string text = slurp(out.path);
    for (const auto name : preset_names())
        CHECK(text.find(std::string(name)) != std::string::npos);
}

TEST_CASE("portfolio csv parsing errors carry line information") {
    FileGuard bad{temp_file("bad")};
    {
        std::ofstream out(bad.path);
        out << "id,f,p,r,w1\n";
        out << "a,0.5,0.02,0.4,0.3\n";
        out << "b,0.5,not_a_number,0.4,0.3\n";
    }
    try {
        (void)read_portfolio_file(bad.path);
        FAIL("expected ParseError");
    } catch (const ParseError& err) {
        CHECK(std::string(err.what()).find("line 3") != std::string::npos);
    }
}

#ifdef TRANCHE_CLI_PATH
TEST_CASE("installed binary behaves like the in-process entry point") {
    if (std::system(nullptr) == 0)
        return; // no shell available
    FileGuard a{temp_file("bin_a")};
    FileGuard b{temp_file("bin_b")};
    const std::string base = std::string("\"") + TRANCHE_CLI_PATH +
                             "\" price --preset paper25 --detach 0.03 --method mc"
                             " --samples 20000 --seed 9 --out ";
    REQUIRE(std::system((base + a.path.string()).c_str()) == 0);
    REQUIRE(std::system((base + b.path.string()).c_str()) == 0);
    CHECK(slurp(a.path) == slurp(b.path));

    const int usage = std::system((std::string("\"") + TRANCHE_CLI_PATH +
                                   "\" price --detach 0.03 2>/dev/null")
                                      .c_str());
    CHECK(usage != 0);
}
#endif

TEST_SUITE_END();
