#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"

using namespace maxdeficit;

namespace {
struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "maxdeficit");
    std::ostringstream out, err;
    const int code = cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

Table csv(const std::string& text) {
    std::istringstream is(text);
    return read_csv(is);
}

std::string column(const Table& t, std::size_t row, const std::string& name) {
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == name) return t.rows.at(row).at(i);
    throw std::runtime_error("no column " + name);
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }
}  // namespace

TEST(Cli, MeasureExamples) {
    auto r = run({"measure", "coherent", "--line", "10,1,12", "--g", "identity", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(column(csv(r.out), 0, "value"), "5");
    r = run({"measure", "proportional", "--line", "10,1,12", "--g", "identity", "--delta", "0.05", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(parse_double(column(csv(r.out), 0, "value")), 12.49, 0.01);
    EXPECT_EQ(column(csv(r.out), 0, "method"), "lambert-w");
    r = run({"measure", "convex", "--line", "10,1,12", "--g", "identity", "--A", "5", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(parse_double(column(csv(r.out), 0, "value")), 0.0, 1e-9);
}

TEST(Cli, MeasureVariants) {
    auto r = run({"measure", "ear", "--line", "10,1,12", "--A", "5", "--A", "20", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = csv(r.out);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_NEAR(parse_double(column(t, 1, "value")), -1.726, 1e-3);
    r = run({"measure", "critical", "--line", "10,1,12", "--alpha", "0.01", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(column(csv(r.out), 0, "g"), "tvar:0.01");
    r = run({"measure", "coherent", "--line", "10,1,12", "--t", "50", "--n", "2000", "--seed", "3", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(column(csv(r.out), 0, "method"), "empirical");
    r = run({"measure", "premium-bound", "--line", "10,1,12", "--n", "5000", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(parse_double(column(csv(r.out), 0, "estimate")), 10.0, 0.5);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"bogus"}).code, 2);
    EXPECT_EQ(run({"measure", "coherent", "--line", "10,1"}).code, 2);
    EXPECT_EQ(run({"measure", "coherent", "--line", "10,1,12", "--g", "ph:2"}).code, 2);
    EXPECT_EQ(run({"measure", "nonsense", "--line", "10,1,12"}).code, 2);
    EXPECT_EQ(run({"measure", "convex", "--line", "10,1,12", "--A", "-1"}).code, 3);
    EXPECT_EQ(run({"measure", "coherent", "--line", "10,1,9"}).code, 3);
    EXPECT_EQ(run({"figure", "--R", "1.5"}).code, 3);
    EXPECT_EQ(run({"table", "7"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, Tables) {
    auto r = run({"table", "1", "--format", "csv"});
    ASSERT_EQ(r.code, 0);
    auto t = csv(r.out);
    EXPECT_NEAR(parse_double(column(t, 1, "a")), 0.6667, 5e-5);
    EXPECT_NEAR(parse_double(column(t, 2, "b")), 0.005, 5e-5);

    r = run({"table", "2", "--format", "csv"});
    ASSERT_EQ(r.code, 0);
    t = csv(r.out);
    EXPECT_NEAR(parse_double(column(t, 0, "u=10")), 2.78, 0.01);
    EXPECT_EQ(parse_double(column(t, 2, "u=10")), 0.0);

    r = run({"table", "4", "--format", "csv"});
    ASSERT_EQ(r.code, 0);
    t = csv(r.out);
    ASSERT_EQ(t.rows.size(), 3u);
    EXPECT_EQ(column(t, 0, "m2_u1"), "0");
    EXPECT_NEAR(parse_double(column(t, 2, "m2_u2")), 103.97, 0.01);
    EXPECT_NEAR(parse_double(column(t, 1, "m1_u1")), 10.0, 1e-9);

    r = run({"table", "3"});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("penalized"), std::string::npos);
}

TEST(Cli, Allocate) {
    auto r = run({"allocate", "--line", "10,1,12", "--line", "1,10,15", "--line", "0.1,100,20", "--u", "10",
                  "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto t = csv(r.out);
    EXPECT_EQ(column(t, 2, "active"), "no");
    EXPECT_NEAR(parse_double(column(t, 0, "u_star")), 2.78, 0.01);
    r = run({"allocate", "--line", "10,1,12", "--line", "1,10,15", "--u", "30", "--method", "aggregate", "--g",
             "ph:0.5", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    t = csv(r.out);
    EXPECT_NEAR(parse_double(column(t, 0, "u_star")) + parse_double(column(t, 1, "u_star")), 30.0, 1e-4);
    EXPECT_EQ(run({"allocate", "--line", "10,1,12", "--u", "5", "--method", "aggregate", "--g", "varstep:0.1"}).code, 3);
    EXPECT_EQ(run({"allocate", "--line", "10,1,12", "--u", "5", "--gamma", "1", "--gamma", "2"}).code, 2);
}

TEST(Cli, FigureContract) {
    auto r = run({"figure", "--R", "0.1", "--R", "0.2", "--R", "0.3", "--g", "identity", "--format", "csv",
                  "--precision", "12"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = csv(r.out);
    ASSERT_EQ(t.rows.size(), 3u);
    double prev = 1e300;
    for (std::size_t i = 0; i < 3; ++i) {
        const double R = parse_double(column(t, i, "R"));
        const double coh = parse_double(column(t, i, "coherent[identity]"));
        EXPECT_LT(coh, prev);
        prev = coh;
        EXPECT_GE(parse_double(column(t, i, "proportional_d0.05[identity]")), coh);
        const double gap = parse_double(column(t, i, "convex_A5[identity]")) -
                           parse_double(column(t, i, "convex_A20[identity]"));
        EXPECT_NEAR(gap, std::log(4.0) / R, 1e-9);
    }
}

TEST(Cli, CsvRoundTripIsStable) {
    const auto r = run({"table", "2", "--format", "csv", "--precision", "9"});
    ASSERT_EQ(r.code, 0);
    const auto t = csv(r.out);
    std::ostringstream again;
    write_csv(again, t);
    EXPECT_EQ(again.str(), r.out);
    for (const auto& row : t.rows)
        for (const auto& cell : row) EXPECT_EQ(format_number(parse_double(cell), 9), cell);
}

TEST(Cli, SimulateWritesDeterministicBatch) {
    const auto a = temp_file("maxdeficit_cli_a.txt");
    const auto b = temp_file("maxdeficit_cli_b.txt");
    auto r = run({"simulate", "--line", "10,1,12", "--t", "50", "--n", "3000", "--seed", "11", "--out", a.string(),
                  "--u", "0", "--u", "5", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(csv(r.out).rows.size(), 2u);
    r = run({"simulate", "--line", "10,1,12", "--t", "50", "--n", "3000", "--seed", "11", "--out", b.string(),
             "--threads", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    EXPECT_EQ(slurp(a), slurp(b));
    std::ifstream in(a);
    EXPECT_EQ(read_batch(in).n, 3000u);

    r = run({"simulate", "--line", "10,1,12", "--t", "5", "--n", "1", "--out", b.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream one(b);
    EXPECT_EQ(read_batch(one).samples.size(), 1u);
    std::filesystem::remove(a);
    std::filesystem::remove(b);
    EXPECT_EQ(run({"simulate", "--line", "10,1,12", "--n", "10"}).code, 2);
}

TEST(Cli, SeedFromEnvironment) {
    ::setenv("MAXDEFICIT_SEED", "77", 1);
    const auto a = run({"simulate", "--line", "10,1,12", "--t", "20", "--n", "500", "--u", "3", "--format", "csv"});
    const auto b = run({"simulate", "--line", "10,1,12", "--t", "20", "--n", "500", "--u", "3", "--format", "csv",
                        "--seed", "77"});
    ::unsetenv("MAXDEFICIT_SEED");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, ConfigFileWithFlagOverride) {
    const auto path = temp_file("maxdeficit_cli.cfg");
    {
        std::ofstream cfg(path);
        cfg << "# sample\nline = 10,1,12\ng = identity\ndelta = 0.05\nformat = csv\n";
    }
    auto r = run({"measure", "proportional", "--config", path.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(parse_double(column(csv(r.out), 0, "value")), 12.484, 1e-3);
    r = run({"measure", "proportional", "--config", path.string(), "--delta", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LT(parse_double(column(csv(r.out), 0, "value")), 5.0);
    {
        std::ofstream cfg(path);
        cfg << "colour = blue\n";
    }
    EXPECT_EQ(run({"table", "1", "--config", path.string()}).code, 2);
    std::filesystem::remove(path);
}

TEST(Cli, CheckSubcommandPasses) {
    const auto r = run({"check", "--format", "csv"});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Report, ConfigParser) {
    std::istringstream in("a = 1\n  # comment\n\nb=two # trailing\nline=1,2,3\nline=4,5,6\n");
    const auto cfg = read_config(in);
    EXPECT_EQ(cfg.count("line"), 2u);
    EXPECT_EQ(cfg.find("b")->second, "two");
    std::istringstream bad("novalue\n");
    EXPECT_THROW(read_config(bad), ArgumentError);
}

TEST(Report, TextTableAligned) {
    Table t;
    t.header = {"x", "long_name"};
    t.add_row({"1", "2"});
    std::ostringstream os;
    write_text(os, t);
    EXPECT_EQ(os.str(), "x  long_name\n------------\n1          2\n");
    EXPECT_THROW(t.add_row({"1"}), ArgumentError);
}
