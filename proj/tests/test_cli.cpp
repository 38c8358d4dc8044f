#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "families.hpp"
#include "maxembed/cli/commands.hpp"
#include "maxembed/cli/config.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace maxembed;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("maxembed_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    Outcome run(std::vector<std::string> args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return {code, out.str(), err.str()};
    }

    fs::path out(const std::string& name) const { return dir_ / name; }

    fs::path write(const std::string& name, const std::string& text) const {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    static nlohmann::json json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

    fs::path dir_;
};

std::string surface_csv(const CallSurface& s) {
    std::string text = "t,x,c\n";
    for (std::size_t j = 0; j < s.t_grid().size(); ++j) {
        for (std::size_t i = 0; i < s.x_grid().size(); ++i) {
            std::ostringstream row;
            row.precision(17);
            row << s.t_grid()[j] << "," << s.x_grid()[i] << "," << s.node(j, i) << "\n";
            text += row.str();
        }
    }
    return text;
}

std::vector<std::vector<double>> csv_rows(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_F(CliTest, CostWritesCurveAndSidecar) {
    const Outcome r = run({"cost", "--out", out("o").string(), "--set", "solver.m_grid=0.4,0.8,1.2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(slurp(out("o") / "cost_curve.csv"));
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_GT(rows[i][1], 0.0);
        EXPECT_LT(rows[i][1], 1.0);
        EXPECT_EQ(rows[i][2], 1.0);
        if (i > 0) EXPECT_LE(rows[i][1], rows[i - 1][1]);
        EXPECT_NEAR(rows[i][1], oracle::hardy_littlewood(rows[i][0]).second, 2e-3);
    }
    EXPECT_EQ(json(out("o") / "minimizers.json").size(), 3u);
}

TEST_F(CliTest, EmptyGridIsUsageError) {
    const Outcome r = run({"cost", "--out", out("o").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(fs::exists(out("o")));
}

TEST_F(CliTest, BadArgumentsAreUsageErrors) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"cost", "--set", "solver.nope=1"}).code, 2);
    EXPECT_EQ(run({"cost", "--set", "solver.m_grid=abc"}).code, 2);
    EXPECT_EQ(run({"cost", "--config", out("missing.ini").string()}).code, 2);
}

TEST_F(CliTest, SurfaceFailingPeacockIsRefused) {
    // c(1, 0) below c(0.5, 0).
    const fs::path surface = write("bad.csv",
                                   "t,x,c\n0.5,-1,1.05\n0.5,0,0.3\n0.5,1,0.05\n"
                                   "1,-1,1.08\n1,0,0.2\n1,1,0.083\n");
    const Outcome r = run({"cost", "--out", out("o").string(), "--set", "family.kind=tabulated",
                       "family.surface=" + surface.string(), "solver.m_grid=0.5"});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("convex-order"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(out("o") / "cost_curve.csv"));
}

TEST_F(CliTest, ConfigFileWithRelativeSurface) {
    write("toy.csv", "t,x,c\n1,-1,1.08\n1,0,0.399\n1,1,0.083\n");
    const fs::path cfg = write("run.ini",
                               "; toy surface next to the config\n[family]\nkind = tabulated\nsurface = toy.csv\n"
                               "[solver]\nm_grid = 0.5\n[output]\ndir = " +
                                   out("o").string() + "\n");
    const Outcome r = run({"cost", "--config", cfg.string()});
    EXPECT_NE(r.code, 2) << r.err;
    EXPECT_NE(r.code, 3) << r.err;
    EXPECT_TRUE(fs::exists(out("o") / "cost_curve.csv"));
}

TEST_F(CliTest, SampleConfigParses) {
    const cli::RunConfig c = cli::load_config(fs::path(MAXEMBED_SOURCE_DIR) / "configs" / "gaussian_digital.ini");
    EXPECT_EQ(c.family.kind, "gaussian");
    ASSERT_EQ(c.atoms.size(), 1u);
    EXPECT_DOUBLE_EQ(c.atoms[0].level, 0.797885);
    EXPECT_TRUE(c.seed_set);
    EXPECT_EQ(c.labels.size(), 3u);
}

TEST_F(CliTest, BoundForDigitalAndConstantPayoffs) {
    Outcome r = run({"bound", "--out", out("d").string(), "--set", "payoff.atoms=0.797885:1", "solver.m_grid=0.797885"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto d = json(out("d") / "bound.json");
    EXPECT_NEAR(d["bound"].get<double>(), 0.5, 1e-3);
    EXPECT_EQ(d["bound"].get<double>(), d["curve"][0]["C"].get<double>());

    r = run({"bound", "--out", out("c").string(), "--set", "payoff.base=1.75"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json(out("c") / "bound.json")["bound"].get<double>(), 1.75);

    r = run({"bound", "--out", out("x").string(), "--set", "payoff.atoms=3:1", "solver.m_grid=0.5,1"});
    EXPECT_EQ(r.code, 3);
}

TEST_F(CliTest, SimulateNeedsSeed) {
    EXPECT_EQ(run({"simulate", "--out", out("o").string()}).code, 2);
    EXPECT_FALSE(fs::exists(out("o")));
}

TEST_F(CliTest, SimulateWritesSummary) {
    const Outcome r = run({"simulate", "--seed", "4", "--out", out("o").string(), "--set", "simulation.n_paths=2000",
                       "simulation.dt=1e-3", "simulation.labels=0.5,1", "payoff.atoms=0.797885:1",
                       "simulation.samples_csv=true"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json(out("o") / "simulation.json");
    EXPECT_EQ(j["n_paths"], 2000);
    EXPECT_EQ(j["ks"].size(), 2u);
    EXPECT_NEAR(j["primal"]["mean"].get<double>(), 0.5, j["primal"]["ci99"].get<double>() + 0.02);
    EXPECT_EQ(j["exceedance"][0]["p"], j["primal"]["mean"]);
    const std::string samples = slurp(out("o") / "samples.csv");
    EXPECT_EQ(samples.rfind("path_id,label,value,max,tau_steps\n", 0), 0u);
    EXPECT_EQ(std::count(samples.begin(), samples.end(), '\n'), 1 + 2 * 2000);
}

TEST_F(CliTest, SimulateRefusesNonImrvUnlessForced) {
    const fs::path surface = write("spliced.csv", surface_csv(*testfam::spliced_non_imrv().surface()));
    const std::vector<std::string> base{"simulate", "--seed", "1", "--out", out("o").string(), "--set",
                                        "family.kind=tabulated", "family.surface=" + surface.string(),
                                        "simulation.labels=0.5,0.75", "simulation.n_paths=20", "simulation.dt=1e-3"};
    const Outcome refused = run(base);
    EXPECT_EQ(refused.code, 3);
    EXPECT_NE(refused.err.find("imrv"), std::string::npos);
    auto forced_args = base;
    forced_args.insert(forced_args.begin() + 1, "--force");
    EXPECT_EQ(run(forced_args).code, 0);
}

TEST_F(CliTest, CheckFamilyReports) {
    Outcome r = run({"check-family", "--out", out("g").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(json(out("g") / "family_report.json")["imrv"]["pass"].get<bool>());

    const fs::path surface = write("spliced.csv", surface_csv(*testfam::spliced_non_imrv().surface()));
    r = run({"check-family", "--out", out("s").string(), "--set", "family.kind=tabulated",
             "family.surface=" + surface.string()});
    EXPECT_EQ(r.code, 1);
    const auto j = json(out("s") / "family_report.json");
    EXPECT_TRUE(j["peacock"]["pass"].get<bool>());
    EXPECT_FALSE(j["imrv"]["pass"].get<bool>());
}

TEST_F(CliTest, VerifyToggledOffIsEmptyPass) {
    const Outcome r = run({"verify", "--out", out("o").string(), "--set", "verify.pathwise=false",
                       "verify.superhedge=false", "verify.martingale=false"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json(out("o") / "verify.json");
    EXPECT_TRUE(j["pass"].get<bool>());
    EXPECT_TRUE(j["suites"].empty());
}

TEST_F(CliTest, VerifyPassesWithOptimalBoundary) {
    const Outcome r = run({"verify", "--seed", "9", "--out", out("o").string(), "--set", "payoff.atoms=0.797885:1",
                       "verify.pathwise_cases=2000", "verify.superhedge_paths=500", "simulation.dt=1e-3",
                       "verify.martingale_samples=20000"});
    ASSERT_EQ(r.code, 0) << r.err << slurp(out("o") / "verify.json");
    const auto j = json(out("o") / "verify.json");
    EXPECT_EQ(j["suites"].size(), 3u);
}

TEST_F(CliTest, VerifyFailsWithInjectedBoundary) {
    const Outcome r = run({"verify", "--seed", "9", "--out", out("o").string(), "--set", "payoff.atoms=0.797885:1",
                       "verify.pathwise=false", "verify.superhedge_paths=500", "simulation.dt=1e-3",
                       "verify.martingale_samples=20000", "verify.inject_breakpoints=0,1", "verify.inject_values=-10"});
    EXPECT_EQ(r.code, 1) << r.err;
    const auto j = json(out("o") / "verify.json");
    EXPECT_FALSE(j["pass"].get<bool>());
    bool mean_flagged = false;
    for (const auto& s : j["suites"]) {
        if (s["check"] == "superhedge") mean_flagged = !s["mean_ok"].get<bool>();
    }
    EXPECT_TRUE(mean_flagged);
}

TEST_F(CliTest, GapForConstantAndDigital) {
    Outcome r = run({"gap", "--seed", "2", "--out", out("c").string(), "--set", "payoff.base=0.3", "simulation.n_paths=100",
                 "simulation.dt=1e-3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json(out("c") / "gap.json")["gap"].get<double>(), 0.0);

    r = run({"gap", "--seed", "2", "--out", out("d").string(), "--set", "payoff.atoms=0.797885:1",
             "solver.m_grid=0.797885", "simulation.n_paths=5000", "simulation.dt=1e-3", "gap.allowance=0.02"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json(out("d") / "gap.json")["status"], "ok");

    r = run({"gap", "--seed", "2", "--out", out("n").string(), "--set", "payoff.atoms=0.797885:1",
             "solver.m_grid=0.797885", "simulation.n_paths=5000", "simulation.dt=1e-3",
             "simulation.boundary_shift=0.2", "gap.allowance=0.02"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto n = json(out("n") / "gap.json");
    EXPECT_EQ(n["status"], "gap");
    EXPECT_GT(n["gap"].get<double>(), 0.0);
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
    const std::vector<std::string> sets{"--set", "payoff.atoms=0.797885:1", "solver.m_grid=0.5,0.797885",
                                        "simulation.n_paths=1000", "simulation.dt=1e-3", "simulation.samples_csv=1"};
    std::vector<int> codes;
    for (const char* name : {"a", "b"}) {
        std::vector<std::string> args{"gap", "--seed", "3", "--out", out(name).string()};
        args.insert(args.end(), sets.begin(), sets.end());
        // A short coarse run may legitimately flag the gap; only sameness matters here.
        codes.push_back(run(args).code);
        args[0] = "simulate";
        ASSERT_EQ(run(args).code, 0);
        args[0] = "bound";
        ASSERT_EQ(run(args).code, 0);
    }
    EXPECT_EQ(codes[0], codes[1]);
    EXPECT_LE(codes[0], 1);
    for (const char* f : {"gap.json", "simulation.json", "samples.csv", "bound.json", "cost_curve.csv",
                          "minimizers.json"}) {
        EXPECT_EQ(slurp(out("a") / f), slurp(out("b") / f)) << f;
    }
}
