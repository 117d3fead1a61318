#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>

#include "elastica/cli.hpp"
#include "elastica/errors.hpp"
#include "elastica/records.hpp"
#include "pipeline_fixture.hpp"

using namespace elastica;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "elastica");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

class Scratch {
public:
    explicit Scratch(const std::string& name)
        : root_(fs::temp_directory_path() / ("elastica_cli_" + name + "_" + std::to_string(::getpid()))) {
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    ~Scratch() { fs::remove_all(root_); }
    std::string operator/(const std::string& leaf) const { return (root_ / leaf).string(); }

private:
    fs::path root_;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> snapshot(const std::string& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = slurp(e.path().string());
    return files;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& path) {
    std::istringstream in(slurp(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

std::string write_tiny_config(const Scratch& s) {
    const std::string path = s / "tiny.toml";
    write_file_atomic(path, fixtures::kTinyToml);
    return path;
}

// simulate -> train -> evaluate into `prefix`-named directories.
void run_pipeline(const Scratch& s, const std::string& config, const std::string& prefix) {
    auto r = invoke({"simulate", "--config", config, "--out", s / (prefix + "data")});
    ASSERT_EQ(r.code, 0) << r.err;
    r = invoke({"train", "--config", config, "--data", s / (prefix + "data"), "--out", s / (prefix + "model")});
    ASSERT_EQ(r.code, 0) << r.err;
    r = invoke({"evaluate", "--data", s / (prefix + "data"), "--model", s / (prefix + "model"), "--out",
                s / (prefix + "eval")});
    ASSERT_EQ(r.code, 0) << r.err;
}

}  // namespace

TEST(Cli, HelpAndVersionExitZero) {
    EXPECT_EQ(invoke({"--help"}).code, 0);
    const auto v = invoke({"--version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_EQ(v.out, std::string(ELASTICA_VERSION) + "\n");
}

TEST(Cli, UsageErrorsAreOneParsableLine) {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {}, {"frobnicate"}, {"simulate"}, {"train", "--data", "x"}, {"simulate", "--out", "x", "--set", "bogus=1"}}) {
        const auto r = invoke(args);
        EXPECT_EQ(r.code, 2);
        EXPECT_EQ(r.err.rfind("error kind=usage code=2 message=\"", 0), 0u) << r.err;
        EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
    }
    const auto r = invoke({"simulate", "--out", "x", "--set", "train.beta=-1"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("beta"), std::string::npos) << r.err;
}

TEST(Cli, MissingInputsAreIoErrors) {
    Scratch s("missing");
    const auto r = invoke({"train", "--data", s / "nope", "--out", s / "model"});
    EXPECT_EQ(r.code, 5);
    EXPECT_EQ(r.err.rfind("error kind=io code=5", 0), 0u) << r.err;
    EXPECT_EQ(invoke({"evaluate", "--data", s / "nope", "--model", s / "nope", "--out", s / "e"}).code, 5);
    EXPECT_EQ(invoke({"simulate", "--config", s / "absent.toml", "--out", s / "d"}).code, 5);
}

TEST(Cli, SmokePipelineWritesEveryFile) {
    Scratch s("smoke");
    const auto config = write_tiny_config(s);
    run_pipeline(s, config, "");
    for (const char* f : {"rooms.jsonl", "reservations.jsonl", "behavior.jsonl", "rooms.csv", "reservations.csv",
                          "behavior.csv", "scenario.toml", "truth.json"}) {
        EXPECT_TRUE(fs::exists(s / ("data/" + std::string(f)))) << f;
    }
    for (const char* f : {"config.toml", "assignment.csv", "graph_edges.csv", "embeddings.json", "checkpoint.json",
                          "loss.csv"}) {
        EXPECT_TRUE(fs::exists(s / ("model/" + std::string(f)))) << f;
    }
    for (const char* f : {"eval.json", "eval.csv", "predictions.csv"}) {
        EXPECT_TRUE(fs::exists(s / ("eval/" + std::string(f)))) << f;
    }
    EXPECT_EQ(slurp(s / "model/loss.csv").rfind("# elastica " ELASTICA_VERSION " config=", 0), 0u);
    EXPECT_EQ(csv_rows(s / "model/loss.csv").size(), 3u);  // header + 2 epochs

    const auto p = invoke({"price", "--data", s / "data", "--model", s / "model", "--out", s / "price.csv"});
    ASSERT_EQ(p.code, 0) << p.err;
    const auto prices = csv_rows(s / "price.csv");
    ASSERT_EQ(prices.size(), 13u);
    for (std::size_t i = 1; i < prices.size(); ++i) {
        const double price = std::stod(prices[i][2]);
        EXPECT_GE(price, 50.0);
        EXPECT_LE(price, 300.0);
    }
    const auto narrow = invoke({"price", "--data", s / "data", "--model", s / "model", "--out", s / "narrow.csv",
                                "--p-min", "120", "--p-max", "130", "--night", "2024-02-10"});
    ASSERT_EQ(narrow.code, 0) << narrow.err;
    for (const auto& row : csv_rows(s / "narrow.csv")) {
        if (row[0] == "rid") continue;
        EXPECT_EQ(row[1], "2024-02-10");
        EXPECT_GE(std::stod(row[2]), 120.0);
        EXPECT_LE(std::stod(row[2]), 130.0);
    }
    EXPECT_EQ(invoke({"price", "--data", s / "data", "--model", s / "model", "--out", s / "bad.csv", "--p-min", "200",
                      "--p-max", "100"})
                  .code,
              3);
}

TEST(Cli, DemandCurveIsStrictlyDecreasing) {
    Scratch s("curve");
    const auto config = write_tiny_config(s);
    run_pipeline(s, config, "");
    for (const auto& row : csv_rows(s / "data/rooms.csv")) {
        if (row[0] == "rid") continue;
        const auto r = invoke({"demand-curve", "--data", s / "data", "--model", s / "model", "--out", s / "curve.csv",
                               "--rid", row[0], "--points", "57"});
        ASSERT_EQ(r.code, 0) << r.err;
        const auto rows = csv_rows(s / "curve.csv");
        ASSERT_EQ(rows.size(), 58u);
        for (std::size_t i = 2; i < rows.size(); ++i) {
            EXPECT_LT(std::stod(rows[i][1]), std::stod(rows[i - 1][1]));
            EXPECT_GT(std::stod(rows[i][0]), std::stod(rows[i - 1][0]));
        }
    }
    const auto unknown = invoke({"demand-curve", "--data", s / "data", "--model", s / "model", "--out",
                                 s / "x.csv", "--rid", "987654"});
    EXPECT_EQ(unknown.code, 3);
    EXPECT_EQ(unknown.err.rfind("error kind=lookup code=3", 0), 0u) << unknown.err;
    EXPECT_EQ(invoke({"demand-curve", "--data", s / "data", "--model", s / "model", "--out", s / "x.csv", "--rid",
                      "0", "--points", "1"})
                  .code,
              2);
}

TEST(Cli, IdenticalRunsAreByteIdenticalAndInputsUntouched) {
    Scratch s("repro");
    const auto config = write_tiny_config(s);
    run_pipeline(s, config, "a_");
    const auto data_before = snapshot(s / "a_data");
    const auto model_before = snapshot(s / "a_model");
    run_pipeline(s, config, "b_");
    for (const char* dir : {"data", "model", "eval"}) {
        const auto a = snapshot(s / ("a_" + std::string(dir)));
        const auto b = snapshot(s / ("b_" + std::string(dir)));
        ASSERT_EQ(a.size(), b.size()) << dir;
        for (const auto& [name, text] : a) EXPECT_EQ(text, b.at(name)) << dir << "/" << name;
    }
    ASSERT_EQ(invoke({"evaluate", "--data", s / "a_data", "--model", s / "a_model", "--out", s / "a_eval2"}).code, 0);
    EXPECT_EQ(snapshot(s / "a_data"), data_before);
    EXPECT_EQ(snapshot(s / "a_model"), model_before);
}

TEST(Cli, SeedPrecedence) {
    Scratch s("seed");
    const auto path = s / "seed.toml";
    write_file_atomic(path, "seed = 3\n");
    EXPECT_EQ(cli::resolve_config(path, {}, nullptr).canonical(), Config::parse("seed = 3\n").canonical());
    EXPECT_EQ(cli::resolve_config(path, {}, "9").canonical(), Config::parse("seed = 9\n").canonical());
    EXPECT_EQ(cli::resolve_config(path, {"seed=4"}, "9").canonical(), Config::parse("seed = 4\n").canonical());
    EXPECT_EQ(cli::resolve_config("", {}, "").canonical(), Config{}.canonical());
}

TEST(Cli, CorruptCheckpointIsDataError) {
    Scratch s("corrupt");
    const auto config = write_tiny_config(s);
    run_pipeline(s, config, "");
    write_file_atomic(s / "model/checkpoint.json", "{\"not\": \"a checkpoint\"");
    const auto r = invoke({"evaluate", "--data", s / "data", "--model", s / "model", "--out", s / "e2"});
    EXPECT_EQ(r.code, 3);
    EXPECT_EQ(r.err.rfind("error kind=data code=3", 0), 0u) << r.err;
}
