#include "corrnet/io.hpp"
#include "corrnet/panel.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(CORRNET_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("corrnet_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("synth emits a loadable long panel and a manifest") {
    TempDir dir("synth");
    REQUIRE(run_cli("synth --entities 6 --periods 30 --factors 2 --noise 0.4 --seed 7 --out " +
                    (dir / "gen")) == 0);
    std::string csv = slurp(dir.path / "gen" / "panel.csv");
    corrnet::Panel p = corrnet::load_panel(csv, corrnet::PanelFormat::long_form);
    CHECK(p.entities() == 6);
    CHECK(p.periods() == 30);

    auto manifest = corrnet::Json::parse(slurp(dir.path / "gen" / "manifest.json"));
    CHECK(manifest["subcommand"] == "synth");
    CHECK(manifest["parameters"]["seed"] == 7);
    CHECK(manifest["outputs"] == corrnet::Json::array({"panel.csv"}));
}

TEST_CASE("embed writes embedding.json and eigs.csv") {
    TempDir dir("embed");
    REQUIRE(run_cli("synth --entities 8 --periods 40 --factors 2 --seed 3 --out " + (dir / "gen")) == 0);
    REQUIRE(run_cli("embed --input " + (dir / "gen") + "/panel.csv --dim 3 --permutations 20 --seed 1 --out " +
                    (dir / "emb")) == 0);

    auto j = corrnet::Json::parse(slurp(dir.path / "emb" / "embedding.json"));
    CHECK(j["entities"].size() == 8);
    CHECK(j["coordinates"][0].size() == 3);
    CHECK(j["surrogate"]["permutations"] == 20);

    std::string eigs = slurp(dir.path / "emb" / "eigs.csv");
    CHECK(line_count(eigs) == 9);  // header + 8 ranks

    auto manifest = corrnet::Json::parse(slurp(dir.path / "emb" / "manifest.json"));
    CHECK(manifest["resolved"]["dim"] == 3);
}

TEST_CASE("embed with auto dim records the choice in the manifest") {
    TempDir dir("auto");
    REQUIRE(run_cli("synth --entities 10 --periods 60 --factors 2 --noise 0.3 --seed 5 --out " +
                    (dir / "gen")) == 0);
    REQUIRE(run_cli("embed --input " + (dir / "gen") + "/panel.csv --dim auto --permutations 50 --seed 2 --out " +
                    (dir / "emb")) == 0);
    auto manifest = corrnet::Json::parse(slurp(dir.path / "emb" / "manifest.json"));
    CHECK(manifest["parameters"]["dim"] == "auto");
    CHECK(manifest["resolved"].contains("effective_dim"));
}

TEST_CASE("missing input exits 2 without partial outputs") {
    TempDir dir("missing");
    CHECK(run_cli("embed --input " + (dir / "nope.csv") + " --out " + (dir / "emb")) == 2);
    CHECK(!fs::exists(dir.path / "emb" / "embedding.json"));
    CHECK(!fs::exists(dir.path / "emb" / "manifest.json"));
}

TEST_CASE("validation failures name the offending entity") {
    TempDir dir("constant");
    {
        std::ofstream out(dir / "panel.csv");
        out << "entity,period,value\n";
        for (int t = 0; t < 6; ++t) out << "AA,p" << t << "," << (t * t % 7) << "\n";
        for (int t = 0; t < 6; ++t) out << "BB,p" << t << ",5\n";
        for (int t = 0; t < 6; ++t) out << "CC,p" << t << "," << (t % 3) << "\n";
        for (int t = 0; t < 6; ++t) out << "DD,p" << t << "," << ((t * 2 + 1) % 5) << "\n";
    }
    std::string cmd = std::string(CORRNET_CLI_PATH) + " embed --input " + (dir / "panel.csv") +
                      " --permutations 10 --out " + (dir / "emb") + " 2>" + (dir / "err.txt") + " >/dev/null";
    int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 2);
    std::string err = slurp(dir.path / "err.txt");
    CHECK(err.find("BB") != std::string::npos);
    CHECK(err.find("zero variance") != std::string::npos);

    // --drop-constant proceeds with the remaining three entities
    CHECK(run_cli("embed --input " + (dir / "panel.csv") + " --permutations 10 --dim 2 --drop-constant --out " +
                  (dir / "emb2")) == 0);
    auto j = corrnet::Json::parse(slurp(dir.path / "emb2" / "embedding.json"));
    CHECK(j["entities"].size() == 3);
}

TEST_CASE("rolling writes the expected row counts") {
    TempDir dir("rolling");
    REQUIRE(run_cli("synth --entities 5 --periods 110 --factors 2 --seed 11 --out " + (dir / "gen")) == 0);
    REQUIRE(run_cli("rolling --input " + (dir / "gen") + "/panel.csv --window-length 56 --dim 3 --seed 1 --out " +
                    (dir / "roll")) == 0);
    CHECK(line_count(slurp(dir.path / "roll" / "rolling.csv")) == 56);            // header + 55
    CHECK(line_count(slurp(dir.path / "roll" / "entities_rolling.csv")) == 276);  // header + 55*5

    REQUIRE(run_cli("rolling --input " + (dir / "gen") + "/panel.csv --window-length 56 --step 4 --dim 3 "
                    "--seed 1 --out " + (dir / "roll4")) == 0);
    CHECK(line_count(slurp(dir.path / "roll4" / "rolling.csv")) == 15);  // header + 14
}

TEST_CASE("network exports a complete weighted graph") {
    TempDir dir("network");
    REQUIRE(run_cli("synth --entities 6 --periods 40 --factors 2 --seed 13 --out " + (dir / "gen")) == 0);
    REQUIRE(run_cli("network --input " + (dir / "gen") + "/panel.csv --dim 2 --topk 3 --seed 1 --out " +
                    (dir / "net")) == 0);

    auto graph = corrnet::Json::parse(slurp(dir.path / "net" / "graph.json"));
    CHECK(graph["nodes"].size() == 6);
    CHECK(graph["edges"].size() == 15);

    std::string dot = slurp(dir.path / "net" / "graph.dot");
    std::size_t edges = 0, pos = 0;
    while ((pos = dot.find(" -- ", pos)) != std::string::npos) {
        ++edges;
        pos += 4;
    }
    CHECK(edges == 15);

    std::string metrics = slurp(dir.path / "net" / "metrics.csv");
    CHECK(line_count(metrics) == 8);  // header + 6 entities + window row

    // topk beyond the pair count is a validation error
    CHECK(run_cli("network --input " + (dir / "gen") + "/panel.csv --dim 2 --topk 16 --out " +
                  (dir / "net2")) == 2);
}

TEST_CASE("mst exports a tree over the full distances or the reduced space") {
    TempDir dir("mst");
    REQUIRE(run_cli("synth --entities 24 --periods 60 --factors 3 --seed 17 --out " + (dir / "gen")) == 0);
    REQUIRE(run_cli("mst --input " + (dir / "gen") + "/panel.csv --out " + (dir / "tree")) == 0);
    CHECK(line_count(slurp(dir.path / "tree" / "mst_edges.csv")) == 24);  // header + 23 edges

    REQUIRE(run_cli("mst --input " + (dir / "gen") + "/panel.csv --dim 3 --out " + (dir / "tree3")) == 0);
    auto manifest = corrnet::Json::parse(slurp(dir.path / "tree3" / "manifest.json"));
    CHECK(manifest["resolved"]["dim"] == 3);
}

TEST_CASE("window flags select a sub-panel") {
    TempDir dir("window");
    REQUIRE(run_cli("synth --entities 5 --periods 80 --factors 1 --seed 23 --out " + (dir / "gen")) == 0);
    REQUIRE(run_cli("volume --input " + (dir / "gen") + "/panel.csv --window-start 10 --window-length 40 "
                    "--dim 3 --out " + (dir / "vol")) == 0);
    auto j = corrnet::Json::parse(slurp(dir.path / "vol" / "volume.json"));
    CHECK(j["window_start"] == "t10");
    CHECK(j["window_end"] == "t49");
    CHECK(j["V"].get<double>() > 0.0);

    CHECK(run_cli("volume --input " + (dir / "gen") + "/panel.csv --window-start 70 --window-length 40 "
                  "--dim 3 --out " + (dir / "vol2")) == 2);
}

TEST_CASE("synth honors custom ids and eccentric flips") {
    TempDir dir("eccentric");
    REQUIRE(run_cli("synth --entities 4 --periods 80 --factors 0 --noise 0.5 --ramp 0.7:0.7 "
                    "--ids AT,BE,AN,NL --eccentric AN --seed 9 --out " + (dir / "gen")) == 0);
    corrnet::Panel p =
        corrnet::load_panel(slurp(dir.path / "gen" / "panel.csv"), corrnet::PanelFormat::long_form);
    CHECK(p.entity_ids == std::vector<std::string>{"AT", "BE", "AN", "NL"});
    // the flipped entity sits opposite the cluster
    corrnet::DistanceMatrix dm = corrnet::distance_matrix(p);
    CHECK(dm.d(0, 2) > std::sqrt(2.0));
    CHECK(dm.d(0, 1) < std::sqrt(2.0));

    // eccentric without a ramp is rejected
    CHECK(run_cli("synth --entities 4 --periods 20 --eccentric E01 --seed 1 --out " + (dir / "bad")) == 2);
    // unknown eccentric id is rejected
    CHECK(run_cli("synth --entities 4 --periods 20 --factors 0 --noise 0.5 --ramp 0.1:0.9 "
                  "--eccentric ZZ --seed 1 --out " + (dir / "bad2")) == 2);
}

TEST_CASE("replay reproduces a run byte for byte") {
    TempDir dir("replay");
    REQUIRE(run_cli("synth --entities 8 --periods 50 --factors 2 --seed 31 --out " + (dir / "gen")) == 0);
    REQUIRE(run_cli("dimension --input " + (dir / "gen") + "/panel.csv --permutations 30 --seed 4 --out " +
                    (dir / "a")) == 0);
    REQUIRE(run_cli("replay --manifest " + (dir / "a") + "/manifest.json --out " + (dir / "b")) == 0);
    for (const char* name : {"dimension.json", "eigs.csv", "manifest.json"})
        CHECK(slurp(dir.path / "a" / name) == slurp(dir.path / "b" / name));
}
