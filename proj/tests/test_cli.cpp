// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#ifndef NROD_CLI_PATH
#error "NROD_CLI_PATH must point at the nrod binary"
#endif

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "nrod_cli_test";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string& args, const std::string& stdout_name = "") {
    std::string cmd = std::string(NROD_CLI_PATH) + " " + args;
    if (!stdout_name.empty()) cmd += " > " + (work_dir() / stdout_name).string();
    cmd += " 2> " + (work_dir() / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += (c == '\n');
    return n;
}

fs::path make_dataset(const std::string& name, int normals = 100, int outliers = 20) {
    const fs::path p = work_dir() / name;
    REQUIRE(run("synth --normal " + std::to_string(normals) + " --outliers " +
                std::to_string(outliers) + " --out " + p.string()) == 0);
    return p;
}

}  // namespace

TEST_CASE("synth is deterministic") {
    const fs::path a = work_dir() / "synth_a.csv";
    const fs::path b = work_dir() / "synth_b.csv";
    CHECK(run("synth --normal 50 --outliers 10 --out " + a.string()) == 0);
    CHECK(run("synth --normal 50 --outliers 10 --out " + b.string()) == 0);
    const std::string text = slurp(a);
    CHECK(text == slurp(b));
    CHECK(count_lines(text) == 61);
    CHECK(text.rfind("x0,x1,label", 0) == 0);
}

TEST_CASE("score writes one value per row") {
    const fs::path data = make_dataset("score_in.csv", 80, 20);
    const fs::path out = work_dir() / "scores.txt";
    CHECK(run("score " + data.string() + " --detector knn --k 5 --out " + out.string()) == 0);
    const std::string text = slurp(out);
    CHECK(count_lines(text) == 100);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) CHECK(std::isfinite(std::stod(line)));

    SUBCASE("meta sidecar records the resolved run") {
        const nlohmann::json meta = nlohmann::json::parse(slurp(out.string() + ".meta.json"));
        CHECK(meta["command"] == "score");
        CHECK(meta["detector"] == "knn");
        CHECK(meta["k"] == 5);
        CHECK(meta["deduped_rows"].empty());
    }
}

TEST_CASE("nr with k = 1 scores like the plain detector") {
    const fs::path data = make_dataset("identity_in.csv", 60, 12);
    const fs::path plain = work_dir() / "plain.txt";
    const fs::path nr = work_dir() / "nr.txt";
    // k drives both the representative selection and the detector; at k = 1
    // the selection is the identity, so the outputs must match byte for byte.
    CHECK(run("score " + data.string() + " --detector lof --k 1 --out " + plain.string()) == 0);
    CHECK(run("score " + data.string() + " --detector lof --k 1 --nr --out " + nr.string()) == 0);
    CHECK(slurp(plain) == slurp(nr));
}

TEST_CASE("exit codes distinguish usage, data, and success") {
    const fs::path data = make_dataset("codes_in.csv", 30, 6);
    CHECK(run("score " + data.string() + " --detector voodoo") == 1);
    CHECK(run("score does_not_exist.csv") == 2);
    CHECK(run("score") == 1);             // missing required positional
    CHECK(run("frobnicate") == 1);        // unknown subcommand
    CHECK(run("score " + data.string()) == 0);
}

TEST_CASE("auc command") {
    const fs::path scores = work_dir() / "auc_scores.txt";
    const fs::path labels = work_dir() / "auc_labels.txt";
    std::ofstream(scores) << "0.1\n0.2\n0.9\n0.8\n";
    std::ofstream(labels) << "0\n0\n1\n1\n";
    REQUIRE(run("auc " + scores.string() + " --labels " + labels.string(), "auc_out.txt") == 0);
    CHECK(std::stod(slurp(work_dir() / "auc_out.txt")) == 1.0);
}

TEST_CASE("sweep emits one row per k") {
    const fs::path data = make_dataset("sweep_in.csv", 70, 15);
    const fs::path out = work_dir() / "sweep.csv";
    REQUIRE(run("sweep " + data.string() + " --detector knn --k-min 2 --k-max 11 --out " +
                out.string(), "sweep_stdout.txt") == 0);
    CHECK(count_lines(slurp(out)) == 11);  // header + 10 cells
    CHECK(slurp(work_dir() / "sweep_stdout.txt").rfind("best_k=", 0) == 0);
}

TEST_CASE("bench runs are byte-identical") {
    const fs::path base_a = work_dir() / "bench_a";
    const fs::path base_b = work_dir() / "bench_b";
    const std::string args = "bench --synth --detector lof --k-min 2 --k-max 12 --format csv,json";
    REQUIRE(run(args + " --out " + base_a.string()) == 0);
    REQUIRE(run(args + " --out " + base_b.string()) == 0);

    const std::string records = slurp(base_a.string() + ".records.csv");
    CHECK(records == slurp(base_b.string() + ".records.csv"));
    CHECK(count_lines(records) == 1 + 2 * 11);  // header + modes x k cells
    CHECK(slurp(base_a.string() + ".json") == slurp(base_b.string() + ".json"));
    CHECK(slurp(base_a.string() + ".summary.csv") == slurp(base_b.string() + ".summary.csv"));

    const nlohmann::json meta = nlohmann::json::parse(slurp(base_a.string() + ".meta.json"));
    CHECK(meta["command"] == "bench");
    CHECK(meta["k_max"] == 12);
}

TEST_CASE("config file supplies defaults, flags win") {
    const fs::path data = make_dataset("config_in.csv", 50, 10);
    const fs::path cfg = work_dir() / "nrod.toml";
    std::ofstream(cfg) << "[score]\ndetector = \"lof\"\nk = 7\n";

    const fs::path from_cfg = work_dir() / "cfg_scores.txt";
    const fs::path from_flags = work_dir() / "flag_scores.txt";
    REQUIRE(run("--config " + cfg.string() + " score " + data.string() + " --out " +
                from_cfg.string()) == 0);
    REQUIRE(run("score " + data.string() + " --detector lof --k 7 --out " +
                from_flags.string()) == 0);
    CHECK(slurp(from_cfg) == slurp(from_flags));

    const fs::path override_out = work_dir() / "override_scores.txt";
    REQUIRE(run("--config " + cfg.string() + " score " + data.string() +
                " --detector knn --k 3 --out " + override_out.string()) == 0);
    const fs::path direct_out = work_dir() / "direct_scores.txt";
    REQUIRE(run("score " + data.string() + " --detector knn --k 3 --out " +
                direct_out.string()) == 0);
    CHECK(slurp(override_out) == slurp(direct_out));
}

TEST_CASE("iterstudy emits plain row plus one per iteration") {
    const fs::path data = make_dataset("iter_in.csv", 60, 12);
    const fs::path out = work_dir() / "iter.csv";
    REQUIRE(run("iterstudy " + data.string() + " --detector knn --max-iterations 3 " +
                "--k-min 2 --k-max 8 --out " + out.string()) == 0);
    CHECK(count_lines(slurp(out)) == 1 + 4);
}
