#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include <json.hpp>

#include "tspfcn/commands.hpp"
#include "tspfcn/errors.hpp"
#include "tspfcn/instance.hpp"
#include "tspfcn/model.hpp"

namespace fs = std::filesystem;
using namespace tspfcn;

namespace {

const fs::path& workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "tspfcn_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = "cd '" + workdir().string() + "' && '" TSPFCN_CLI_PATH "' " + args +
                            " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

} // namespace

TEST_CASE("integer list parsing") {
    CHECK(cli::parse_int_list("4..7") == std::vector<int>{4, 5, 6, 7});
    CHECK(cli::parse_int_list("3,5..6,9") == std::vector<int>{3, 5, 6, 9});
    CHECK_THROWS_AS(cli::parse_int_list("7..4"), ConfigError);
    CHECK_THROWS_AS(cli::parse_int_list("4x"), ConfigError);
}

TEST_CASE("usage errors exit with 1") {
    CHECK(run("") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("gen --n 5") == 1);
    CHECK(run("solve --algo simplex --in x.jsonl") == 1);
    CHECK(run("eval --n 5 --count 2") == 1);
    CHECK(run("eval --oracle-passthrough --n 5 --count 2 --m -1") == 1);
    CHECK(run("--help") == 0);
}

TEST_CASE("data errors exit with 2") {
    CHECK(run("solve --in missing.jsonl") == 2);
    std::ofstream(workdir() / "broken.jsonl") << "{\"coords\": [[0, 1], [2]]}\n";
    CHECK(run("solve --in broken.jsonl") == 2);
    CHECK(run("decode --mask missing.png --instance broken.jsonl") == 2);
}

TEST_CASE("gen, solve, decode and eval write outputs with manifests") {
    REQUIRE(run("--seed 5 gen --n 6 --count 4 --out ds") == 0);
    const auto man = read_json(workdir() / "ds" / "run_manifest.json");
    CHECK(man.at("command") == "gen");
    CHECK(man.at("seed") == 5);
    CHECK(man.at("tool_version") == cli::kToolVersion);
    CHECK(fs::exists(workdir() / "ds" / "instances.jsonl"));

    REQUIRE(run("solve --algo bb --in ds/instances.jsonl --out sol.jsonl") == 0);
    CHECK(fs::exists(workdir() / "sol.jsonl.manifest.json"));
    std::ifstream sol(workdir() / "sol.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(sol, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("length").get<double>() ==
              doctest::Approx(j.at("optimal_length").get<double>()).epsilon(1e-12));
        ++lines;
    }
    CHECK(lines == 4);

    const auto inst = read_instances_jsonl((workdir() / "ds" / "instances.jsonl").string()).front();
    {
        std::ofstream os(workdir() / "one.json");
        os << to_json(inst).dump(2);
    }
    const auto label = "ds/labels/" + inst.id() + ".png";
    REQUIRE(run("decode --mask " + label + " --instance one.json --departure 2 --out dec.json") == 0);
    const auto dec = read_json(workdir() / "dec.json");
    CHECK(dec.at("order").at(0) == 2);
    CHECK(dec.at("length").get<double>() == doctest::Approx(inst.optimal()->length).epsilon(1e-9));

    REQUIRE(run("eval --oracle-passthrough --data ds --out ev") == 0);
    const auto rep = read_json(workdir() / "ev" / "report.json");
    CHECK(rep.at("metrics").at("e0") == 1.0);
    CHECK(fs::exists(workdir() / "ev" / "run_manifest.json"));
}

TEST_CASE("non-finite network output exits with 3") {
    net::ArchConfig a;
    a.input_size = 32;
    a.head_channels = 8;
    a.score_channels = 1;
    auto model = net::init_model<float>(a, 1);
    model.params().back().value.fill(NAN);
    net::save_checkpoint(model, (workdir() / "nan.ckpt").string());
    write_instances_jsonl((workdir() / "few.jsonl").string(),
                          std::vector<TspInstance>{generate_instance(5, 1, {}, "a")});
    CHECK(run("predict --checkpoint nan.ckpt --in few.jsonl --out pred") == 3);
}
