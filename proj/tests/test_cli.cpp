#include "monoflow/experiment.hpp"

#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace monoflow;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run cli(const std::string& args)
{
    const std::string cmd = std::string(MONOFLOW_CLI) + " " + args + " 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), int(buf.size()), p)) r.out += buf.data();
    const int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string slurp(const fs::path& f)
{
    std::ifstream in(f, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("monoflow_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

nlohmann::json small_ssh()
{
    nlohmann::json doc = load_preset("ssh");
    doc["box"]["radius"] = 10;
    doc["alpha_grid"]["points"] = 41;
    return doc;
}

}  // namespace

TEST_CASE("list-presets shows the shipped presets")
{
    const Run r = cli("list-presets");
    CHECK(r.status == 0);
    for (const char* name : {"ssh", "chirind", "harness", "even_dirac_m1", "prop41", "odd_chiral_m1"})
        CHECK(r.out.find(name) != std::string::npos);
}

TEST_CASE("validate accepts presets and rejects malformed configs")
{
    Run r = cli("validate --preset even_dirac_m1");
    CHECK(r.status == 0);
    CHECK(r.out.find("valid even_dirac_m1 hash ") == 0);

    const fs::path dir = scratch("validate");
    nlohmann::json doc = small_ssh();
    doc["unexpected"] = 1;
    std::ofstream(dir / "bad.json") << doc.dump();
    r = cli("validate --config " + (dir / "bad.json").string());
    CHECK(r.status == 2);
    CHECK(r.out.find("unexpected") != std::string::npos);

    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK(cli("validate --config " + (dir / "broken.json").string()).status == 2);
    CHECK(cli("validate --preset no_such_preset").status == 2);
    CHECK(cli("validate --preset ssh --config x.json").status == 2);
    CHECK(cli("frobnicate").status != 0);
    fs::remove_all(dir);
}

TEST_CASE("config hash ignores output locations and tracks content")
{
    nlohmann::json doc = small_ssh();
    const ExperimentConfig a = parse_config(doc);
    doc["output_dir"] = "/tmp/elsewhere";
    const ExperimentConfig b = parse_config(doc);
    CHECK(config_hash(a) == config_hash(b));
    doc["seed"] = 5;
    CHECK(config_hash(parse_config(doc)) != config_hash(a));
    CHECK(parse_config(config_to_json(a)).radius == a.radius);

    doc = small_ssh();
    doc["tasks"] = nlohmann::json::array({"spectral_flow", "bogus"});
    CHECK_THROWS_AS(parse_config(doc), Error);
    doc = small_ssh();
    doc["alpha_grid"]["points"] = 1;
    CHECK_THROWS_AS(parse_config(doc), Error);
}

TEST_CASE("ssh run writes reproducible trajectories")
{
    const fs::path dir = scratch("run");
    std::ofstream(dir / "ssh.json") << small_ssh().dump();
    const Run first = cli("run --config " + (dir / "ssh.json").string() + " --out " + (dir / "a").string());
    CHECK(first.status == 0);
    CHECK(first.out.find("PASS SF == Ind (1 vs 1)") != std::string::npos);
    const Run second = cli("run --config " + (dir / "ssh.json").string() + " --out " + (dir / "b").string());
    CHECK(second.status == 0);

    const std::string csv = slurp(dir / "a" / "trajectories_0.csv");
    CHECK(csv.rfind("alpha,track,re,im,bulk\n", 0) == 0);
    CHECK(csv.size() > 100);
    CHECK(csv == slurp(dir / "b" / "trajectories_0.csv"));

    const nlohmann::json summary = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
    CHECK(summary.contains("config_hash"));
    CHECK(summary["config_hash"] == nlohmann::json::parse(slurp(dir / "b" / "summary.json"))["config_hash"]);
    for (const auto& e : fs::directory_iterator(dir / "a")) CHECK(e.path().extension() != ".tmp");
    fs::remove_all(dir);
}

TEST_CASE("harness experiment through the library")
{
    const HarnessResult h = unitary_harness(10, 12, 7);
    CHECK(h.trials == 10);
    CHECK(h.matches == 10);
    CHECK(unitary_harness(10, 12, 7).details.front().dim == h.details.front().dim);
}
