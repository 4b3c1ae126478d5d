#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "driftlab/cli.hpp"
#include "driftlab/io.hpp"

namespace fs = std::filesystem;
using driftlab::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args) {
    args.insert(args.begin(), "driftlab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "driftlab_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("exact and advise one-liners") {
    const auto e = call({"exact", "--algo", "cga", "--K", "2"});
    CHECK(e.code == 0);
    CHECK(e.out == "E[T]=2.0\n");
    const auto a = call({"advise", "--algo", "cga", "--budget", "10000", "--dim", "100"});
    CHECK(a.code == 0);
    CHECK(a.out == "K=1104\n");
}

TEST_CASE("missing and malformed flags exit 1") {
    const auto m = call({"exact", "--K", "4"});
    CHECK(m.code == 1);
    CHECK(m.err.find("--algo") != std::string::npos);
    CHECK(call({"exact", "--algo", "cga", "--K", "four"}).code == 1);
    CHECK(call({"exact", "--algo", "pbil"}).code == 1);
    CHECK(call({"simulate", "--algo", "cga", "--K", "3"}).code == 1);
    CHECK(call({}).code == 1);
}

TEST_CASE("config errors name the line") {
    const auto path = scratch("bad.json");
    write_file(path, "{\n  \"algo\": \"cga\",\n  \"K\": 3,\n  \"replicas\": 10\n}\n");
    const auto r = call({"simulate", "--config", path.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("line 3") != std::string::npos);

    write_file(path, "{\n  \"algo\": \"cga\",\n  \"bogus\": 1\n}\n");
    const auto u = call({"simulate", "--config", path.string()});
    CHECK(u.code == 1);
    CHECK(u.err.find("line 3") != std::string::npos);
    CHECK(u.err.find("bogus") != std::string::npos);

    write_file(path, "{\n  \"algo\": \"cga\",\n  \"K\": \"eight\"\n}\n");
    CHECK(call({"simulate", "--config", path.string()}).err.find("line 3") != std::string::npos);
}

TEST_CASE("dump-config round-trips and flags override the file") {
    const auto dumped = call({"simulate", "--algo", "pbil", "--mu", "4", "--rho", "0.25", "--replicas", "50",
                              "--dump-config"});
    REQUIRE(dumped.code == 0);
    const auto inv = driftlab::cli::invocation_from_config("simulate", dumped.out);
    CHECK(inv.values["mu"] == 4);
    CHECK(inv.values["rho"] == 0.25);

    const auto path = scratch("dump.json");
    write_file(path, dumped.out);
    const auto again = call({"simulate", "--config", path.string(), "--dump-config"});
    CHECK(again.out == dumped.out);
    CHECK(driftlab::cli::invocation_from_config("simulate", again.out) == inv);

    const auto over = call({"simulate", "--config", path.string(), "--mu", "6", "--dump-config"});
    CHECK(driftlab::cli::invocation_from_config("simulate", over.out).values["mu"] == 6);
}

TEST_CASE("output files and exit codes") {
    const auto bad = call({"exact", "--algo", "cga", "--K", "4", "--output", "/nonexistent/dir/out.json"});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("output") != std::string::npos);

    const auto failed = call({"simulate", "--algo", "cga", "--K", "64", "--budget", "1", "--replicas", "20"});
    CHECK(failed.code == 2);

    const auto path = scratch("exact.json");
    REQUIRE(call({"exact", "--algo", "umda", "--mu", "4", "--output", path.string()}).code == 0);
    const auto doc = driftlab::parse_json_text(read_file(path));
    CHECK(doc["command"] == "exact");
    CHECK(doc["solve"]["residual"].get<double>() <= 1e-8);
}

TEST_CASE("the same seed gives the same bytes") {
    const auto a = scratch("a.csv");
    const auto b = scratch("b.csv");
    const std::vector<std::string> base{"simulate", "--algo", "pbil", "--mu", "3", "--rho", "0.5",
                                        "--replicas", "300", "--seed", "11", "--format", "csv"};
    auto args_a = base;
    args_a.insert(args_a.end(), {"--threads", "1", "--output", a.string()});
    auto args_b = base;
    args_b.insert(args_b.end(), {"--threads", "3", "--output", b.string()});
    REQUIRE(call(args_a).code == 0);
    REQUIRE(call(args_b).code == 0);
    CHECK(read_file(a) == read_file(b));
    CHECK(read_file(a).rfind("replica_index,stopping_time,terminal_frequency,trigger\n", 0) == 0);
}

TEST_CASE("every subcommand runs on small inputs") {
    CHECK(call({"scaling", "--algo", "cga", "--sweep-values", "4,8,16"}).code == 0);
    CHECK(call({"scaling", "--algo", "umda", "--method", "mc", "--sweep-values", "2,4,8", "--replicas", "300"}).code == 0);
    CHECK(call({"tailcheck", "--algo", "cga", "--K", "4", "--replicas", "200"}).out.find("0 violations") !=
          std::string::npos);
    CHECK(call({"runaway", "--mu", "4", "--rho", "0.5", "--replicas", "50"}).code == 0);
    CHECK(call({"dominance", "--algo", "cga", "--K", "4", "--dim", "2"}).out.rfind("dominance: holds", 0) == 0);
    const auto m = call({"moments-check", "--algo", "pbil", "--mu", "3", "--rho", "0.5", "--p", "0.3",
                         "--samples", "20000"});
    CHECK(m.code == 0);
    CHECK(m.out.find("within 4 standard errors") != std::string::npos);
}
