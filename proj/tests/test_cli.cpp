// Exercises the installed command-line surface end to end: formats, exit
// codes, determinism, and the cache round-trip. Invoked as
//   test_cli <path-to-cli>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "thetars/io.hpp"

namespace {

std::string g_cli;
int g_failures = 0;

#define REQUIRE_MSG(cond, msg)                                                  \
    do {                                                                        \
        if (!(cond)) {                                                          \
            std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << msg \
                      << "\n";                                                  \
            ++g_failures;                                                       \
        }                                                                       \
    } while (0)

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    std::string cmd = g_cli + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    RunResult res;
    if (!p) return res;
    char buf[4096];
    while (size_t nread = fread(buf, 1, sizeof buf, p)) res.out.append(buf, nread);
    int status = pclose(p);
    res.code = WEXITSTATUS(status);
    return res;
}

void testComputeJson() {
    RunResult r = run("compute --r 2 --s 1 --g 1 --n 1");
    REQUIRE_MSG(r.code == 0, "compute exit code");
    auto j = nlohmann::json::parse(r.out);
    REQUIRE_MSG(j["r"] == 2 && j["s"] == 1, "envelope carries (r,s)");
    REQUIRE_MSG(j["entries"].size() == 1, "single record");
    REQUIRE_MSG(j["entries"][0]["value"] == "1/8", "BGW anchor value");
    REQUIRE_MSG(j["entries"][0]["a"] == nlohmann::json::array({1}), "primary field");
    REQUIRE_MSG(j["meta"].contains("support_bound"), "truncation metadata present");
    std::cout << "[PASS] compute json envelope\n";
}

void testComputeCsv() {
    RunResult r = run("compute --r 2 --s 1 --g 1 --n 1 --format csv");
    REQUIRE_MSG(r.code == 0, "csv exit code");
    REQUIRE_MSG(r.out.find("a_1,k_1,value") == 0, "csv header");
    REQUIRE_MSG(r.out.find("1,0,1/8") != std::string::npos, "csv record");
    std::cout << "[PASS] compute csv\n";
}

void testEmptyTable() {
    RunResult r = run("compute --r 3 --s 2 --g 0 --n 3");
    REQUIRE_MSG(r.code == 0, "dimension-empty table exits 0");
    auto j = nlohmann::json::parse(r.out);
    REQUIRE_MSG(j["entries"].empty(), "no records for omega_{0,3} at s <= 2");
    std::cout << "[PASS] empty record list\n";
}

void testUsageErrors() {
    REQUIRE_MSG(run("compute --r 1 --s 1 --g 1 --n 1").code == 2, "r = 1 rejected with exit 2");
    REQUIRE_MSG(run("compute --r 4 --s 4 --g 1 --n 1").code == 2, "s = r rejected with exit 2");
    REQUIRE_MSG(run("compute --r 2 --s 1 --g 0 --n 1").code == 2, "unstable (0,1) rejected");
    REQUIRE_MSG(run("nonsense").code == 2, "unknown command rejected");
    std::cout << "[PASS] usage errors exit 2\n";
}

void testVerifyExitCodes() {
    REQUIRE_MSG(run("verify indexsets --r 5 --s 2").code == 0, "indexsets suite passes");
    REQUIRE_MSG(run("verify wavefunctions --r 3 --s 2 --order 4").code == 0,
                "wave suite passes");
    REQUIRE_MSG(run("verify routes --r 4 --s 2").code == 2, "non-coprime routes: usage error");
    std::cout << "[PASS] verify exit codes\n";
}

void testDeterminism() {
    RunResult a = run("compute --r 3 --s 2 --g 1 --n 2");
    RunResult b = run("compute --r 3 --s 2 --g 1 --n 2");
    REQUIRE_MSG(a.code == 0 && b.code == 0, "repeat runs succeed");
    REQUIRE_MSG(a.out == b.out, "output is deterministic");
    std::cout << "[PASS] deterministic output\n";
}

void testCacheRoundTrip() {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "thetars-cache-test";
    fs::remove_all(dir);
    // missing directory is created on first write
    RunResult a = run("omega --r 2 --s 1 --g 1 --n 1 --cache " + dir.string());
    REQUIRE_MSG(a.code == 0, "first cached run");
    fs::path file = dir / "omega_r2_s1_g1_n1.v1.txt";
    REQUIRE_MSG(fs::exists(file), "cache file written");
    bool sawWave = false;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename().string().rfind("wave_r2_s1", 0) == 0) sawWave = true;
    REQUIRE_MSG(sawWave, "wave-table records persisted alongside");
    std::string before;
    {
        std::ifstream in(file);
        std::stringstream ss;
        ss << in.rdbuf();
        before = ss.str();
    }
    RunResult b = run("omega --r 2 --s 1 --g 1 --n 1 --cache " + dir.string());
    REQUIRE_MSG(b.out == a.out, "cached read reproduces the table");
    std::string after;
    {
        std::ifstream in(file);
        std::stringstream ss;
        ss << in.rdbuf();
        after = ss.str();
    }
    REQUIRE_MSG(before == after, "cache write-then-read is byte identical");

    // corrupt record: warn and recompute
    {
        std::ofstream out(file, std::ios::trunc);
        out << "thetars-cache v1 omega r=2 s=1 g=1 n=1\n1 not-a-number\n";
    }
    RunResult c = run("omega --r 2 --s 1 --g 1 --n 1 --cache " + dir.string());
    REQUIRE_MSG(c.code == 0 && c.out == a.out, "corrupt cache skipped and recomputed");

    // version bump: stale header means a miss
    {
        std::ofstream out(file, std::ios::trunc);
        out << "thetars-cache v999 omega r=2 s=1 g=1 n=1\n1 1/7\n";
    }
    RunResult d = run("omega --r 2 --s 1 --g 1 --n 1 --cache " + dir.string());
    REQUIRE_MSG(d.code == 0 && d.out == a.out, "stale version ignored, never silently reused");

    // environment variable path
    fs::remove_all(dir);
    std::string cmd = "THETA_RS_CACHE=" + dir.string() + " " + g_cli +
                      " omega --r 2 --s 1 --g 1 --n 1 > /dev/null 2>&1";
    REQUIRE_MSG(std::system(cmd.c_str()) == 0, "env-var cache run");
    REQUIRE_MSG(fs::exists(file), "THETA_RS_CACHE honored");
    fs::remove_all(dir);
    std::cout << "[PASS] cache round-trip, corruption and version handling\n";
}

void testBatchAndPotential() {
    RunResult t = run("table --r 2 --s 1 --g 1 --n 2");
    REQUIRE_MSG(t.code == 0, "table batch runs");
    REQUIRE_MSG(t.out.find("\"value\": \"1/8\"") != std::string::npos, "batch contains the anchor");
    RunResult z = run("zpotential --r 2 --s 1 --order 3");
    REQUIRE_MSG(z.code == 0, "zpotential runs");
    auto j = nlohmann::json::parse(z.out);
    bool sawAnchor = false;
    for (const auto& e : j["entries"])
        if (e["g"] == 1 && e["n"] == 1 && e["value"] == "1/8") sawAnchor = true;
    REQUIRE_MSG(sawAnchor, "free energy F_{1,1} coefficient present");
    std::cout << "[PASS] table batch and potential output\n";
}

void testEnvelopeRoundTrip() {
    RunResult r = run("omega --r 3 --s 1 --g 1 --n 2");
    auto j = nlohmann::json::parse(r.out);
    // every payload value round-trips through the exact string form
    for (const auto& e : j["entries"]) {
        thetars::Rat v = thetars::ratFromString(e["value"].get<std::string>());
        REQUIRE_MSG(thetars::toString(v) == e["value"].get<std::string>(),
                    "p/q round-trip");
    }
    std::cout << "[PASS] envelope round-trips through its serialization\n";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: test_cli <path-to-cli>\n";
        return 2;
    }
    g_cli = argv[1];
    testComputeJson();
    testComputeCsv();
    testEmptyTable();
    testUsageErrors();
    testVerifyExitCodes();
    testDeterminism();
    testCacheRoundTrip();
    testBatchAndPotential();
    testEnvelopeRoundTrip();
    if (g_failures) {
        std::cerr << g_failures << " failures\n";
        return 1;
    }
    std::cout << "all cli checks passed\n";
    return 0;
}
