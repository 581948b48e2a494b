#include "thetars/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace thetars {

namespace {
using nlohmann::json;
namespace fs = std::filesystem;

json metaFor(const CorrelatorTable& t) {
    return json{{"tool", kToolVersion},
                {"support_bound", t.supportBound()},
                {"exact", true},
                {"format", kCacheVersion}};
}

bool atomicWrite(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) return false;
        out << content;
        if (!out) return false;
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    return !ec;
}

}  // namespace

std::string intersectionsToJson(const CorrelatorTable& t,
                                const std::vector<IntersectionRecord>& recs) {
    json entries = json::array();
    for (const auto& rec : recs)
        entries.push_back(json{{"a", rec.a}, {"k", rec.k}, {"value", toString(rec.value)}});
    json env{{"r", t.r}, {"s", t.s}, {"g", t.g}, {"n", t.n}, {"entries", entries},
             {"meta", metaFor(t)}};
    return env.dump(2) + "\n";
}

std::string intersectionsToCsv(const std::vector<IntersectionRecord>& recs, int n) {
    std::ostringstream os;
    for (int i = 1; i <= n; ++i) os << "a_" << i << ",";
    for (int i = 1; i <= n; ++i) os << "k_" << i << ",";
    os << "value\n";
    for (const auto& rec : recs) {
        for (int v : rec.a) os << v << ",";
        for (int v : rec.k) os << v << ",";
        os << toString(rec.value) << "\n";
    }
    return os.str();
}

std::string omegaToJson(const CorrelatorTable& t) {
    json entries = json::array();
    for (const auto& [m, v] : t.entries)
        entries.push_back(json{{"m", m}, {"value", toString(v)}});
    json env{{"r", t.r}, {"s", t.s}, {"g", t.g}, {"n", t.n}, {"entries", entries},
             {"meta", metaFor(t)}};
    return env.dump(2) + "\n";
}

std::string omegaToCsv(const CorrelatorTable& t) {
    std::ostringstream os;
    for (int i = 1; i <= t.n; ++i) os << "m_" << i << ",";
    os << "value\n";
    for (const auto& [m, v] : t.entries) {
        for (int mi : m) os << mi << ",";
        os << toString(v) << "\n";
    }
    return os.str();
}

std::string potentialToJson(const PotentialTrunc& Z) {
    json entries = json::array();
    for (const auto& [gn, mp] : Z.F)
        for (const auto& [m, v] : mp)
            entries.push_back(
                json{{"g", gn.first}, {"n", gn.second}, {"m", m}, {"value", toString(v)}});
    json env{{"r", Z.r}, {"s", Z.s}, {"order", Z.order}, {"entries", entries},
             {"meta", json{{"tool", kToolVersion}, {"format", kCacheVersion}}}};
    return env.dump(2) + "\n";
}

std::optional<std::string> resolveCacheDir(const std::string& flagValue) {
    if (!flagValue.empty()) return flagValue;
    const char* env = std::getenv("THETA_RS_CACHE");
    if (env && *env) return std::string(env);
    return std::nullopt;
}

bool saveWaveCache(const std::string& dir, const WaveTable& t, int M) {
    std::ostringstream os;
    os << "thetars-cache v" << kCacheVersion << " wave r=" << t.r() << " s=" << t.s()
       << " M=" << M << "\n";
    for (const auto& [km, v] : t.snapshot())
        os << km.first << " " << km.second << " " << toString(v) << "\n";
    std::string path = dir + "/wave_r" + std::to_string(t.r()) + "_s" + std::to_string(t.s()) +
                       "_M" + std::to_string(M) + ".v" + std::to_string(kCacheVersion) + ".txt";
    return atomicWrite(path, os.str());
}

bool loadWaveCache(const std::string& dir, const WaveTable& t, int M) {
    std::string path = dir + "/wave_r" + std::to_string(t.r()) + "_s" + std::to_string(t.s()) +
                       "_M" + std::to_string(M) + ".v" + std::to_string(kCacheVersion) + ".txt";
    std::ifstream in(path);
    if (!in) return false;
    std::string header;
    std::getline(in, header);
    std::ostringstream expect;
    expect << "thetars-cache v" << kCacheVersion << " wave r=" << t.r() << " s=" << t.s()
           << " M=" << M;
    if (header != expect.str()) {
        std::cerr << "warning: stale or foreign cache header in " << path << ", ignoring\n";
        return false;
    }
    long k, m;
    std::string val;
    std::vector<std::tuple<long, long, Rat>> staged;
    while (in >> k >> m >> val) {
        try {
            staged.emplace_back(k, m, ratFromString(val));
        } catch (const std::exception&) {
            std::cerr << "warning: corrupt cache record in " << path << ", recomputing\n";
            return false;
        }
    }
    for (auto& [kk, mm, vv] : staged) t.preload(kk, mm, vv);
    return true;
}

bool saveOmegaCache(const std::string& dir, const CorrelatorTable& t) {
    std::ostringstream os;
    os << "thetars-cache v" << kCacheVersion << " omega r=" << t.r << " s=" << t.s
       << " g=" << t.g << " n=" << t.n << "\n";
    for (const auto& [m, v] : t.entries) {
        for (int mi : m) os << mi << " ";
        os << toString(v) << "\n";
    }
    std::string path = dir + "/omega_r" + std::to_string(t.r) + "_s" + std::to_string(t.s) +
                       "_g" + std::to_string(t.g) + "_n" + std::to_string(t.n) + ".v" +
                       std::to_string(kCacheVersion) + ".txt";
    return atomicWrite(path, os.str());
}

std::optional<CorrelatorTable> loadOmegaCache(const std::string& dir, int r, int s, int g,
                                              int n) {
    std::string path = dir + "/omega_r" + std::to_string(r) + "_s" + std::to_string(s) + "_g" +
                       std::to_string(g) + "_n" + std::to_string(n) + ".v" +
                       std::to_string(kCacheVersion) + ".txt";
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string header;
    std::getline(in, header);
    std::ostringstream expect;
    expect << "thetars-cache v" << kCacheVersion << " omega r=" << r << " s=" << s << " g=" << g
           << " n=" << n;
    if (header != expect.str()) {
        std::cerr << "warning: stale or foreign cache header in " << path << ", ignoring\n";
        return std::nullopt;
    }
    CorrelatorTable t;
    t.r = r;
    t.s = s;
    t.g = g;
    t.n = n;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<int> m(n);
        std::string val;
        for (int i = 0; i < n; ++i)
            if (!(ls >> m[i])) {
                std::cerr << "warning: corrupt cache record in " << path << ", recomputing\n";
                return std::nullopt;
            }
        if (!(ls >> val)) {
            std::cerr << "warning: corrupt cache record in " << path << ", recomputing\n";
            return std::nullopt;
        }
        try {
            t.entries[m] = ratFromString(val);
        } catch (const std::exception&) {
            std::cerr << "warning: corrupt cache record in " << path << ", recomputing\n";
            return std::nullopt;
        }
    }
    return t;
}

}  // namespace thetars
