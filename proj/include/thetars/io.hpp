#pragma once

#include <optional>
#include <string>

#include "thetars/correlators.hpp"
#include "thetars/walgebra.hpp"

namespace thetars {

inline constexpr const char* kToolVersion = "thetars 1.0";
inline constexpr int kCacheVersion = 1;

// ---- machine-readable output -------------------------------------------

// JSON envelope for descendant integrals:
// {"r":..,"s":..,"g":..,"n":..,"entries":[{"a":[..],"k":[..],"value":"p/q"}],"meta":{..}}
std::string intersectionsToJson(const CorrelatorTable& t,
                                const std::vector<IntersectionRecord>& recs);
// CSV columns a_1..a_n,k_1..k_n,value
std::string intersectionsToCsv(const std::vector<IntersectionRecord>& recs, int n);

std::string omegaToJson(const CorrelatorTable& t);
std::string omegaToCsv(const CorrelatorTable& t);

std::string potentialToJson(const PotentialTrunc& Z);

// ---- cache ---------------------------------------------------------------

// Cache directory resolution: explicit flag wins, then THETA_RS_CACHE.
std::optional<std::string> resolveCacheDir(const std::string& flagValue);

// Wave-table records under key (r, s, M, version); atomic write.
bool saveWaveCache(const std::string& dir, const WaveTable& t, int M);
// Returns false on miss; corrupt or stale entries are skipped with a warning
// on stderr and recomputed by the caller.
bool loadWaveCache(const std::string& dir, const WaveTable& t, int M);

bool saveOmegaCache(const std::string& dir, const CorrelatorTable& t);
std::optional<CorrelatorTable> loadOmegaCache(const std::string& dir, int r, int s, int g, int n);

}  // namespace thetars
