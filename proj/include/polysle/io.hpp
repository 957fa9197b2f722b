#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "polysle/driving.hpp"
#include "polysle/geometry.hpp"
#include "polysle/loewner.hpp"

namespace polysle {

inline constexpr const char* kVersion = "0.1.0";

// --- CSV / binary path dumps -------------------------------------------------

// Columns: t, W, Z_1..Z_n, D, A. Floats are written with 17 significant
// digits so reruns are byte-identical and round-trips are exact.
void write_path_csv(const DrivingPath& path, std::ostream& os);

// Little-endian binary dump: magic "PSLEPATH", u32 version, u32 n, f64 dt,
// u64 seed, f64 eps_coll, u8 has_sigma, f64 sigma, u8 metric_time,
// u64 state count, then per state t, W, Z_1..Z_n, D, A as f64.
void write_path_binary(const DrivingPath& path, std::ostream& os);
DrivingPath read_path_binary(std::istream& is);

void write_trace_csv(const TraceSample& trace, std::ostream& os);
void write_flow_csv(const FlowResult& flow, std::ostream& os);

// --- SVG --------------------------------------------------------------------

// Minimal static markup: bounding box plus 5% margin, light axes/ticks.
std::string trace_svg(const TraceSample& trace);
std::string snapshot_svg(const PolygonSnapshot& snap);

nlohmann::json snapshot_json(const PolygonSnapshot& snap);

// --- configuration -----------------------------------------------------------

struct DriverSpec {
    enum class Type { Brownian, Constant, Linear } type = Type::Brownian;
    double value = 0.0; // constant level
    double slope = 0.0; // linear coefficient
};

struct RunConfigFile {
    PrevertexConfig cfg;
    bool has_geometry = false;
    std::uint64_t seed = 1;
    SolverOptions solver;
    double T = 1.0;
    double dt = 1e-3;
    DriverSpec driver;
    nlohmann::json raw; // canonical parsed document (for hashing/manifest)

    // optional per-command sections, already validated for unknown keys
    nlohmann::json trace_section;
    nlohmann::json map_section;
    nlohmann::json evolve_section;
    nlohmann::json verify_section;
};

// Strict parse: unknown keys anywhere are errors; exactly one of
// betas/rhos when geometry is present. Throws ConfigError.
RunConfigFile parse_config(const nlohmann::json& doc);
RunConfigFile load_config(const std::filesystem::path& file);

// FNV-1a over the canonical (sorted-key) dump.
std::uint64_t config_hash(const nlohmann::json& doc);
std::string config_hash_hex(const nlohmann::json& doc);

nlohmann::json make_manifest(const std::string& command, const RunConfigFile& rc,
                             std::uint64_t seed, const std::vector<std::string>& outputs,
                             std::optional<double> sigma = std::nullopt);

void write_text_file(const std::filesystem::path& p, const std::string& content);

std::string format_double(double v); // 17-significant-digit, locale-free

} // namespace polysle
