#pragma once

#include "monoflow/flow.hpp"
#include "monoflow/index.hpp"
#include "monoflow/models.hpp"
#include "monoflow/monopole.hpp"
#include "monoflow/oracles.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace monoflow {

struct ExperimentConfig {
    std::string name;
    std::string experiment = "model";  // model, chirind (ssh detour path) or harness
    int harness_trials = 50;
    int harness_max_dim = 24;
    ModelSpec model;
    int radius = 4;            // box radius; for ssh the chain has 2 * radius + 1 sites
    std::string offset = "half";  // "half" or "integer" (ssh only)
    std::string path = "h";    // even_dirac: "h" (h_alpha) or "full" (H_alpha)
    int grid_points = 101;
    double alpha_tol = 1e-4;
    bool refine_check = true;  // rerun every flow on the 2x refined grid
    std::vector<std::string> tasks;  // spectral_flow, index, oracle, invariant_suite
    bool use_symmetry = true;
    int oracle_grid = 201;
    int seed = 0;
    std::string output_dir;
    std::string cache_dir;
    nlohmann::json source;  // normalized document the hash is computed from
};

// Random finite-dimensional pairs (U_0, F) with the standard path from U_0 F to F U_0;
// compares SF(F U_a (U_0 F)^*) with the kernel / cokernel count of the compression.
struct HarnessTrial {
    int dim = 0;
    int flow = 0;
    int refined_flow = 0;  // on the 2x refined grid
    int index = 0;
};
struct HarnessResult {
    int trials = 0;
    int matches = 0;
    std::vector<HarnessTrial> details;
};
HarnessResult unitary_harness(int trials, int max_dim, std::uint64_t seed);

// Validates against the schema; throws Error("cli", ...) on violations.
ExperimentConfig parse_config(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
// FNV-1a of the normalized document
std::string config_hash(const ExperimentConfig& cfg);

std::vector<std::string> list_presets();
nlohmann::json load_preset(const std::string& name);

struct FlowReport {
    std::string label;
    std::vector<SectorFlow> sectors;
    int net_flow = 0;      // bulk crossings weighted by multiplicity
    int net_flow_all = 0;  // including boundary crossings
    std::optional<int> refined_net_flow;
    std::optional<int> refined_net_flow_all;
};

struct InvariantRow {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct Verdict {
    std::string line;
    bool pass = false;
};

struct Report {
    ExperimentConfig config;
    std::string hash;
    std::vector<FlowReport> flows;
    std::optional<IndexResult> index;
    std::optional<KernelCount> kernel;
    std::optional<OracleResult> oracle;
    std::vector<InvariantRow> invariants;
    std::vector<Verdict> verdicts;
    double wall_time = 0.0;

    bool passed() const;
};

Report run_experiment(const ExperimentConfig& cfg);

nlohmann::json report_to_json(const Report& r);
// trajectories.csv (alpha,track,re,im,bulk) per flow plus summary.json; files are written atomically
void emit_trajectories(const Report& r, const std::filesystem::path& dir);
std::string trajectory_csv(const FlowReport& f);

// Monopole identities on the box of radius `radius` in dimension d:
// F S^a F = S^{1-a} on interior sites, Gamma S^a Gamma = S^a, covariance under the box
// symmetries, and the 1/R envelope of ||M - 1||.
std::vector<InvariantRow> monopole_identity_suite(int d, int radius, const std::vector<double>& alphas,
                                                  const TransportOptions& opts = {},
                                                  const std::filesystem::path& cache_dir = {});

// Every signed permutation matrix of dimension d.
std::vector<RMat> signed_permutations(int d);

// Max sitewise deviation of the integrated M_{e_k}^alpha from the arctan closed form, d = 2.
double closed_form_deviation(int radius, double alpha, const TransportOptions& opts = {});
// M_{e_k}^alpha(x) for d = 2 from the explicit transport N_1, N_2 (diagonal in the Gamma basis)
CMat closed_form_phase_d2(const RVec& x, int k, double alpha);

}  // namespace monoflow
