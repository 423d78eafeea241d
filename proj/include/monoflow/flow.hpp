#pragma once

#include "monoflow/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace monoflow {

enum class FlowMode { selfadjoint_through_mu, unitary_realpart, nonnormal_imaginary_axis };
std::string to_string(FlowMode m);

struct FlowOptions {
    int grid_points = 101;
    double mu = 0.0;
    double window = 0.5;  // eigenvalues with |Re lambda - mu| < window must be matched reliably
    double match_threshold = 0.7;
    double alpha_tol = 1e-4;
    int max_depth = 12;  // halvings of a grid interval while matching fails
    double boundary_weight = 0.5;
    double endpoint_gap = 1e-6;
    double cluster_tol = 1e-8;
    double bridge_width = 2e-3;  // below this width weak steps are bridged instead of halved
    double bridge_span = 0.05;   // furthest a bridge may reach past a weak step
    bool bulk_only = true;
};

struct TrackPoint {
    double alpha;
    cplx value;
    double overlap;
    bool bulk;
};

struct Track {
    int id;
    std::vector<TrackPoint> points;
};

struct EigenPath {
    std::vector<double> grid;
    std::vector<Track> tracks;  // only points within 2 windows of the crossing line are kept
    double matching_threshold = 0.7;
};

struct Crossing {
    double alpha;
    int direction;  // +1: from below mu (left half-plane) to above (right)
    int track;
    bool bulk;
    double shell_weight;
};

struct FlowResult {
    std::vector<Crossing> crossings;
    int net_flow = 0;      // bulk crossings only unless bulk_only is false
    int net_flow_all = 0;  // every crossing, boundary states included
    FlowMode mode = FlowMode::selfadjoint_through_mu;
    int refinements = 0;
    int weak_matches = 0;
    int bridges = 0;
    double min_gap = 0.0;  // smallest |Re lambda - mu| over bulk states at the endpoints
    EigenPath path;
};

// An operator path written in a fixed basis. `shell` is the indicator of the outer boundary
// shell in that basis (empty: every state counts as bulk).
struct OperatorPath {
    std::function<CMat(double)> at;
    CMat shell;
};

FlowResult sf_selfadjoint(const OperatorPath& path, const FlowOptions& opts = {});
// spectral flow of Re(W_alpha) through 0
FlowResult sf_unitary(const OperatorPath& path, FlowOptions opts = {});
// eigenvalues crossing the imaginary axis, left to right = +1
FlowResult sf_nonnormal(const OperatorPath& path, const FlowOptions& opts = {});

// The flow on opts.grid_points and on the 2x refined grid (2n - 1 points); eigendecompositions
// at the shared grid points are computed once.
struct RefinedFlow {
    FlowResult coarse;
    FlowResult refined;
};
RefinedFlow sf_refined(const OperatorPath& path, FlowMode mode, FlowOptions opts = {});

// A |A|^{-s}
CMat polar_homotopy(const CMat& A, double s);

// Net flows of sector paths weighted by irrep dimension.
struct SectorFlow {
    std::string sector;
    int multiplicity = 1;
    FlowResult result;
};
int total_flow(const std::vector<SectorFlow>& flows, bool all_tracks = false);

}  // namespace monoflow
