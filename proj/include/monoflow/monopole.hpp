#pragma once

#include "monoflow/clifford.hpp"
#include "monoflow/lattice.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace monoflow {

struct GaugeField {
    CliffordRep rep;
    double charge = 1.0;
};

// (i/2)[gamma_x, gamma_v] / |x|^2, charge not included
CMat gauge_potential(const GaugeField& field, const RVec& x, const RVec& v);

struct TransportOptions {
    double step = 0.025;
    double far_cutoff = 1e3;
    double tol = 1e-10;
};

// Solution of d/dt N(x + t v) = i alpha A_v N with N = start at the point of the
// line x + t v, t < 0, where |x + t v| = far_cutoff.
CMat transport(const GaugeField& field, const RVec& x, const RVec& v, const TransportOptions& opts = {});
CMat transport(const GaugeField& field, const RVec& x, const RVec& v, const CMat& start,
               const TransportOptions& opts = {});

// N(x) N(x+v)^*, both ends from a single integration along the line
CMat phase_matrix(const GaugeField& field, const RVec& x, const RVec& v, const TransportOptions& opts = {});
CMat phase_matrix(const GaugeField& field, const RVec& x, const RVec& v, const CMat& start,
                  const TransportOptions& opts = {});

// Straight-line transport is abelian: [gamma_x, gamma_v] is constant along x + t v, so
// M_v(x) = exp(-i alpha C Phi) with C = (i/2)[gamma_x, gamma_v] and Phi = int_0^1 dt / |x + t v|^2.
CMat phase_matrix_exact(const GaugeField& field, const RVec& x, const RVec& v);

enum class GammaBlock { full, upper, lower };

struct PhaseCache {
    static constexpr int kVersion = 1;
    static constexpr const char* kIntegrator = "cf4-magnus/newton-schulz";

    LatticeBox box;
    double alpha = 0.0;
    int fiber_dim = 0;
    TransportOptions opts;
    std::vector<std::vector<CMat>> table;  // table[k][site] = M_{e_k}(x)

    static PhaseCache build(const LatticeBox& box, const GaugeField& field, const TransportOptions& opts = {});

    const CMat& at(int k, int site) const { return table[std::size_t(k)][std::size_t(site)]; }
    // M_v for v = sign * e_k; uses M_{-e}(x) = M_e(x - e)^*. Returns false outside the box.
    bool signed_at(int k, int sign, int site, CMat& out) const;

    std::string key() const;
    void save(const std::filesystem::path& file) const;
    static PhaseCache load(const std::filesystem::path& file);
};

std::string phase_cache_key(const LatticeBox& box, double alpha, const TransportOptions& opts);

// Loads from dir when a file with the matching key exists, otherwise builds and stores it.
// An empty dir disables persistence.
PhaseCache cached_phases(const LatticeBox& box, const GaugeField& field, const TransportOptions& opts,
                         const std::filesystem::path& dir);

// Shift with M acting on the Clifford factor of each site's fiber (other (x) gamma).
// Entry (n - e_k, n) carries M_{e_k}(n - e_k).
LatticeOperator monopole_shift(const PhaseCache& cache, int k, int other_dim = 1, GammaBlock block = GammaBlock::full);
LatticeOperator plain_shift(const LatticeBox& box, int k);

// max over sites of || g_O M_v(O^* x) g_O^* - M_{Ov}(x) ||, v over the unit axes
double covariance_check(const PhaseCache& cache, const RMat& O);

struct Envelope {
    double c_fit = 0.0;     // max of R ||M - 1|| over sites with R >= radius / 2
    double worst_ratio = 0.0;  // max over all sites of R ||M - 1|| / c_fit
};
Envelope decay_envelope(const PhaseCache& cache);

// Operator 2-norm of a small matrix
double opnorm(const CMat& m);

}  // namespace monoflow
