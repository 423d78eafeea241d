#pragma once

#include "monoflow/models.hpp"
#include "monoflow/types.hpp"

namespace monoflow {

// Translation-invariant symbol of a model: S_k -> e^{i k_k}, S_k^* -> e^{-i k_k}.
CMat bloch_symbol(const ModelSpec& spec, const RVec& k);
CMat bloch_derivative(const ModelSpec& spec, const RVec& k, int axis);

struct OracleResult {
    int value = 0;
    double raw = 0.0;       // at `grid` points per axis
    double raw_check = 0.0; // at the refinement grid (equal to raw when not run)
    int grid = 0;
    double min_gap = 0.0;   // smallest |E - mu| (even) or singular value of A(k) (odd) seen
};

// Even d in {2, 4}: top Chern number of the Fermi projection of h(k), sign chosen to match the
// index of p V p. d=2 uses link variables and a second run at 2*grid-1; d=4 the degree of the
// unit vector of a Dirac-type symbol.
OracleResult chern_oracle_even(const ModelSpec& spec, int grid = 201);

// Odd d in {1, 3}: winding number of A(k) (d=1: of det A(k)), oriented by the chirality
// i^{(d-1)/2} tr(gamma_1 ... gamma_d) / N of the position-space representation.
OracleResult winding_oracle_odd(const ModelSpec& spec, int grid = 201);

}  // namespace monoflow
