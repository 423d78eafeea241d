#pragma once

#include "monoflow/types.hpp"

#include <string>
#include <vector>

namespace monoflow {

enum class IndexMethod { kernel_count, fedosov_trace, oracle_momentum };
std::string to_string(IndexMethod m);

struct IndexResult {
    int value = 0;
    IndexMethod method = IndexMethod::fedosov_trace;
    double raw = 0.0;
    double stability = 0.0;  // spread of the raw values over radii
    bool stable = true;      // every raw value rounds to `value` within 0.2
    std::vector<int> radii;
    std::vector<double> raws;
};

// q = max(1, ceil(d/2) + 1)
int fedosov_power(int d);

// Tr(inner (P - S T)^q) - Tr(inner (P - T S)^q) with T = P A P and S = P A^{-1} P.
// `inner` restricts the trace (empty: full trace); it must commute with P.
double fedosov_raw(const CMat& P, const CMat& A, const CMat& A_inv, int q, const CMat& inner = {});
// same for a unitary U with parametrix P U^* P = (P U P)^*, U applied sparsely
double fedosov_raw_unitary(const CMat& P, const SpMat& U, int q, const CMat& inner = {});

// dim ker - dim coker of P A P on Ran P, counting only singular vectors whose weight
// on `shell` stays below `max_weight` (finite truncations always have index 0 otherwise).
struct KernelCount {
    int kernel = 0;
    int cokernel = 0;
    int value = 0;
    int discarded = 0;  // near-zero singular vectors living on the shell
};
KernelCount kernel_count(const CMat& P, const CMat& A, const CMat& shell, double tol = 1e-6, double max_weight = 0.5);

// Rounds the first raw value and checks the others against it.
IndexResult index_from_raws(IndexMethod method, std::vector<int> radii, std::vector<double> raws);

}  // namespace monoflow
