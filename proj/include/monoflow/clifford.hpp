#pragma once

#include "monoflow/types.hpp"

#include <optional>
#include <vector>

namespace monoflow {

struct CliffordRep {
    int d = 0;
    int fiber_dim = 0;
    std::vector<CMat> gammas;
    std::optional<CMat> grading;  // present iff d is even; diagonal with +1 block first
};

CliffordRep build_clifford(int d, int max_d = 6);

// sum_k v_k gamma_k
CMat gamma_v(const CliffordRep& rep, const RVec& v);

// Lift of an orthogonal O: gamma_{Ow} = sign * g gamma_w i(g), i = reversal of the
// generator product. sign is -1 only for improper O in odd d, where the
// irreducible representation cannot lift O itself and g lifts -O instead.
struct PinLift {
    std::vector<RVec> reflection_vectors;
    CMat g;
    CMat g_reversed;
    RMat orthogonal;
    int sign = 1;
};

PinLift pin_lift(const CliffordRep& rep, const RMat& O);

// max_w || gamma_{Ow} - sign g gamma_w i(g) ||
double pin_lift_defect(const CliffordRep& rep, const PinLift& lift);

// The 2x2 Pauli matrices, index 1..3.
CMat pauli(int k);

}  // namespace monoflow
