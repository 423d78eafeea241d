#pragma once

#include "monoflow/lattice.hpp"

#include <functional>
#include <string>
#include <vector>

namespace monoflow {

// Point-group reduction of operators commuting with
//   R(g) psi(x) = U(g) psi(O_g^{-1} x).
// Each irrep contributes the range of the projector onto its first basis row; an operator
// commuting with every R(g) leaves that range invariant, and its spectrum on the full space
// is the union of the sector spectra with multiplicity equal to the irrep dimension.

struct GroupElement {
    RMat O;          // signed permutation
    int grade = 0;   // Z2 label for groups extended by a fiber grading
    CMat U;          // fiber unitary
};

struct Irrep {
    std::string name;
    int dim = 1;
    std::vector<CMat> D;  // indexed like SymmetryGroup::elements
};

struct SymmetryGroup {
    int d = 0;
    std::vector<GroupElement> elements;
    std::vector<Irrep> irreps;

    int find(const RMat& O, int grade) const;
    // throws unless g -> U(g) and every irrep are homomorphisms
    void verify() const;
};

using FiberLift = std::function<CMat(const RMat& O)>;

SymmetryGroup trivial_group(int d, int fiber_dim);
SymmetryGroup quarter_turns(const FiberLift& fiber);
SymmetryGroup quarter_turns_graded(const FiberLift& fiber, const CMat& grading);
SymmetryGroup octahedral_rotations(const FiberLift& fiber);

struct Sector {
    std::string irrep;
    int irrep_dim = 1;
    SpMat W;  // isometry, box.dim() x sector size
};

std::vector<Sector> build_sectors(const LatticeBox& box, const SymmetryGroup& G);

// W^* A W
CMat compress(const Sector& s, const SpMat& A);
CMat compress(const Sector& s, const CMat& A);

// site-diagonal indicator of a set of sites, restricted to a sector: W^* chi W
CMat compress_indicator(const Sector& s, const LatticeBox& box, const std::function<bool(int)>& keep);

}  // namespace monoflow
