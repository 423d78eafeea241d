#include "monoflow/clifford.hpp"
#include "monoflow/symmetry.hpp"

#include <doctest.h>

using namespace monoflow;

namespace {

int sum_dim_squared(const SymmetryGroup& g)
{
    int s = 0;
    for (const Irrep& r : g.irreps) s += r.dim * r.dim;
    return s;
}

}  // namespace

TEST_CASE("group sizes and irreps")
{
    const FiberLift scalar = [](const RMat&) { return CMat::Identity(1, 1); };
    const SymmetryGroup c4 = quarter_turns(scalar);
    c4.verify();
    CHECK(c4.elements.size() == 4);
    CHECK(sum_dim_squared(c4) == 4);

    const SymmetryGroup o = octahedral_rotations(scalar);
    o.verify();
    CHECK(o.elements.size() == 24);
    CHECK(sum_dim_squared(o) == 24);
    CHECK(o.irreps.size() == 5);

    const SymmetryGroup t = trivial_group(3, 2);
    CHECK(t.elements.size() == 1);
    CHECK(t.irreps.size() == 1);
}

TEST_CASE("spinor lifts form a representation with the grading")
{
    const CliffordRep rep = build_clifford(2);
    // two spinor factors: the sign ambiguity of the double cover cancels
    const FiberLift spin = [&](const RMat& O) {
        const CMat g = pin_lift(rep, O).g;
        CMat out(4, 4);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) out.block(2 * i, 2 * j, 2, 2) = g(i, j) * g;
        return out;
    };
    CMat grading = CMat::Zero(4, 4);
    grading.block(0, 0, 2, 2) = grading.block(2, 2, 2, 2) = *rep.grading;
    const SymmetryGroup g = quarter_turns_graded(spin, grading);
    g.verify();
    CHECK(g.elements.size() == 8);
    CHECK(g.find(RMat::Identity(2, 2), 1) >= 0);
}

TEST_CASE("sectors are orthonormal and exhaust the space")
{
    const FiberLift scalar = [](const RMat&) { return CMat::Identity(2, 2); };
    const LatticeBox box = LatticeBox::half_integer(3, 2, 2);
    const SymmetryGroup g = octahedral_rotations(scalar);
    Eigen::Index total = 0;
    for (const Sector& s : build_sectors(box, g)) {
        const CMat w(s.W);
        CHECK((w.adjoint() * w - CMat::Identity(w.cols(), w.cols())).cwiseAbs().maxCoeff() < 1e-12);
        total += s.irrep_dim * w.cols();
    }
    CHECK(total == box.dim());
}

TEST_CASE("compress_indicator matches the compressed diagonal")
{
    const FiberLift scalar = [](const RMat&) { return CMat::Identity(1, 1); };
    const LatticeBox box = LatticeBox::half_integer(2, 3);
    auto keep = [&](int s) { return box.in_shell(s, 1.0); };
    SpMat chi(box.dim(), box.dim());
    for (int s = 0; s < box.num_sites(); ++s)
        if (keep(s)) chi.insert(s, s) = 1.0;
    for (const Sector& s : build_sectors(box, quarter_turns(scalar)))
        CHECK((compress_indicator(s, box, keep) - compress(s, chi)).cwiseAbs().maxCoeff() < 1e-14);
}
