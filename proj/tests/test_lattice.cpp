#include "monoflow/lattice.hpp"

#include <doctest.h>

using namespace monoflow;

namespace {

double dev(const CMat& a, const CMat& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("half-integer boxes avoid the origin and order sites lexicographically")
{
    LatticeBox box = LatticeBox::half_integer(2, 3, 2);
    CHECK(box.num_sites() == 36);
    CHECK(box.dim() == 72);
    CHECK(box.extent(0) == 6);
    for (int s = 0; s < box.num_sites(); ++s) CHECK(box.norm(s) > 0.5);
    CHECK(box.position(0, 0) == doctest::Approx(-2.5));
    CHECK(box.position(1, 0) == doctest::Approx(-2.5));
    CHECK(box.position(1, 1) == doctest::Approx(-1.5));
    CHECK(box.index({-3, -2}) == 1);
    CHECK(box.index({3, 0}) == -1);
    int s = box.index({0, 0});
    CHECK(box.neighbor(s, 0, 1) == box.index({1, 0}));
    CHECK(box.neighbor(box.index({2, 0}), 0, 1) == -1);
    CHECK(box.in_shell(box.index({2, 0}), 1.0));
    CHECK_FALSE(box.in_shell(box.index({1, 0}), 1.0));
}

TEST_CASE("invalid boxes are rejected")
{
    CHECK_THROWS_AS(LatticeBox(0, 2, {}, 1), Error);
    CHECK_THROWS_AS(LatticeBox(2, 0, {0.5, 0.5}, 1), Error);
    CHECK_THROWS_AS(LatticeBox(2, 2, {0.5}, 1), Error);
}

TEST_CASE("Dirac operator at one site in d = 2")
{
    CliffordRep rep = build_clifford(2);
    LatticeBox box = LatticeBox::half_integer(2, 2, 2);
    LatticeOperator D = dirac_operator(box, rep);
    int s = box.index({0, 0});
    CMat block = D.dense().block(2 * s, 2 * s, 2, 2);
    CHECK(dev(block, 0.5 * rep.gammas[0] + 0.5 * rep.gammas[1]) < 1e-15);
    CHECK(D.flag_defect() < 1e-14);
    const CMat G = site_constant(box, *rep.grading).dense();
    CHECK(dev(G * D.dense() * G, -D.dense()) < 1e-12);
}

TEST_CASE("d = 1 Dirac operator is the half-integer position")
{
    LatticeBox box = LatticeBox::half_integer(1, 2, 1);
    LatticeOperator D = dirac_operator(box, build_clifford(1));
    RVec diag = D.dense().diagonal().real();
    RVec expect(4);
    expect << -1.5, -0.5, 0.5, 1.5;
    CHECK((diag - expect).norm() < 1e-15);
    LatticeOperator F = dirac_phase(D);
    RVec sign(4);
    sign << -1, -1, 1, 1;
    CHECK((F.dense().diagonal().real() - sign).norm() < 1e-15);
    LatticeOperator P = hardy_projection(F);
    CHECK(P.dense().trace().real() == doctest::Approx(2.0));
}

TEST_CASE("Dirac phase is a site-local selfadjoint unitary")
{
    CliffordRep rep = build_clifford(3);
    LatticeBox box = LatticeBox::half_integer(3, 2, 4);
    LatticeOperator F = dirac_phase(dirac_operator(box, rep));
    CMat f = F.dense();
    CHECK(dev(f * f, CMat::Identity(f.rows(), f.cols())) < 1e-12);
    CHECK(dev(f, f.adjoint()) < 1e-14);
    CHECK(off_site_norm(F) == 0.0);
    CMat P = hardy_projection(F).dense();
    CHECK(dev(P * P, P) < 1e-12);
    CHECK(P.trace().real() == doctest::Approx(double(box.dim()) / 2));
}

TEST_CASE("integer offsets put a site on the Dirac kernel")
{
    LatticeBox box(2, 2, {0.0, 0.0}, 2);
    CHECK_THROWS_AS(dirac_phase(dirac_operator(box, build_clifford(2))), Error);
}

TEST_CASE("split_F gives V = (x1 + i x2)/|x| in d = 2")
{
    CliffordRep rep = build_clifford(2);
    LatticeBox box = LatticeBox::half_integer(2, 3, 2);
    LatticeOperator F = dirac_phase(dirac_operator(box, rep));
    GradedSplit sp = split_F(F, rep);
    CMat V = sp.V.dense();
    CHECK(dev(V * V.adjoint(), CMat::Identity(V.rows(), V.cols())) < 1e-12);
    for (int s = 0; s < box.num_sites(); ++s) {
        double x1 = box.position(s, 0), x2 = box.position(s, 1);
        cplx expect = cplx(x1, x2) / std::hypot(x1, x2);
        CHECK(std::abs(V(s, s) - expect) < 1e-12);
    }
    int s = box.index({0, 0});
    CHECK(std::abs(V(s, s) - std::exp(kI * (M_PI / 4))) < 1e-12);
    CHECK_THROWS_AS(split_F(dirac_phase(dirac_operator(LatticeBox::half_integer(3, 1, 2), build_clifford(3))),
                            build_clifford(3)),
                    Error);
}

TEST_CASE("Hardy projection of the d = 1 chain has rank equal to the positive sites")
{
    LatticeBox box = LatticeBox::half_integer(1, 5, 1);
    LatticeOperator P = hardy_projection(dirac_phase(dirac_operator(box, build_clifford(1))));
    CHECK(P.dense().trace().real() == doctest::Approx(5.0));
}

TEST_CASE("site_constant tensors identity on the outer factor")
{
    LatticeBox box = LatticeBox::half_integer(2, 1, 4);
    CMat local = pauli(1);
    CMat op = site_constant(box, local).dense();
    CMat block = op.block(0, 0, 4, 4);
    CHECK(dev(block.block(0, 0, 2, 2), local) == 0.0);
    CHECK(dev(block.block(2, 2, 2, 2), local) == 0.0);
    CHECK(block.block(0, 2, 2, 2).cwiseAbs().maxCoeff() == 0.0);
}
