#include "monoflow/clifford.hpp"

#include <doctest.h>

#include <random>

using namespace monoflow;

namespace {

double dev(const CMat& a, const CMat& b) { return (a - b).cwiseAbs().maxCoeff(); }

RMat haar_orthogonal(int d, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    RMat G(d, d);
    for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = g(rng);
    Eigen::HouseholderQR<RMat> qr(G);
    RMat Q = qr.householderQ();
    RMat R = qr.matrixQR();
    for (int j = 0; j < d; ++j)
        if (R(j, j) < 0) Q.col(j) *= -1.0;
    return Q;
}

}  // namespace

TEST_CASE("clifford relations for d = 1..6")
{
    for (int d = 1; d <= 6; ++d) {
        CliffordRep rep = build_clifford(d);
        CHECK(rep.fiber_dim == (1 << (d / 2)));
        const CMat one = CMat::Identity(rep.fiber_dim, rep.fiber_dim);
        for (int i = 0; i < d; ++i) {
            const CMat& gi = rep.gammas[std::size_t(i)];
            CHECK(dev(gi, gi.adjoint()) < 1e-14);
            for (int j = 0; j < d; ++j) {
                const CMat& gj = rep.gammas[std::size_t(j)];
                CHECK(dev(gi * gj + gj * gi, (i == j ? 2.0 : 0.0) * one) < 1e-12);
            }
        }
        CHECK(rep.grading.has_value() == (d % 2 == 0));
        if (rep.grading) {
            const CMat& G = *rep.grading;
            CHECK(dev(G * G, one) < 1e-14);
            CHECK(dev(G, G.adjoint()) < 1e-14);
            for (const CMat& g : rep.gammas) CHECK(dev(G * g, -g * G) < 1e-14);
        }
    }
}

TEST_CASE("d = 2 is the Pauli representation with Gamma = sigma_3")
{
    CliffordRep rep = build_clifford(2);
    CHECK(dev(rep.gammas[0], pauli(1)) == 0.0);
    CHECK(dev(rep.gammas[1], pauli(2)) == 0.0);
    CHECK(dev(*rep.grading, pauli(3)) == 0.0);
}

TEST_CASE("d = 1 is the scalar sign representation and d = 3 uses Pauli matrices")
{
    CliffordRep r1 = build_clifford(1);
    CHECK(r1.fiber_dim == 1);
    CHECK(r1.gammas[0](0, 0) == cplx(1.0));
    CliffordRep r3 = build_clifford(3);
    CHECK(r3.fiber_dim == 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            CMat ac = r3.gammas[std::size_t(i)] * r3.gammas[std::size_t(j)] + r3.gammas[std::size_t(j)] * r3.gammas[std::size_t(i)];
            CHECK(dev(ac, (i == j ? 2.0 : 0.0) * CMat::Identity(2, 2)) < 1e-14);
        }
}

TEST_CASE("construction is deterministic and rejects bad dimensions")
{
    CHECK(dev(build_clifford(5).gammas[4], build_clifford(5).gammas[4]) == 0.0);
    CHECK_THROWS_AS(build_clifford(0), Error);
    CHECK_THROWS_AS(build_clifford(7), Error);
    CHECK_NOTHROW(build_clifford(7, 8));
}

TEST_CASE("gamma_v is linear and squares to |v|^2")
{
    CliffordRep rep = build_clifford(2);
    CHECK(dev(gamma_v(rep, RVec::Unit(2, 0)), pauli(1)) == 0.0);
    RVec v(2);
    v << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
    CMat g = gamma_v(rep, v);
    CHECK(dev(g, (pauli(1) + pauli(2)) / std::sqrt(2.0)) < 1e-15);
    CHECK(dev(g * g, CMat::Identity(2, 2)) < 1e-14);
    CHECK(gamma_v(rep, RVec::Zero(2)).cwiseAbs().maxCoeff() == 0.0);
    CliffordRep r4 = build_clifford(4);
    RVec w(4);
    w << 0.3, -1.2, 2.0, 0.7;
    CMat gw = gamma_v(r4, w);
    CHECK(dev(gw * gw, w.squaredNorm() * CMat::Identity(4, 4)) < 1e-13);
}

TEST_CASE("pin lift of the identity is trivial")
{
    CliffordRep rep = build_clifford(3);
    PinLift p = pin_lift(rep, RMat::Identity(3, 3));
    CHECK(p.reflection_vectors.empty());
    CHECK(dev(p.g, CMat::Identity(2, 2)) < 1e-14);
}

TEST_CASE("pin lift of a quasi-reflection in d = 2")
{
    CliffordRep rep = build_clifford(2);
    RMat O = RMat::Identity(2, 2);
    O(1, 1) = -1.0;
    PinLift p = pin_lift(rep, O);
    // g is gamma_1 up to a phase
    cplx phase = (rep.gammas[0].adjoint() * p.g).trace() / 2.0;
    CHECK(std::abs(std::abs(phase) - 1.0) < 1e-12);
    CHECK(dev(p.g, phase * rep.gammas[0]) < 1e-12);
    CHECK(dev(p.sign * p.g * rep.gammas[1] * p.g_reversed, -rep.gammas[1]) < 1e-12);
}

TEST_CASE("pin lift of the axis swap in d = 2")
{
    CliffordRep rep = build_clifford(2);
    RMat O(2, 2);
    O << 0, 1, 1, 0;
    PinLift p = pin_lift(rep, O);
    CHECK(dev(p.sign * p.g * rep.gammas[0] * p.g_reversed, rep.gammas[1]) < 1e-12);
    CHECK(pin_lift_defect(rep, p) < 1e-12);
}

TEST_CASE("pin lifts of 100 Haar orthogonal matrices")
{
    std::mt19937_64 rng(7);
    for (int d = 2; d <= 5; ++d) {
        CliffordRep rep = build_clifford(d);
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            RMat O = haar_orthogonal(d, rng);
            PinLift p = pin_lift(rep, O);
            worst = std::max(worst, pin_lift_defect(rep, p));
            CHECK(dev(p.g * p.g.adjoint(), CMat::Identity(rep.fiber_dim, rep.fiber_dim)) < 1e-10);
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("lifts compose up to sign on the adjoint action")
{
    std::mt19937_64 rng(11);
    CliffordRep rep = build_clifford(4);
    for (int t = 0; t < 20; ++t) {
        RMat A = haar_orthogonal(4, rng), B = haar_orthogonal(4, rng);
        PinLift pa = pin_lift(rep, A), pb = pin_lift(rep, B), pab = pin_lift(rep, A * B);
        for (int w = 0; w < 4; ++w) {
            const CMat& g = rep.gammas[std::size_t(w)];
            CMat lhs = pab.sign * pab.g * g * pab.g_reversed;
            CMat rhs = pa.sign * pb.sign * pa.g * pb.g * g * pb.g_reversed * pa.g_reversed;
            CHECK(dev(lhs, rhs) < 1e-10);
        }
    }
}

TEST_CASE("grading anticommutes with every gamma_v")
{
    CliffordRep rep = build_clifford(4);
    RVec v(4);
    v << 0.5, -0.25, 1.5, 2.0;
    CMat g = gamma_v(rep, v);
    CHECK(dev(*rep.grading * g * *rep.grading, -g) < 1e-14);
}

TEST_CASE("pin lift rejects non-orthogonal input")
{
    CliffordRep rep = build_clifford(2);
    RMat O = RMat::Identity(2, 2);
    O(0, 1) = 1e-6;
    CHECK_THROWS_AS(pin_lift(rep, O), Error);
}
