#include "monoflow/clifford.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace monoflow {

CMat pauli(int k)
{
    CMat s = CMat::Zero(2, 2);
    switch (k) {
    case 1: s(0, 1) = 1.0; s(1, 0) = 1.0; break;
    case 2: s(0, 1) = -kI; s(1, 0) = kI; break;
    case 3: s(0, 0) = 1.0; s(1, 1) = -1.0; break;
    default: throw Error("clifford", "pauli index must be 1, 2 or 3");
    }
    return s;
}

namespace {

CMat kron(const CMat& a, const CMat& b)
{
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

CliffordRep build_recursive(int d)
{
    CliffordRep rep;
    rep.d = d;
    if (d == 1) {
        rep.fiber_dim = 1;
        rep.gammas.push_back(CMat::Ones(1, 1));
        return rep;
    }
    CliffordRep lower = build_recursive(d - 1);
    if (d % 2 == 1) {
        // odd: append the grading of the even representation below
        rep.fiber_dim = lower.fiber_dim;
        rep.gammas = lower.gammas;
        rep.gammas.push_back(*lower.grading);
        return rep;
    }
    const CMat one = CMat::Identity(lower.fiber_dim, lower.fiber_dim);
    rep.fiber_dim = 2 * lower.fiber_dim;
    for (const CMat& g : lower.gammas)
        rep.gammas.push_back(kron(pauli(1), g));
    rep.gammas.push_back(kron(pauli(2), one));
    rep.grading = kron(pauli(3), one);
    return rep;
}

RVec normalize_sign(RVec v)
{
    v.normalize();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-12) {
            if (v(i) < 0) v = -v;
            break;
        }
    }
    return v;
}

struct Rotation {
    double theta;
    RVec q1, q2;
};

// Quasi-reflection vectors whose product R_{v1}...R_{vk} equals O, or -O when
// that is impossible (odd d, det O = -1). Returns false in the latter case.
bool factor_orthogonal(const RMat& O, std::vector<RVec>& out)
{
    const int d = static_cast<int>(O.rows());
    Eigen::RealSchur<RMat> schur(O);
    const RMat Q = schur.matrixU();
    const RMat T = schur.matrixT();

    std::vector<Rotation> rotations;
    std::vector<RVec> minus;
    std::vector<RVec> plus;
    for (int i = 0; i < d;) {
        if (i + 1 < d && std::abs(T(i + 1, i)) > 1e-12) {
            RMat Qb = Q.middleCols(i, 2);
            RMat B = Qb.transpose() * O * Qb;
            double th = std::atan2(B(1, 0) - B(0, 1), B(0, 0) + B(1, 1));
            rotations.push_back({th, Qb.col(0), Qb.col(1)});
            i += 2;
        } else {
            if (T(i, i) < 0) minus.push_back(Q.col(i));
            else plus.push_back(Q.col(i));
            i += 1;
        }
    }
    std::stable_sort(rotations.begin(), rotations.end(),
                     [](const Rotation& a, const Rotation& b) { return a.theta < b.theta; });

    if (minus.size() % 2 == 1 && d % 2 == 1) return false;

    out.clear();
    for (const Rotation& r : rotations) {
        if (std::abs(r.theta) < 1e-12) continue;
        RVec u1 = r.q1;
        RVec u2 = std::cos(r.theta / 2) * r.q1 + std::sin(r.theta / 2) * r.q2;
        out.push_back(normalize_sign(u2));
        out.push_back(normalize_sign(u1));
    }
    std::size_t paired = minus.size() - minus.size() % 2;
    for (std::size_t i = 0; i < paired; ++i)
        out.push_back(normalize_sign(minus[i]));
    if (minus.size() % 2 == 1) {
        // a single Householder reflection in even d: product of the quasi-reflections
        // along an orthonormal basis of the complement of its normal
        const RVec& w = minus.back();
        for (int j = 0; j < d; ++j) {
            RVec q = Q.col(j);
            if (std::abs(q.dot(w)) > 0.5) continue;
            out.push_back(normalize_sign(q));
        }
    }
    return true;
}

}  // namespace

CliffordRep build_clifford(int d, int max_d)
{
    if (d < 1) throw Error("clifford", "dimension must be positive");
    if (d > max_d) throw Error("clifford", "dimension " + std::to_string(d) + " exceeds maximum " + std::to_string(max_d));
    return build_recursive(d);
}

CMat gamma_v(const CliffordRep& rep, const RVec& v)
{
    if (v.size() != rep.d) throw Error("clifford", "vector dimension mismatch");
    CMat out = CMat::Zero(rep.fiber_dim, rep.fiber_dim);
    for (int k = 0; k < rep.d; ++k)
        if (v(k) != 0.0) out += v(k) * rep.gammas[k];
    return out;
}

PinLift pin_lift(const CliffordRep& rep, const RMat& O)
{
    if (O.rows() != rep.d || O.cols() != rep.d) throw Error("clifford", "orthogonal matrix has wrong size");
    double defect = (O.transpose() * O - RMat::Identity(rep.d, rep.d)).cwiseAbs().maxCoeff();
    if (defect > 1e-10) throw Error("clifford", "matrix is not orthogonal");

    PinLift lift;
    lift.orthogonal = O;
    if (!factor_orthogonal(O, lift.reflection_vectors)) {
        factor_orthogonal(-O, lift.reflection_vectors);
        lift.sign = -1;
    }
    const int n = rep.fiber_dim;
    lift.g = CMat::Identity(n, n);
    lift.g_reversed = CMat::Identity(n, n);
    for (const RVec& v : lift.reflection_vectors) {
        CMat gv = gamma_v(rep, v);
        lift.g = lift.g * gv;
        lift.g_reversed = gv * lift.g_reversed;
    }
    return lift;
}

double pin_lift_defect(const CliffordRep& rep, const PinLift& lift)
{
    double worst = 0.0;
    for (int k = 0; k < rep.d; ++k) {
        RVec w = RVec::Unit(rep.d, k);
        CMat lhs = gamma_v(rep, lift.orthogonal * w);
        CMat rhs = double(lift.sign) * lift.g * rep.gammas[k] * lift.g_reversed;
        worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace monoflow
