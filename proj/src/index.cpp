#include "monoflow/index.hpp"

#include "monoflow/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace monoflow {

std::string to_string(IndexMethod m)
{
    switch (m) {
    case IndexMethod::kernel_count: return "kernel_count";
    case IndexMethod::fedosov_trace: return "fedosov_trace";
    case IndexMethod::oracle_momentum: return "oracle_momentum";
    }
    return "unknown";
}

int fedosov_power(int d) { return std::max(1, (d + 1) / 2 + 1); }

namespace {

bool is_diagonal(const CMat& M)
{
    for (Eigen::Index j = 0; j < M.cols(); ++j)
        for (Eigen::Index i = 0; i < M.rows(); ++i)
            if (i != j && M(i, j) != cplx(0.0)) return false;
    return true;
}

// Tr(inner X^q); the last factor is folded into the trace
double power_trace(const CMat& X, int q, const CMat& inner)
{
    CMat head = X;
    for (int i = 2; i < q; ++i) head = head * X;
    if (q == 1) {
        if (inner.size() == 0) return X.trace().real();
        return inner.cwiseProduct(X.transpose()).sum().real();
    }
    // Tr(inner head X) = sum_{j,k} (inner head)_{jk} X_{kj}
    if (inner.size() == 0) return head.cwiseProduct(X.transpose()).sum().real();
    if (is_diagonal(inner)) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < X.rows(); ++j) {
            const cplx w = inner(j, j);
            if (w == cplx(0.0)) continue;
            acc += (w * head.row(j).transpose().cwiseProduct(X.col(j)).sum()).real();
        }
        return acc;
    }
    return (inner * head).cwiseProduct(X.transpose()).sum().real();
}

double fedosov_from(const CMat& P, const CMat& T, const CMat& S, int q, const CMat& inner)
{
    if (q < 1) throw Error("index", "Fedosov power must be positive");
    const CMat X = P - S * T;
    const CMat Y = P - T * S;
    return power_trace(X, q, inner) - power_trace(Y, q, inner);
}

// orthonormal basis of the range of a projection
CMat range_basis(const CMat& P)
{
    HermitianEigen e = eig_hermitian(0.5 * (P + P.adjoint()), true);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < e.values.size(); ++i)
        if (e.values(i) > 0.5) keep.push_back(i);
    CMat Q(P.rows(), Eigen::Index(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) Q.col(Eigen::Index(i)) = e.vectors.col(keep[i]);
    return Q;
}

}  // namespace

double fedosov_raw(const CMat& P, const CMat& A, const CMat& A_inv, int q, const CMat& inner)
{
    if (P.rows() != A.rows() || A.rows() != A_inv.rows()) throw Error("index", "operator sizes differ");
    return fedosov_from(P, P * A * P, P * A_inv * P, q, inner);
}

double fedosov_raw_unitary(const CMat& P, const SpMat& U, int q, const CMat& inner)
{
    if (P.rows() != U.rows()) throw Error("index", "operator sizes differ");
    const CMat T = P * CMat(U * P);
    return fedosov_from(P, T, T.adjoint(), q, inner);
}

KernelCount kernel_count(const CMat& P, const CMat& A, const CMat& shell, double tol, double max_weight)
{
    const CMat Q = range_basis(P);
    const CMat T = Q.adjoint() * A * Q;
    Eigen::BDCSVD<CMat> svd(T, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RVec& s = svd.singularValues();
    const CMat Vk = Q * svd.matrixV();
    const CMat Uk = Q * svd.matrixU();
    auto weight = [&](const CMat& B, Eigen::Index i) {
        if (shell.size() == 0) return 0.0;
        return B.col(i).dot(shell * B.col(i)).real();
    };
    KernelCount out;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) >= tol) continue;
        // right singular vectors span the kernel, left ones the cokernel
        if (weight(Vk, i) < max_weight) ++out.kernel; else ++out.discarded;
        if (weight(Uk, i) < max_weight) ++out.cokernel; else ++out.discarded;
    }
    out.value = out.kernel - out.cokernel;
    return out;
}

IndexResult index_from_raws(IndexMethod method, std::vector<int> radii, std::vector<double> raws)
{
    if (raws.empty()) throw Error("index", "no raw index values");
    IndexResult r;
    r.method = method;
    r.raw = raws.front();
    r.value = int(std::lround(r.raw));
    auto [lo, hi] = std::minmax_element(raws.begin(), raws.end());
    r.stability = *hi - *lo;
    for (double x : raws)
        if (std::abs(x - r.value) > 0.2) r.stable = false;
    r.radii = std::move(radii);
    r.raws = std::move(raws);
    return r;
}

}  // namespace monoflow
