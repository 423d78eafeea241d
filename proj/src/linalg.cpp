#include "monoflow/linalg.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/SVD>

namespace monoflow {

HermitianEigen eig_hermitian(const CMat& A, bool want_vectors)
{
    if (A.rows() != A.cols()) throw Error("linalg", "eigensolver needs a square matrix");
    const lapack_int n = lapack_int(A.rows());
    HermitianEigen out;
    out.values.resize(n);
    if (n == 0) return out;
    CMat work = A;
    lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'U', n, work.data(), n,
                                     out.values.data());
    if (info != 0) throw Error("linalg", "zheevd failed with info " + std::to_string(info));
    if (want_vectors) out.vectors = std::move(work);
    return out;
}

GeneralEigen eig_general(const CMat& A, bool want_vectors)
{
    if (A.rows() != A.cols()) throw Error("linalg", "eigensolver needs a square matrix");
    const lapack_int n = lapack_int(A.rows());
    GeneralEigen out;
    out.values.resize(n);
    if (n == 0) return out;
    CMat work = A;
    CMat vr;
    if (want_vectors) vr.resize(n, n);
    lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', want_vectors ? 'V' : 'N', n, work.data(), n,
                                    out.values.data(), nullptr, 1, want_vectors ? vr.data() : nullptr, n);
    if (info != 0) throw Error("linalg", "zgeev failed with info " + std::to_string(info));
    if (want_vectors) {
        vr.colwise().normalize();
        out.vectors = std::move(vr);
    }
    return out;
}

RVec singular_values(const CMat& A)
{
    Eigen::BDCSVD<CMat> svd(A);
    return svd.singularValues();
}

CMat inverse(const CMat& A)
{
    Eigen::PartialPivLU<CMat> lu(A);
    return lu.inverse();
}

}  // namespace monoflow
