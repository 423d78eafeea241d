#pragma once

#include "monoflow/types.hpp"

namespace monoflow {

struct HermitianEigen {
    RVec values;   // ascending
    CMat vectors;  // columns, empty when not requested
};

struct GeneralEigen {
    CVec values;
    CMat vectors;  // right eigenvectors, unit 2-norm columns
};

HermitianEigen eig_hermitian(const CMat& A, bool want_vectors = true);
GeneralEigen eig_general(const CMat& A, bool want_vectors = true);

RVec singular_values(const CMat& A);
CMat inverse(const CMat& A);

// Hermitian functional calculus: f applied to the eigenvalues
template <class F>
CMat hermitian_function(const CMat& A, F f)
{
    HermitianEigen e = eig_hermitian(A, true);
    CVec fv(e.values.size());
    for (Eigen::Index i = 0; i < e.values.size(); ++i) fv(i) = f(e.values(i));
    return e.vectors * fv.asDiagonal() * e.vectors.adjoint();
}

}  // namespace monoflow
