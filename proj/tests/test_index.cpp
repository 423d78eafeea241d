#include "monoflow/index.hpp"
#include "monoflow/lattice.hpp"
#include "monoflow/models.hpp"
#include "monoflow/oracles.hpp"

#include <doctest.h>

using namespace monoflow;

namespace {

// block diagonal sum
CMat dsum(const CMat& a, const CMat& b)
{
    CMat out = CMat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

struct Chain {
    CMat P, S, shell, inner;
};

Chain ssh_chain(int half)
{
    const SshOperators s = build_ssh(2 * half + 1, 0.0);
    const LatticeBox& box = s.U.box;
    Chain c{hardy_projection(s.F).dense(), s.U.dense(), CMat::Zero(box.dim(), box.dim()),
            CMat::Zero(box.dim(), box.dim())};
    for (int x = 0; x < box.num_sites(); ++x) {
        c.shell(x, x) = box.in_shell(x, 2.0) ? 1.0 : 0.0;
        c.inner(x, x) = box.in_shell(x, 1.0) ? 0.0 : 1.0;
    }
    return c;
}

ModelSpec model(ModelKind kind, int d, double m)
{
    ModelSpec s;
    s.kind = kind;
    s.d = d;
    s.mass = m;
    return s;
}

}  // namespace

TEST_CASE("Fedosov power")
{
    CHECK(fedosov_power(1) == 2);
    CHECK(fedosov_power(2) == 2);
    CHECK(fedosov_power(3) == 3);
    CHECK(fedosov_power(4) == 3);
}

TEST_CASE("the identity has index zero")
{
    const Chain c = ssh_chain(6);
    const CMat one = CMat::Identity(c.P.rows(), c.P.cols());
    CHECK(std::abs(fedosov_raw(c.P, one, one, 1)) < 1e-12);
    const KernelCount k = kernel_count(c.P, one, c.shell);
    CHECK(k.value == 0);
    CHECK(k.kernel == 0);
}

TEST_CASE("shift on the half-line has index one")
{
    const Chain c = ssh_chain(10);
    const double raw = fedosov_raw(c.P, c.S, c.S.adjoint(), 1, c.inner);
    CHECK(raw == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fedosov_raw_unitary(c.P, c.S.sparseView(), 1, c.inner) == doctest::Approx(raw).epsilon(1e-12));
    const KernelCount k = kernel_count(c.P, c.S, c.shell);
    CHECK(k.value == 1);
    CHECK(k.discarded > 0);
    CHECK(fedosov_raw(c.P, c.S.adjoint(), c.S, 1, c.inner) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("index is additive under direct sums")
{
    const Chain c = ssh_chain(8);
    const CMat P = dsum(c.P, c.P), inner = dsum(c.inner, c.inner), shell = dsum(c.shell, c.shell);
    const CMat two = dsum(c.S, c.S), zero = dsum(c.S, c.S.adjoint());
    CHECK(fedosov_raw(P, two, two.adjoint(), 1, inner) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(std::abs(fedosov_raw(P, zero, zero.adjoint(), 1, inner)) < 1e-9);
    CHECK(kernel_count(P, two, shell).value == 2);
    CHECK(kernel_count(P, zero, shell).value == 0);
}

TEST_CASE("rounding and radius stability")
{
    IndexResult r = index_from_raws(IndexMethod::fedosov_trace, {4, 6}, {-0.983, -0.995});
    CHECK(r.value == -1);
    CHECK(r.stable);
    CHECK(r.stability == doctest::Approx(0.012));
    r = index_from_raws(IndexMethod::fedosov_trace, {4, 6}, {0.95, 0.6});
    CHECK(r.value == 1);
    CHECK_FALSE(r.stable);
    CHECK(to_string(IndexMethod::kernel_count) == "kernel_count");
}

TEST_CASE("Bloch symbols")
{
    RVec k = RVec::Zero(2);
    const ModelSpec e = model(ModelKind::even_dirac, 2, 1.0);
    const CliffordRep nu = orbital_rep(e);
    CHECK((bloch_symbol(e, k) - 3.0 * *nu.grading).cwiseAbs().maxCoeff() < 1e-14);
    k << 0.3, -1.1;
    const double h = 1e-6;
    RVec kp = k;
    kp(1) += h;
    RVec km = k;
    km(1) -= h;
    const CMat fd = (bloch_symbol(e, kp) - bloch_symbol(e, km)) / (2 * h);
    CHECK((fd - bloch_derivative(e, k, 1)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("Chern oracle in d = 2")
{
    CHECK(chern_oracle_even(model(ModelKind::even_dirac, 2, -10.0), 41).value == 0);
    const OracleResult one = chern_oracle_even(model(ModelKind::even_dirac, 2, 1.0), 51);
    const OracleResult neg = chern_oracle_even(model(ModelKind::even_dirac, 2, -1.0), 51);
    const OracleResult three = chern_oracle_even(model(ModelKind::even_dirac, 2, 3.0), 51);
    CHECK(one.value == -1);
    CHECK(neg.value == 1);
    CHECK(three.value == 0);
    CHECK(one.raw == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(one.min_gap > 0.5);
    CHECK_THROWS_AS(chern_oracle_even(model(ModelKind::even_dirac, 2, 2.0), 41), Error);
}

TEST_CASE("Chern oracle in d = 4")
{
    CHECK(chern_oracle_even(model(ModelKind::even_dirac, 4, 3.0), 17).value != 0);
    CHECK(chern_oracle_even(model(ModelKind::even_dirac, 4, -10.0), 9).value == 0);
}

TEST_CASE("winding oracle")
{
    CHECK(winding_oracle_odd(model(ModelKind::ssh, 1, 0.0), 101).value == 1);
    CHECK(winding_oracle_odd(model(ModelKind::ssh, 1, 0.0), 101).raw == doctest::Approx(1.0));
    CHECK(winding_oracle_odd(model(ModelKind::ssh, 1, 3.0), 101).value == 0);
    CHECK_THROWS_AS(winding_oracle_odd(model(ModelKind::ssh, 1, 1.0), 101), Error);

    const OracleResult w = winding_oracle_odd(model(ModelKind::odd_chiral, 3, 2.0), 41);
    CHECK(w.value == -1);
    CHECK(w.raw == doctest::Approx(-1.0).epsilon(1e-3));
    CHECK(winding_oracle_odd(model(ModelKind::odd_chiral, 3, 0.0), 41).value == 2);
    CHECK(winding_oracle_odd(model(ModelKind::odd_chiral, 3, -10.0), 21).value == 0);
    CHECK_THROWS_AS(winding_oracle_odd(model(ModelKind::odd_chiral, 3, 1.0), 21), Error);
}
