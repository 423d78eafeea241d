#include "monoflow/linalg.hpp"
#include "monoflow/models.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace monoflow;

namespace {

double dev(const CMat& a, const CMat& b) { return (a - b).cwiseAbs().maxCoeff(); }

ModelSpec even(double m)
{
    ModelSpec s;
    s.kind = ModelKind::even_dirac;
    s.d = 2;
    s.mass = m;
    return s;
}

ModelSpec odd(double m)
{
    ModelSpec s;
    s.kind = ModelKind::odd_chiral;
    s.d = 3;
    s.mass = m;
    return s;
}

// restriction to fiber components c with keep(c)
CMat fiber_block(const CMat& a, int fiber, const std::function<bool(int)>& keep)
{
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        if (keep(int(i % fiber))) idx.push_back(i);
    return a(idx, idx);
}

CMat interior_mask(const LatticeBox& box, double width)
{
    CMat m = CMat::Zero(box.dim(), box.dim());
    for (int s = 0; s < box.num_sites(); ++s)
        if (!box.in_shell(s, width))
            for (int f = 0; f < box.fiber_dim(); ++f) m(s * box.fiber_dim() + f, s * box.fiber_dim() + f) = 1;
    return m;
}

}  // namespace

TEST_CASE("critical masses")
{
    CHECK(near_critical_mass(2, 2.0));
    CHECK(near_critical_mass(2, 0.0));
    CHECK(near_critical_mass(3, -1.0 + 1e-7));
    CHECK_FALSE(near_critical_mass(2, 1.0));
    CHECK_FALSE(near_critical_mass(3, 2.0));
    CHECK_THROWS_AS(model_kind_from_string("bogus"), Error);
    CHECK(model_kind_from_string(to_string(ModelKind::odd_chiral)) == ModelKind::odd_chiral);
}

TEST_CASE("expanded models act on the orbital fiber only")
{
    ModelSpec e = expand_model(even(1.0));
    CHECK(e.hopping.size() == 4);
    CHECK(e.potential.rows() == 2);
    CHECK(expand_model(odd(1.0)).hopping.size() == 6);
    ModelSpec bad = even(1.0);
    bad.d = 3;
    CHECK_THROWS_AS(expand_model(bad), Error);
}

TEST_CASE("even_dirac d = 2, m = 1 has a bulk gap at alpha = 0")
{
    const LatticeBox box = LatticeBox::half_integer(2, 12);
    const LatticeOperator h = build_even_dirac(even(1.0), box, nullptr, GammaBlock::upper);
    CHECK(h.flag_defect() < 1e-13);
    const HermitianEigen e = eig_hermitian(h.dense());
    const int fiber = h.box.fiber_dim();
    double gap = 1e300;
    for (Eigen::Index j = 0; j < e.values.size(); ++j) {
        double shell = 0.0;
        for (int s = 0; s < h.box.num_sites(); ++s)
            if (h.box.in_shell(s, 2.0)) shell += e.vectors.col(j).segment(s * fiber, fiber).squaredNorm();
        if (shell < 0.5) gap = std::min(gap, std::abs(e.values(j)));
    }
    CHECK(gap > 0.2);
}

TEST_CASE("monopole insertion in even d")
{
    const ModelSpec spec = even(1.0);
    const LatticeBox box = LatticeBox::half_integer(2, 4);
    PhaseProvider phases(box);
    const double a = 0.3;
    const CMat H = build_even_dirac(spec, box, &phases.get(a), GammaBlock::full).dense();
    const CMat h = build_even_dirac(spec, box, &phases.get(a), GammaBlock::upper).dense();
    const CMat hm = build_even_dirac(spec, box, &phases.get(-a), GammaBlock::upper).dense();
    const CMat lower = build_even_dirac(spec, box, &phases.get(a), GammaBlock::lower).dense();
    CHECK(dev(H, H.adjoint()) < 1e-13);
    // orbital x gamma with Gamma = diag(1, -1) on the last factor
    CHECK(dev(fiber_block(H, 4, [](int c) { return c % 2 == 0; }), h) == 0.0);
    CHECK(dev(fiber_block(H, 4, [](int c) { return c % 2 == 1; }), lower) == 0.0);
    CHECK(dev(lower, hm) < 1e-12);
    CHECK(fiber_block(H, 4, [](int c) { return c % 2 == 0; }).rows() * 2 == H.rows());

    // F H_a F = H_{1-a} away from the boundary
    const LatticeBox full = box.with_fiber(4);
    const CMat F = dirac_phase(dirac_operator(full, build_clifford(2))).dense();
    const CMat H1 = build_even_dirac(spec, box, &phases.get(1 - a), GammaBlock::full).dense();
    const CMat P = interior_mask(full, 1.0);
    CHECK(dev(P * (F * H * F - H1) * P, CMat::Zero(H.rows(), H.cols())) < 1e-8);
}

TEST_CASE("H_alpha - H_0 decays away from the monopole")
{
    const ModelSpec spec = even(1.0);
    const LatticeBox box = LatticeBox::half_integer(2, 8);
    PhaseProvider phases(box);
    const CMat diff = (build_even_dirac(spec, box, &phases.get(0.5), GammaBlock::upper).dense() -
                       build_even_dirac(spec, box, nullptr, GammaBlock::upper).dense());
    const int f = 2;
    double worst = 0.0;
    for (int s = 0; s < box.num_sites(); ++s) {
        const double r = box.norm(s);
        worst = std::max(worst, r * diff.middleRows(s * f, f).norm());
    }
    CHECK(worst < 2.0);
}

TEST_CASE("odd_chiral H is chiral and invertible at alpha = 0")
{
    const LatticeBox box = LatticeBox::half_integer(3, 2);
    PhaseProvider phases(box);
    for (double a : {0.0, 0.4}) {
        const LatticeOperator A = build_odd_chiral_A(odd(2.0), box, a == 0.0 ? nullptr : &phases.get(a));
        const CMat H = chiral_hamiltonian(A).dense();
        const CMat J = chiral_grading(A.box).dense();
        CHECK(dev(J * H * J, -H) < 1e-14);
        CHECK(dev(H, H.adjoint()) < 1e-14);
        if (a == 0.0) CHECK(singular_values(A.dense()).minCoeff() > 1e-3);
    }
}

TEST_CASE("SSH operators")
{
    const int sites = 11;
    const SshOperators s0 = build_ssh(sites, 0.0);
    const CMat F = s0.F.dense(), S0 = s0.U.dense();
    CHECK(dev(S0, S0.adjoint().adjoint()) == 0.0);
    for (double a : {0.0, 0.3, 0.5}) {
        const CMat W = F * build_ssh(sites, a).U.dense() * S0.adjoint();
        CMat expect = F * S0 * S0.adjoint();
        expect(sites / 2, sites / 2) = -std::exp(kI * (std::numbers::pi * a));
        CHECK(dev(W, expect) < 1e-14);
    }
    CHECK(dev(build_ssh(sites, 1.0).U.dense(), F * S0 * F) < 1e-14);
    const CMat J = chiral_grading(s0.U.box).dense();
    CHECK(dev(J * s0.H.dense() * J, -s0.H.dense()) == 0.0);
}

TEST_CASE("ChirInd example path")
{
    const int sites = 11;
    CHECK(dev(chirind_example_path(sites, 0.0, false).T.dense(), build_ssh(sites, 0.0).H.dense()) == 0.0);
    const ChirIndPath mid = chirind_example_path(sites, 0.5, false);
    CHECK(mid.singular);
    // the open chain carries one end mode in ker A and one in ker A^* at every alpha;
    // breaking the bond adds two more
    auto zeros = [](const CMat& t) { return (singular_values(t).array() < 1e-12).count(); };
    CHECK(zeros(mid.T.dense()) - zeros(chirind_example_path(sites, 0.0, false).T.dense()) == 2);
    for (int i = 0; i <= 20; ++i) {
        const ChirIndPath p = chirind_example_path(sites, i / 20.0, true, true);
        CHECK_FALSE(p.singular);
        CHECK(singular_values(p.T.dense()).minCoeff() > 1e-3);
    }
    const CMat F = build_ssh(sites, 0.0).F.dense();
    const CMat A0 = chirind_example_path(sites, 0.0, false, true).A.dense();
    const CMat A1 = chirind_example_path(sites, 1.0, false, true).A.dense();
    CHECK(dev(A1, F * A0 * F) < 1e-14);
}

TEST_CASE("symmetry sectors reproduce the full spectrum")
{
    const ModelSpec spec = even(1.0);
    const LatticeBox box = LatticeBox::half_integer(2, 3);
    PhaseProvider phases(box);
    const LatticeOperator h = build_even_dirac(spec, box, &phases.get(0.35), GammaBlock::upper);
    const std::vector<Sector> sectors = build_sectors(h.box, model_symmetry(spec, GammaBlock::upper));
    std::vector<double> merged;
    Eigen::Index total = 0;
    for (const Sector& s : sectors) {
        const CMat hs = compress(s, h.data);
        CHECK(dev(hs, hs.adjoint()) < 1e-12);
        const RVec ev = eig_hermitian(hs, false).values;
        for (int k = 0; k < s.irrep_dim; ++k) merged.insert(merged.end(), ev.data(), ev.data() + ev.size());
        total += s.irrep_dim * s.W.cols();
    }
    CHECK(total == h.dim());
    std::sort(merged.begin(), merged.end());
    const RVec full = eig_hermitian(h.dense(), false).values;
    REQUIRE(Eigen::Index(merged.size()) == full.size());
    for (Eigen::Index i = 0; i < full.size(); ++i) CHECK(std::abs(full(i) - merged[std::size_t(i)]) < 1e-10);
}

TEST_CASE("cube rotations reduce the d = 3 chiral operator")
{
    const ModelSpec spec = odd(2.0);
    const LatticeBox box = LatticeBox::half_integer(3, 2);
    PhaseProvider phases(box);
    const LatticeOperator A = build_odd_chiral_A(spec, box, &phases.get(0.4));
    const SymmetryGroup G = model_symmetry(spec, GammaBlock::full);
    CHECK(G.elements.size() == 24);
    G.verify();
    Eigen::Index total = 0;
    for (const Sector& s : build_sectors(A.box, G)) {
        CMat off = s.W.adjoint() * (A.data * s.W);
        CHECK(off.rows() == s.W.cols());
        // the range of W is invariant: no leakage out of the sector
        CMat leak = CMat(A.data * s.W) - CMat(s.W) * off;
        CHECK(leak.cwiseAbs().maxCoeff() < 1e-12);
        total += s.irrep_dim * s.W.cols();
    }
    CHECK(total == A.dim());
}
