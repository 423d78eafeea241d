#include "monoflow/symmetry.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>

namespace monoflow {

namespace {

bool same(const RMat& a, const RMat& b) { return (a - b).cwiseAbs().maxCoeff() < 1e-9; }

RMat quarter_turn(int a)
{
    RMat r(2, 2);
    r << 0, -1, 1, 0;
    RMat out = RMat::Identity(2, 2);
    for (int i = 0; i < ((a % 4) + 4) % 4; ++i) out = r * out;
    return out;
}

CMat scalar(cplx z)
{
    CMat m(1, 1);
    m(0, 0) = z;
    return m;
}

}  // namespace

int SymmetryGroup::find(const RMat& O, int grade) const
{
    for (std::size_t i = 0; i < elements.size(); ++i)
        if (elements[i].grade == grade && same(elements[i].O, O)) return int(i);
    return -1;
}

void SymmetryGroup::verify() const
{
    for (std::size_t a = 0; a < elements.size(); ++a)
        for (std::size_t b = 0; b < elements.size(); ++b) {
            const auto& ea = elements[a];
            const auto& eb = elements[b];
            int c = find(ea.O * eb.O, (ea.grade + eb.grade) % 2);
            if (c < 0) throw Error("symmetry", "element set is not closed under multiplication");
            if ((ea.U * eb.U - elements[std::size_t(c)].U).cwiseAbs().maxCoeff() > 1e-9)
                throw Error("symmetry", "fiber action is not a representation");
            for (const Irrep& ir : irreps)
                if ((ir.D[a] * ir.D[b] - ir.D[std::size_t(c)]).cwiseAbs().maxCoeff() > 1e-9)
                    throw Error("symmetry", "irrep " + ir.name + " is not a representation");
        }
    int total = 0;
    for (const Irrep& ir : irreps) total += ir.dim * ir.dim;
    if (total != int(elements.size())) throw Error("symmetry", "irreps do not exhaust the group");
}

SymmetryGroup trivial_group(int d, int fiber_dim)
{
    SymmetryGroup G;
    G.d = d;
    G.elements.push_back({RMat::Identity(d, d), 0, CMat::Identity(fiber_dim, fiber_dim)});
    G.irreps.push_back({"A", 1, {scalar(1.0)}});
    return G;
}

SymmetryGroup quarter_turns(const FiberLift& fiber)
{
    SymmetryGroup G;
    G.d = 2;
    for (int a = 0; a < 4; ++a) G.elements.push_back({quarter_turn(a), 0, fiber(quarter_turn(a))});
    for (int k = 0; k < 4; ++k) {
        Irrep ir{"k" + std::to_string(k), 1, {}};
        for (int a = 0; a < 4; ++a) ir.D.push_back(scalar(std::pow(kI, a * k)));
        G.irreps.push_back(std::move(ir));
    }
    G.verify();
    return G;
}

SymmetryGroup quarter_turns_graded(const FiberLift& fiber, const CMat& grading)
{
    SymmetryGroup G;
    G.d = 2;
    for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 4; ++a) {
            CMat U = fiber(quarter_turn(a));
            if (b) U = U * grading;
            G.elements.push_back({quarter_turn(a), b, U});
        }
    for (int l = 0; l < 2; ++l)
        for (int k = 0; k < 4; ++k) {
            Irrep ir{"k" + std::to_string(k) + (l ? "-" : "+"), 1, {}};
            for (int b = 0; b < 2; ++b)
                for (int a = 0; a < 4; ++a) ir.D.push_back(scalar(std::pow(kI, a * k) * (l && b ? -1.0 : 1.0)));
            G.irreps.push_back(std::move(ir));
        }
    G.verify();
    return G;
}

SymmetryGroup octahedral_rotations(const FiberLift& fiber)
{
    SymmetryGroup G;
    G.d = 3;
    std::array<int, 3> perm{0, 1, 2};
    do {
        for (int signs = 0; signs < 8; ++signs) {
            RMat O = RMat::Zero(3, 3);
            for (int c = 0; c < 3; ++c) O(perm[std::size_t(c)], c) = (signs >> c) & 1 ? -1.0 : 1.0;
            if (O.determinant() < 0) continue;
            G.elements.push_back({O, 0, fiber(O)});
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    RMat B(3, 2);
    B << 1 / std::sqrt(2.0), 1 / std::sqrt(6.0), -1 / std::sqrt(2.0), 1 / std::sqrt(6.0), 0, -2 / std::sqrt(6.0);
    Irrep a1{"A1", 1, {}}, a2{"A2", 1, {}}, e{"E", 2, {}}, t1{"T1", 3, {}}, t2{"T2", 3, {}};
    for (const auto& el : G.elements) {
        RMat P = el.O.cwiseAbs();
        double sg = P.determinant();
        a1.D.push_back(scalar(1.0));
        a2.D.push_back(scalar(sg));
        e.D.push_back((B.transpose() * P * B).cast<cplx>());
        t1.D.push_back(el.O.cast<cplx>());
        t2.D.push_back((sg * el.O).cast<cplx>());
    }
    G.irreps = {a1, a2, e, t1, t2};
    G.verify();
    return G;
}

std::vector<Sector> build_sectors(const LatticeBox& box, const SymmetryGroup& G)
{
    const int d = box.d();
    if (G.d != d) throw Error("symmetry", "group and box dimension differ");
    const int f = box.fiber_dim();
    const std::size_t order = G.elements.size();
    for (const auto& el : G.elements)
        if (el.U.rows() != f) throw Error("symmetry", "fiber action has wrong size");

    // image of every site under every element
    std::vector<std::vector<int>> image(order, std::vector<int>(std::size_t(box.num_sites())));
    std::vector<int> n(static_cast<std::size_t>(d));
    for (std::size_t g = 0; g < order; ++g)
        for (int s = 0; s < box.num_sites(); ++s) {
            RVec y = G.elements[g].O * box.position(s);
            for (int a = 0; a < d; ++a) n[std::size_t(a)] = int(std::lround(y(a) - box.offset()[std::size_t(a)]));
            int t = box.index(n);
            if (t < 0) throw Error("symmetry", "box is not invariant under the group");
            image[g][std::size_t(s)] = t;
        }

    std::vector<std::vector<int>> orbits;
    std::vector<char> seen(static_cast<std::size_t>(box.num_sites()), 0);
    for (int s = 0; s < box.num_sites(); ++s) {
        if (seen[std::size_t(s)]) continue;
        std::vector<int> orb;
        for (std::size_t g = 0; g < order; ++g) {
            int t = image[g][std::size_t(s)];
            if (!seen[std::size_t(t)]) {
                seen[std::size_t(t)] = 1;
                orb.push_back(t);
            }
        }
        std::sort(orb.begin(), orb.end());
        orbits.push_back(std::move(orb));
    }

    std::vector<Sector> sectors;
    for (const Irrep& ir : G.irreps) {
        std::vector<Triplet> trip;
        int col = 0;
        for (const auto& orb : orbits) {
            const int m = int(orb.size());
            const int ld = m * f;
            auto local = [&](int site) { return int(std::find(orb.begin(), orb.end(), site) - orb.begin()); };
            CMat P = CMat::Zero(ld, ld);
            for (std::size_t g = 0; g < order; ++g) {
                cplx w = std::conj(ir.D[g](0, 0)) * double(ir.dim) / double(order);
                if (w == 0.0) continue;
                for (int i = 0; i < m; ++i) {
                    int j = local(image[g][std::size_t(orb[std::size_t(i)])]);
                    P.block(j * f, i * f, f, f) += w * G.elements[g].U;
                }
            }
            Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (P + P.adjoint()));
            for (int c = 0; c < ld; ++c) {
                if (es.eigenvalues()(c) < 0.5) continue;
                for (int r = 0; r < ld; ++r) {
                    cplx v = es.eigenvectors()(r, c);
                    if (std::abs(v) > 1e-14)
                        trip.emplace_back(Eigen::Index(orb[std::size_t(r / f)]) * f + r % f, col, v);
                }
                ++col;
            }
        }
        Sector sec{ir.name, ir.dim, SpMat(box.dim(), col)};
        sec.W.setFromTriplets(trip.begin(), trip.end());
        sectors.push_back(std::move(sec));
    }
    return sectors;
}

CMat compress(const Sector& s, const SpMat& A)
{
    SpMat AW = A * s.W;
    return CMat(s.W.adjoint() * AW);
}

CMat compress(const Sector& s, const CMat& A)
{
    CMat AW = A * s.W;
    return s.W.adjoint() * AW;
}

CMat compress_indicator(const Sector& s, const LatticeBox& box, const std::function<bool(int)>& keep)
{
    const int f = box.fiber_dim();
    SpMat chi(box.dim(), box.dim());
    std::vector<Triplet> trip;
    for (int site = 0; site < box.num_sites(); ++site)
        if (keep(site))
            for (int i = 0; i < f; ++i) trip.emplace_back(site * f + i, site * f + i, 1.0);
    chi.setFromTriplets(trip.begin(), trip.end());
    return compress(s, chi);
}

}  // namespace monoflow
