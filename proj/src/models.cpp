#include "monoflow/models.hpp"

#include <cmath>

namespace monoflow {

namespace {

CMat kron(const CMat& a, const CMat& b)
{
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

int block_size(int d, GammaBlock block)
{
    if (d < 2) return 1;
    int g = build_clifford(d).fiber_dim;
    if (block == GammaBlock::full) return g;
    if (d % 2 != 0) throw Error("models", "Gamma blocks exist only in even dimension");
    return g / 2;
}

SpMat identity(Eigen::Index n)
{
    SpMat one(n, n);
    one.setIdentity();
    return one;
}

}  // namespace

std::string to_string(ModelKind k)
{
    switch (k) {
    case ModelKind::even_dirac: return "even_dirac";
    case ModelKind::odd_chiral: return "odd_chiral";
    case ModelKind::ssh: return "ssh";
    case ModelKind::custom_polynomial: return "custom_polynomial";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& s)
{
    if (s == "even_dirac") return ModelKind::even_dirac;
    if (s == "odd_chiral") return ModelKind::odd_chiral;
    if (s == "ssh") return ModelKind::ssh;
    if (s == "custom_polynomial") return ModelKind::custom_polynomial;
    throw Error("models", "unknown model kind '" + s + "'");
}

CliffordRep orbital_rep(const ModelSpec& spec) { return build_clifford(spec.d); }

bool near_critical_mass(int d, double m, double tol)
{
    for (int c = -d; c <= d; c += 2)
        if (std::abs(m - c) <= tol) return true;
    return false;
}

ModelSpec expand_model(const ModelSpec& spec)
{
    ModelSpec out = spec;
    if (spec.kind == ModelKind::custom_polynomial || spec.kind == ModelKind::ssh) return out;
    CliffordRep nu = orbital_rep(spec);
    const int n = nu.fiber_dim;
    const CMat one = CMat::Identity(n, n);
    out.hopping.clear();
    if (spec.kind == ModelKind::even_dirac) {
        if (spec.d % 2 != 0) throw Error("models", "even_dirac needs an even dimension");
        const CMat& nu0 = *nu.grading;
        for (int j = 1; j <= spec.d; ++j) {
            const CMat& nj = nu.gammas[std::size_t(j - 1)];
            out.hopping.push_back({{j}, nj / (2.0 * kI) + 0.5 * nu0});
            out.hopping.push_back({{-j}, -nj / (2.0 * kI) + 0.5 * nu0});
        }
        out.potential = spec.mass * nu0;
    } else {
        if (spec.d % 2 != 1) throw Error("models", "odd_chiral needs an odd dimension");
        for (int j = 1; j <= spec.d; ++j) {
            const CMat& nj = nu.gammas[std::size_t(j - 1)];
            out.hopping.push_back({{j}, 0.5 * (one + nj)});
            out.hopping.push_back({{-j}, 0.5 * (one - nj)});
        }
        out.potential = spec.mass * one;
    }
    return out;
}

PhaseProvider::PhaseProvider(LatticeBox geometry, TransportOptions opts, std::filesystem::path dir)
    : geometry_(std::move(geometry)), opts_(opts), dir_(std::move(dir))
{
}

const PhaseCache& PhaseProvider::get(double alpha)
{
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(alpha);
        if (it != cache_.end()) return *it->second;
    }
    GaugeField field{build_clifford(geometry_.d()), alpha};
    auto built = std::make_unique<PhaseCache>(cached_phases(geometry_, field, opts_, dir_));
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = cache_.emplace(alpha, std::move(built));
    return *it->second;
}

LatticeOperator build_polynomial(const ModelSpec& spec_in, const LatticeBox& geometry, const PhaseCache* phases,
                                 GammaBlock block)
{
    ModelSpec spec = expand_model(spec_in);
    if (geometry.d() != spec.d) throw Error("models", "box and model dimension differ");
    const int o = int(spec.potential.rows());
    if (o == 0) throw Error("models", "model has no potential / orbital fiber");
    const int bs = block_size(spec.d, block);
    const LatticeBox box = geometry.with_fiber(o * bs);

    std::vector<SpMat> shifts;
    for (int k = 0; k < spec.d; ++k) {
        if (phases) {
            if (!phases->box.same_geometry(geometry)) throw Error("models", "phase table covers a different box");
            shifts.push_back(monopole_shift(*phases, k, o, block).data);
        } else {
            shifts.push_back(plain_shift(box, k).data);
        }
    }
    const CMat one_b = CMat::Identity(bs, bs);
    SpMat H = site_constant(box, kron(spec.potential, one_b)).data;
    for (const HoppingTerm& t : spec.hopping) {
        if (t.coefficient.rows() != o) throw Error("models", "hopping coefficient has wrong size");
        SpMat word = identity(box.dim());
        for (int letter : t.word) {
            int k = std::abs(letter) - 1;
            if (letter == 0 || k >= spec.d) throw Error("models", "invalid shift letter in hopping word");
            word = letter > 0 ? SpMat(word * shifts[std::size_t(k)]) : SpMat(word * SpMat(shifts[std::size_t(k)].adjoint()));
        }
        H += site_constant(box, kron(t.coefficient, one_b)).data * word;
    }
    H.prune(cplx(0.0));
    return LatticeOperator{box, H, OpFlag::none};
}

LatticeOperator build_even_dirac(const ModelSpec& spec, const LatticeBox& geometry, const PhaseCache* phases,
                                 GammaBlock block)
{
    if (spec.kind != ModelKind::even_dirac) throw Error("models", "spec is not even_dirac");
    LatticeOperator h = build_polynomial(spec, geometry, phases, block);
    h.flag = OpFlag::hermitian;
    return h;
}

LatticeOperator build_odd_chiral_A(const ModelSpec& spec, const LatticeBox& geometry, const PhaseCache* phases)
{
    if (spec.kind != ModelKind::odd_chiral) throw Error("models", "spec is not odd_chiral");
    return build_polynomial(spec, geometry, phases, GammaBlock::full);
}

LatticeOperator chiral_hamiltonian(const LatticeOperator& A)
{
    const int f = A.box.fiber_dim();
    LatticeBox box = A.box.with_fiber(2 * f);
    std::vector<Triplet> trip;
    for (int k = 0; k < A.data.outerSize(); ++k)
        for (SpMat::InnerIterator it(A.data, k); it; ++it) {
            Eigen::Index r = it.row(), c = it.col();
            Eigen::Index R = (r / f) * 2 * f + r % f;
            Eigen::Index C = (c / f) * 2 * f + f + c % f;
            trip.emplace_back(R, C, it.value());
            trip.emplace_back(C, R, std::conj(it.value()));
        }
    LatticeOperator H{box, SpMat(box.dim(), box.dim()), OpFlag::hermitian};
    H.data.setFromTriplets(trip.begin(), trip.end());
    return H;
}

LatticeOperator chiral_grading(const LatticeBox& box_of_A)
{
    const int f = box_of_A.fiber_dim();
    CMat J = CMat::Identity(2 * f, 2 * f);
    J.bottomRightCorner(f, f) *= -1.0;
    LatticeOperator op = site_constant(box_of_A.with_fiber(2 * f), J);
    op.flag = OpFlag::unitary;
    return op;
}

LatticeOperator double_fiber(const LatticeOperator& op)
{
    const int f = op.box.fiber_dim();
    LatticeBox box = op.box.with_fiber(2 * f);
    std::vector<Triplet> trip;
    for (int k = 0; k < op.data.outerSize(); ++k)
        for (SpMat::InnerIterator it(op.data, k); it; ++it)
            for (int c = 0; c < 2; ++c)
                trip.emplace_back((it.row() / f) * 2 * f + c * f + it.row() % f,
                                  (it.col() / f) * 2 * f + c * f + it.col() % f, it.value());
    LatticeOperator out{box, SpMat(box.dim(), box.dim()), op.flag};
    out.data.setFromTriplets(trip.begin(), trip.end());
    return out;
}

LatticeBox ssh_box(int sites)
{
    if (sites < 8) throw Error("models", "SSH chain needs at least 8 sites");
    if (sites % 2 == 0) throw Error("models", "SSH chain needs an odd number of sites centered at 0");
    return LatticeBox(1, sites / 2, {0.0}, 1);
}

namespace {

// sum_n |n><n+1| with entry (0,1) replaced by c; `ring` adds |half><-half| with weight ring_bond
SpMat chain_shift(const LatticeBox& box, cplx c, bool ring, cplx ring_bond = 1.0)
{
    const int half = box.radius();
    std::vector<Triplet> trip;
    for (int n = -half; n < half; ++n) {
        cplx v = (n == 0) ? c : cplx(1.0);
        if (v != 0.0) trip.emplace_back(n + half, n + 1 + half, v);
    }
    if (ring) trip.emplace_back(2 * half, 0, ring_bond);
    SpMat S(box.dim(), box.dim());
    S.setFromTriplets(trip.begin(), trip.end());
    return S;
}

}  // namespace

SshOperators build_ssh(int sites, double alpha)
{
    LatticeBox box = ssh_box(sites);
    const int half = box.radius();
    LatticeOperator U{box, chain_shift(box, std::exp(kI * (M_PI * alpha)), false), OpFlag::partial_isometry};
    std::vector<Triplet> trip;
    for (int n = -half; n <= half; ++n) trip.emplace_back(n + half, n + half, n > 0 ? 1.0 : -1.0);
    LatticeOperator F{box, SpMat(box.dim(), box.dim()), OpFlag::unitary};
    F.data.setFromTriplets(trip.begin(), trip.end());
    return {chiral_hamiltonian(U), U, F};
}

ChirIndPath chirind_example_path(int sites, double alpha, bool detour, bool ring)
{
    LatticeBox box = ssh_box(sites);
    cplx c = 1.0 - 2.0 * alpha;
    if (detour) c += kI * std::sin(M_PI * alpha);
    ChirIndPath p;
    // the ring bond runs from 1 to -1 as well, so that A_1 = F A_0 F holds on the closed chain
    p.A = LatticeOperator{box, chain_shift(box, c, ring, std::conj(c)), OpFlag::none};
    p.T = chiral_hamiltonian(p.A);
    p.singular = std::abs(c) < 1e-14;  // the ring bond vanishes at the same alpha
    return p;
}

SymmetryGroup model_symmetry(const ModelSpec& spec, GammaBlock block)
{
    const int d = spec.d;
    if (spec.kind == ModelKind::ssh || d == 1 || spec.kind == ModelKind::custom_polynomial) {
        int o = spec.kind == ModelKind::ssh ? 1 : int(expand_model(spec).potential.rows());
        return trivial_group(d, o * block_size(d, block));
    }
    const CliffordRep nu = orbital_rep(spec);
    const CliffordRep gam = build_clifford(d);
    const int bs = block_size(d, block);
    auto fiber = [&](const RMat& O) {
        CMat gn = pin_lift(nu, O).g;
        CMat gg = pin_lift(gam, O).g;
        if (block == GammaBlock::upper) gg = gg.topLeftCorner(bs, bs).eval();
        if (block == GammaBlock::lower) gg = gg.bottomRightCorner(bs, bs).eval();
        return kron(gn, gg);
    };
    if (spec.kind == ModelKind::even_dirac && d == 2) {
        if (block == GammaBlock::full)
            return quarter_turns_graded(fiber, kron(CMat::Identity(nu.fiber_dim, nu.fiber_dim), *gam.grading));
        return quarter_turns(fiber);
    }
    if (spec.kind == ModelKind::odd_chiral && d == 3) return octahedral_rotations(fiber);
    return trivial_group(d, nu.fiber_dim * bs);
}

}  // namespace monoflow
