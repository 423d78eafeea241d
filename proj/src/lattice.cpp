#include "monoflow/lattice.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace monoflow {

LatticeBox::LatticeBox(int d, int radius, std::vector<double> offset, int fiber_dim)
    : d_(d), radius_(radius), fiber_dim_(fiber_dim), offset_(std::move(offset))
{
    if (d < 1) throw Error("lattice", "dimension must be positive");
    if (radius < 1) throw Error("lattice", "radius must be positive");
    if (fiber_dim < 1) throw Error("lattice", "fiber dimension must be positive");
    if (int(offset_.size()) != d) throw Error("lattice", "offset has wrong length");
    lo_.resize(d);
    hi_.resize(d);
    for (int a = 0; a < d; ++a) {
        lo_[a] = int(std::ceil(-radius - offset_[a] - 1e-12));
        hi_[a] = int(std::floor(radius - offset_[a] + 1e-12));
    }
    num_sites_ = 1;
    for (int a = 0; a < d; ++a) num_sites_ *= hi_[a] - lo_[a] + 1;
    coords_.resize(std::size_t(num_sites_) * d);
    std::vector<int> n(lo_);
    for (int s = 0; s < num_sites_; ++s) {
        for (int a = 0; a < d; ++a) coords_[std::size_t(s) * d + a] = n[a];
        for (int a = d - 1; a >= 0; --a) {
            if (++n[a] <= hi_[a]) break;
            n[a] = lo_[a];
        }
    }
}

LatticeBox LatticeBox::half_integer(int d, int radius, int fiber_dim)
{
    return LatticeBox(d, radius, std::vector<double>(std::size_t(d), 0.5), fiber_dim);
}

LatticeBox LatticeBox::with_fiber(int fiber_dim) const
{
    if (fiber_dim < 1) throw Error("lattice", "fiber dimension must be positive");
    LatticeBox b = *this;
    b.fiber_dim_ = fiber_dim;
    return b;
}

RVec LatticeBox::position(int site) const
{
    RVec x(d_);
    for (int a = 0; a < d_; ++a) x(a) = position(site, a);
    return x;
}

double LatticeBox::sup_norm(int site) const
{
    double m = 0.0;
    for (int a = 0; a < d_; ++a) m = std::max(m, std::abs(position(site, a)));
    return m;
}

int LatticeBox::index(const std::vector<int>& n) const
{
    int idx = 0;
    for (int a = 0; a < d_; ++a) {
        if (n[a] < lo_[a] || n[a] > hi_[a]) return -1;
        idx = idx * (hi_[a] - lo_[a] + 1) + (n[a] - lo_[a]);
    }
    return idx;
}

int LatticeBox::neighbor(int site, int axis, int step) const
{
    int c = coord(site, axis) + step;
    if (c < lo_[axis] || c > hi_[axis]) return -1;
    int stride = 1;
    for (int a = d_ - 1; a > axis; --a) stride *= hi_[a] - lo_[a] + 1;
    return site + step * stride;
}

bool LatticeBox::same_geometry(const LatticeBox& other) const
{
    return d_ == other.d_ && radius_ == other.radius_ && offset_ == other.offset_;
}

double LatticeOperator::flag_defect() const
{
    switch (flag) {
    case OpFlag::none: return 0.0;
    case OpFlag::hermitian: {
        SpMat diff = data - SpMat(data.adjoint());
        return diff.nonZeros() ? CMat(diff).cwiseAbs().maxCoeff() : 0.0;
    }
    case OpFlag::unitary: {
        SpMat prod = data.adjoint() * data;
        CMat diff = CMat(prod) - CMat::Identity(dim(), dim());
        return diff.cwiseAbs().maxCoeff();
    }
    case OpFlag::partial_isometry: {
        SpMat p = data.adjoint() * data;
        CMat diff = CMat(p * p - p);
        return diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0;
    }
    }
    return 0.0;
}

namespace {

LatticeOperator site_blocks(const LatticeBox& box, const std::vector<CMat>& blocks, OpFlag flag)
{
    const int f = box.fiber_dim();
    std::vector<Triplet> trip;
    trip.reserve(std::size_t(box.num_sites()) * f * f);
    for (int s = 0; s < box.num_sites(); ++s)
        for (int i = 0; i < f; ++i)
            for (int j = 0; j < f; ++j)
                if (blocks[s](i, j) != 0.0) trip.emplace_back(s * f + i, s * f + j, blocks[s](i, j));
    LatticeOperator op{box, SpMat(box.dim(), box.dim()), flag};
    op.data.setFromTriplets(trip.begin(), trip.end());
    return op;
}

CMat expand(const CMat& local, int fiber_dim)
{
    const int g = int(local.rows());
    const int other = fiber_dim / g;
    CMat out = CMat::Zero(fiber_dim, fiber_dim);
    for (int a = 0; a < other; ++a) out.block(a * g, a * g, g, g) = local;
    return out;
}

}  // namespace

LatticeOperator site_constant(const LatticeBox& box, const CMat& local)
{
    if (box.fiber_dim() % local.rows() != 0) throw Error("lattice", "fiber dimension not divisible by local block");
    std::vector<CMat> blocks(static_cast<std::size_t>(box.num_sites()), expand(local, box.fiber_dim()));
    return site_blocks(box, blocks, OpFlag::none);
}

LatticeOperator dirac_operator(const LatticeBox& box, const CliffordRep& rep)
{
    if (box.d() != rep.d) throw Error("lattice", "box and Clifford dimension differ");
    if (box.fiber_dim() % rep.fiber_dim != 0) throw Error("lattice", "fiber dimension not divisible by Clifford fiber");
    std::vector<CMat> blocks;
    blocks.reserve(std::size_t(box.num_sites()));
    for (int s = 0; s < box.num_sites(); ++s)
        blocks.push_back(expand(gamma_v(rep, box.position(s)), box.fiber_dim()));
    return site_blocks(box, blocks, OpFlag::hermitian);
}

LatticeOperator dirac_phase(const LatticeOperator& D)
{
    const LatticeBox& box = D.box;
    const int f = box.fiber_dim();
    std::vector<CMat> blocks;
    blocks.reserve(std::size_t(box.num_sites()));
    for (int s = 0; s < box.num_sites(); ++s) {
        CMat b = CMat(D.data.block(s * f, s * f, f, f));
        Eigen::SelfAdjointEigenSolver<CMat> es(b);
        const RVec& ev = es.eigenvalues();
        if (ev.cwiseAbs().minCoeff() < 1e-12)
            throw Error("lattice", "Dirac operator is singular at a site; use a half-integer offset");
        RVec sgn = ev.unaryExpr([](double x) { return x > 0 ? 1.0 : -1.0; });
        blocks.push_back(es.eigenvectors() * sgn.asDiagonal() * es.eigenvectors().adjoint());
    }
    return site_blocks(box, blocks, OpFlag::unitary);
}

GradedSplit split_F(const LatticeOperator& F, const CliffordRep& rep)
{
    if (rep.d % 2 != 0 || !rep.grading) throw Error("lattice", "split_F needs an even dimension");
    const LatticeBox& box = F.box;
    const int f = box.fiber_dim();
    const int g = rep.fiber_dim;
    const int h = g / 2;
    const int other = f / g;
    GradedSplit out;
    LatticeBox half = box.with_fiber(other * h);
    std::vector<Triplet> trip;
    for (int s = 0; s < box.num_sites(); ++s) {
        for (int a = 0; a < other; ++a)
            for (int c = 0; c < g; ++c) {
                Eigen::Index idx = Eigen::Index(s) * f + a * g + c;
                (c < h ? out.upper : out.lower).push_back(idx);
            }
        CMat b = CMat(F.data.block(s * f, s * f, f, f));
        for (int a = 0; a < other; ++a)
            for (int ap = 0; ap < other; ++ap)
                for (int i = 0; i < h; ++i)
                    for (int j = 0; j < h; ++j) {
                        cplx v = b(a * g + h + i, ap * g + j);
                        if (v != 0.0) trip.emplace_back(s * other * h + a * h + i, s * other * h + ap * h + j, v);
                    }
    }
    out.V = LatticeOperator{half, SpMat(half.dim(), half.dim()), OpFlag::unitary};
    out.V.data.setFromTriplets(trip.begin(), trip.end());
    return out;
}

LatticeOperator hardy_projection(const LatticeOperator& F)
{
    SpMat one(F.dim(), F.dim());
    one.setIdentity();
    LatticeOperator P{F.box, 0.5 * (F.data + one), OpFlag::hermitian};
    P.data.prune(cplx(0.0));
    return P;
}

double off_site_norm(const LatticeOperator& op)
{
    const int f = op.box.fiber_dim();
    double worst = 0.0;
    for (int k = 0; k < op.data.outerSize(); ++k)
        for (SpMat::InnerIterator it(op.data, k); it; ++it)
            if (it.row() / f != it.col() / f) worst = std::max(worst, std::abs(it.value()));
    return worst;
}

}  // namespace monoflow
