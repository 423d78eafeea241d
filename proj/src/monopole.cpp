#include "monoflow/monopole.hpp"

#include "monoflow/parallel.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace monoflow {

namespace {

using SMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 8, 8>;

struct BlockRange {
    int begin, size;
};

std::vector<BlockRange> gamma_blocks(const CliffordRep& rep)
{
    if (rep.d % 2 == 0) return {{0, rep.fiber_dim / 2}, {rep.fiber_dim / 2, rep.fiber_dim / 2}};
    return {{0, rep.fiber_dim}};
}

// exp(i s X) for Hermitian X
SMat expi(const SMat& X, double s)
{
    const Eigen::Index n = X.rows();
    SMat out(n, n);
    if (n == 1) {
        out(0, 0) = std::exp(kI * (s * X(0, 0).real()));
        return out;
    }
    if (n == 2) {
        double x0 = 0.5 * (X(0, 0).real() + X(1, 1).real());
        double x3 = 0.5 * (X(0, 0).real() - X(1, 1).real());
        double x1 = X(0, 1).real();
        double x2 = -X(0, 1).imag();
        double r = std::sqrt(x1 * x1 + x2 * x2 + x3 * x3);
        double c = std::cos(s * r);
        double sn = r > 0 ? std::sin(s * r) / r : s;
        cplx ph = std::exp(kI * (s * x0));
        out(0, 0) = ph * cplx(c, sn * x3);
        out(1, 1) = ph * cplx(c, -sn * x3);
        out(0, 1) = ph * (kI * sn) * cplx(x1, -x2);
        out(1, 0) = ph * (kI * sn) * cplx(x1, x2);
        return out;
    }
    Eigen::SelfAdjointEigenSolver<SMat> es(X);
    CVec ph = (kI * s * es.eigenvalues().cast<cplx>()).array().exp();
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

class LineTransport {
public:
    LineTransport(const GaugeField& field, const RVec& p, const RVec& v, const TransportOptions& opts)
        : field_(field), p_(p), v_(v), opts_(opts), blocks_(gamma_blocks(field.rep))
    {
        const int d = field.rep.d;
        gp_ = SMat::Zero(field.rep.fiber_dim, field.rep.fiber_dim);
        gv_ = SMat::Zero(field.rep.fiber_dim, field.rep.fiber_dim);
        for (int k = 0; k < d; ++k) {
            gp_ += p(k) * SMat(field.rep.gammas[k]);
            gv_ += v(k) * SMat(field.rep.gammas[k]);
        }
        vnorm_ = v.norm();
    }

    // line parameter where the line enters the ball of radius far_cutoff
    double far_start() const
    {
        double a = v_.squaredNorm();
        double b = p_.dot(v_);
        double c = p_.squaredNorm() - opts_.far_cutoff * opts_.far_cutoff;
        if (c >= 0) return 0.0;
        return (-b - std::sqrt(b * b - a * c)) / a;
    }

    // alpha * A_v(p + t v)
    SMat coefficient(double t) const
    {
        SMat gx = gp_ + t * gv_;
        double r2 = (p_ + t * v_).squaredNorm();
        return (0.5 * field_.charge / r2) * (kI * (gx * gv_ - gv_ * gx));
    }

    void advance(SMat& N, double t0, double t1) const
    {
        static const double s3 = std::sqrt(3.0);
        static const double c1 = 0.5 - s3 / 6.0, c2 = 0.5 + s3 / 6.0;
        static const double a1 = (3.0 - 2.0 * s3) / 12.0, a2 = (3.0 + 2.0 * s3) / 12.0;
        double t = t0;
        while (t < t1) {
            double R = (p_ + t * v_).norm();
            if (R < 1e-8) throw Error("monopole", "step-size underflow: line passes through the monopole");
            double dt = std::min(opts_.step * std::min(1.0, R) / vnorm_, t1 - t);
            SMat B1 = coefficient(t + c1 * dt);
            SMat B2 = coefficient(t + c2 * dt);
            SMat X1 = a1 * B1 + a2 * B2;
            SMat X2 = a2 * B1 + a1 * B2;
            SMat E = SMat::Zero(N.rows(), N.cols());
            for (const BlockRange& b : blocks_) {
                SMat x1 = X1.block(b.begin, b.begin, b.size, b.size);
                SMat x2 = X2.block(b.begin, b.begin, b.size, b.size);
                E.block(b.begin, b.begin, b.size, b.size) = expi(x1, dt) * expi(x2, dt);
            }
            N = E * N;
            N = 0.5 * N * (3.0 * SMat::Identity(N.rows(), N.cols()) - N.adjoint() * N);
            t = (t1 - t - dt <= 1e-14) ? t1 : t + dt;
        }
    }

private:
    const GaugeField& field_;
    RVec p_, v_;
    TransportOptions opts_;
    std::vector<BlockRange> blocks_;
    SMat gp_, gv_;
    double vnorm_ = 1.0;
};

void check_field(const GaugeField& field, const RVec& x, const RVec& v)
{
    if (field.rep.d < 2) throw Error("monopole", "monopole transport needs d >= 2");
    if (x.size() != field.rep.d || v.size() != field.rep.d) throw Error("monopole", "vector dimension mismatch");
    if (field.rep.fiber_dim > 8) throw Error("monopole", "Clifford fiber too large for transport");
}

void check_unitary(const SMat& N, double tol)
{
    double drift = (N.adjoint() * N - SMat::Identity(N.rows(), N.cols())).cwiseAbs().maxCoeff();
    if (drift > 10 * tol) throw Error("monopole", "non-unitary drift in transport");
}

std::string fmt(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

double opnorm(const CMat& m)
{
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMat> svd(m);
    return svd.singularValues()(0);
}

CMat gauge_potential(const GaugeField& field, const RVec& x, const RVec& v)
{
    check_field(field, x, v);
    double r2 = x.squaredNorm();
    if (r2 == 0.0) throw Error("monopole", "gauge potential is singular at the origin");
    CMat gx = gamma_v(field.rep, x);
    CMat gv = gamma_v(field.rep, v);
    return (0.5 / r2) * (kI * (gx * gv - gv * gx));
}

CMat transport(const GaugeField& field, const RVec& x, const RVec& v, const CMat& start, const TransportOptions& opts)
{
    check_field(field, x, v);
    LineTransport line(field, x, v, opts);
    SMat N = start;
    line.advance(N, line.far_start(), 0.0);
    check_unitary(N, opts.tol);
    return N;
}

CMat transport(const GaugeField& field, const RVec& x, const RVec& v, const TransportOptions& opts)
{
    return transport(field, x, v, CMat::Identity(field.rep.fiber_dim, field.rep.fiber_dim), opts);
}

CMat phase_matrix(const GaugeField& field, const RVec& x, const RVec& v, const CMat& start, const TransportOptions& opts)
{
    check_field(field, x, v);
    LineTransport line(field, x, v, opts);
    SMat N = start;
    line.advance(N, line.far_start(), 0.0);
    SMat Nx = N;
    line.advance(N, 0.0, 1.0);
    check_unitary(N, opts.tol);
    return CMat(Nx * N.adjoint());
}

CMat phase_matrix(const GaugeField& field, const RVec& x, const RVec& v, const TransportOptions& opts)
{
    return phase_matrix(field, x, v, CMat::Identity(field.rep.fiber_dim, field.rep.fiber_dim), opts);
}

CMat phase_matrix_exact(const GaugeField& field, const RVec& x, const RVec& v)
{
    check_field(field, x, v);
    CMat gx = gamma_v(field.rep, x);
    CMat gv = gamma_v(field.rep, v);
    CMat C = 0.5 * (kI * (gx * gv - gv * gx));
    double a = v.squaredNorm(), b = x.dot(v), c = x.squaredNorm();
    double D = a * c - b * b;
    const int n = field.rep.fiber_dim;
    if (D <= 1e-300) return CMat::Identity(n, n);
    double sq = std::sqrt(D);
    double phi = (std::atan((a + b) / sq) - std::atan(b / sq)) / sq;
    Eigen::SelfAdjointEigenSolver<CMat> es(C);
    CVec ph = (-kI * field.charge * phi * es.eigenvalues().cast<cplx>()).array().exp();
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

std::string phase_cache_key(const LatticeBox& box, double alpha, const TransportOptions& opts)
{
    std::string s = "v" + std::to_string(PhaseCache::kVersion) + ";" + PhaseCache::kIntegrator + ";d=" +
                    std::to_string(box.d()) + ";rho=" + std::to_string(box.radius()) + ";off=";
    for (double o : box.offset()) s += fmt(o) + ",";
    s += ";alpha=" + fmt(alpha) + ";h=" + fmt(opts.step) + ";rc=" + fmt(opts.far_cutoff) + ";tol=" + fmt(opts.tol);
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
    return buf;
}

std::string PhaseCache::key() const { return phase_cache_key(box, alpha, opts); }

PhaseCache PhaseCache::build(const LatticeBox& box, const GaugeField& field, const TransportOptions& opts)
{
    if (box.d() != field.rep.d) throw Error("monopole", "box and field dimension differ");
    if (field.rep.d < 2) throw Error("monopole", "phase tables need d >= 2");
    PhaseCache cache;
    cache.box = box.with_fiber(field.rep.fiber_dim);
    cache.alpha = field.charge;
    cache.fiber_dim = field.rep.fiber_dim;
    cache.opts = opts;
    const int d = box.d();
    const int n = field.rep.fiber_dim;
    cache.table.assign(std::size_t(d), std::vector<CMat>(std::size_t(box.num_sites())));

    if (field.charge == 0.0) {
        for (auto& dir : cache.table)
            for (auto& m : dir) m = CMat::Identity(n, n);
        return cache;
    }

    // Along a straight line x + t v the commutator [gamma_x, gamma_v] is constant, so the
    // coefficients at all Gauss nodes commute and each CF4 step reduces to
    // exp(i alpha dt (w1 + w2)/2 C), w = 1/R^2 at the nodes. The step schedule is the one
    // used by LineTransport; the result agrees with it to rounding (see tests).
    const std::vector<BlockRange> blocks = gamma_blocks(field.rep);
    const double s3 = std::sqrt(3.0);
    const double c1 = 0.5 - s3 / 6.0, c2 = 0.5 + s3 / 6.0;
    for (int k = 0; k < d; ++k) {
        std::vector<int> starts;
        for (int s = 0; s < box.num_sites(); ++s)
            if (box.neighbor(s, k, -1) < 0) starts.push_back(s);
        RVec v = RVec::Unit(d, k);
        CMat gv = gamma_v(field.rep, v);
        auto& dir = cache.table[std::size_t(k)];
        parallel_for(starts.size(), [&](std::size_t li) {
            int s = starts[li];
            RVec p = box.position(s);
            CMat gp = gamma_v(field.rep, p);
            CMat C = 0.5 * (kI * (gp * gv - gv * gp));
            auto r2 = [&](double t) { return (p + t * v).squaredNorm(); };
            auto integrate = [&](double t0, double t1) {
                double phi = 0.0, t = t0;
                while (t < t1) {
                    double R = std::sqrt(r2(t));
                    if (R < 1e-8) throw Error("monopole", "step-size underflow: line passes through the monopole");
                    double dt = std::min(opts.step * std::min(1.0, R), t1 - t);
                    phi += 0.5 * dt * (1.0 / r2(t + c1 * dt) + 1.0 / r2(t + c2 * dt));
                    t = (t1 - t - dt <= 1e-14) ? t1 : t + dt;
                }
                return phi;
            };
            LineTransport line(field, p, v, opts);
            integrate(line.far_start(), 0.0);  // common left factor, cancels in M

            std::vector<std::pair<CMat, RVec>> eig;
            for (const BlockRange& b : blocks) {
                Eigen::SelfAdjointEigenSolver<CMat> es(C.block(b.begin, b.begin, b.size, b.size));
                eig.emplace_back(es.eigenvectors(), es.eigenvalues());
            }
            int j = 0;
            for (int cur = s; cur >= 0; cur = box.neighbor(cur, k, 1), ++j) {
                double phi = integrate(double(j), double(j + 1));
                CMat M = CMat::Zero(n, n);
                for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
                    const auto& [V, lam] = eig[bi];
                    CVec ph = (-kI * field.charge * phi * lam.cast<cplx>()).array().exp();
                    M.block(blocks[bi].begin, blocks[bi].begin, blocks[bi].size, blocks[bi].size) =
                        V * ph.asDiagonal() * V.adjoint();
                }
                dir[std::size_t(cur)] = M;
            }
        });
    }
    return cache;
}

bool PhaseCache::signed_at(int k, int sign, int site, CMat& out) const
{
    if (sign > 0) {
        out = at(k, site);
        return true;
    }
    int prev = box.neighbor(site, k, -1);
    if (prev < 0) return false;
    out = at(k, prev).adjoint();
    return true;
}

void PhaseCache::save(const std::filesystem::path& file) const
{
    using nlohmann::json;
    json j;
    j["format"] = "monoflow-phase-cache";
    j["version"] = kVersion;
    j["integrator"] = kIntegrator;
    j["d"] = box.d();
    j["radius"] = box.radius();
    j["offset"] = box.offset();
    j["alpha"] = alpha;
    j["fiber_dim"] = fiber_dim;
    j["step"] = opts.step;
    j["far_cutoff"] = opts.far_cutoff;
    j["tol"] = opts.tol;
    json payload = json::array();
    for (const auto& dir : table) {
        std::vector<double> flat;
        flat.reserve(dir.size() * std::size_t(fiber_dim * fiber_dim) * 2);
        for (const CMat& m : dir)
            for (int r = 0; r < fiber_dim; ++r)
                for (int c = 0; c < fiber_dim; ++c) {
                    flat.push_back(m(r, c).real());
                    flat.push_back(m(r, c).imag());
                }
        payload.push_back(std::move(flat));
    }
    j["table"] = std::move(payload);
    std::filesystem::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("monopole", "cannot write cache file " + tmp.string());
        out << j.dump();
    }
    std::filesystem::rename(tmp, file);
}

PhaseCache PhaseCache::load(const std::filesystem::path& file)
{
    using nlohmann::json;
    std::ifstream in(file);
    if (!in) throw Error("monopole", "cannot open cache file " + file.string());
    json j = json::parse(in);
    if (j.value("format", "") != "monoflow-phase-cache" || j.value("version", 0) != kVersion)
        throw Error("monopole", "unsupported cache file " + file.string());
    PhaseCache c;
    int fiber = j["fiber_dim"];
    c.box = LatticeBox(j["d"], j["radius"], j["offset"].get<std::vector<double>>(), fiber);
    c.alpha = j["alpha"];
    c.fiber_dim = fiber;
    c.opts.step = j["step"];
    c.opts.far_cutoff = j["far_cutoff"];
    c.opts.tol = j["tol"];
    for (const auto& flatj : j["table"]) {
        std::vector<double> flat = flatj.get<std::vector<double>>();
        if (flat.size() != std::size_t(c.box.num_sites()) * fiber * fiber * 2)
            throw Error("monopole", "corrupt cache payload");
        std::vector<CMat> dir(static_cast<std::size_t>(c.box.num_sites()), CMat(fiber, fiber));
        std::size_t pos = 0;
        for (CMat& m : dir)
            for (int r = 0; r < fiber; ++r)
                for (int col = 0; col < fiber; ++col, pos += 2) m(r, col) = cplx(flat[pos], flat[pos + 1]);
        c.table.push_back(std::move(dir));
    }
    return c;
}

PhaseCache cached_phases(const LatticeBox& box, const GaugeField& field, const TransportOptions& opts,
                         const std::filesystem::path& dir)
{
    if (dir.empty()) return PhaseCache::build(box, field, opts);
    std::filesystem::path file = dir / ("phases_" + phase_cache_key(box, field.charge, opts) + ".json");
    if (std::filesystem::exists(file)) {
        PhaseCache c = PhaseCache::load(file);
        if (c.box.same_geometry(box) && c.alpha == field.charge) return c;
    }
    PhaseCache c = PhaseCache::build(box, field, opts);
    std::filesystem::create_directories(dir);
    c.save(file);
    return c;
}

LatticeOperator plain_shift(const LatticeBox& box, int k)
{
    const int f = box.fiber_dim();
    std::vector<Triplet> trip;
    for (int s = 0; s < box.num_sites(); ++s) {
        int t = box.neighbor(s, k, -1);
        if (t < 0) continue;
        for (int i = 0; i < f; ++i) trip.emplace_back(t * f + i, s * f + i, 1.0);
    }
    LatticeOperator op{box, SpMat(box.dim(), box.dim()), OpFlag::partial_isometry};
    op.data.setFromTriplets(trip.begin(), trip.end());
    return op;
}

LatticeOperator monopole_shift(const PhaseCache& cache, int k, int other_dim, GammaBlock block)
{
    const int g = cache.fiber_dim;
    int b0 = 0, bs = g;
    if (block != GammaBlock::full) {
        if (cache.box.d() % 2 != 0) throw Error("monopole", "Gamma blocks exist only in even dimension");
        bs = g / 2;
        b0 = block == GammaBlock::upper ? 0 : bs;
    }
    const int f = other_dim * bs;
    LatticeBox box = cache.box.with_fiber(f);
    std::vector<Triplet> trip;
    for (int s = 0; s < box.num_sites(); ++s) {
        int t = box.neighbor(s, k, -1);
        if (t < 0) continue;
        const CMat& M = cache.at(k, t);
        for (int a = 0; a < other_dim; ++a)
            for (int i = 0; i < bs; ++i)
                for (int j = 0; j < bs; ++j) {
                    cplx v = M(b0 + i, b0 + j);
                    if (v != 0.0) trip.emplace_back(t * f + a * bs + i, s * f + a * bs + j, v);
                }
    }
    LatticeOperator op{box, SpMat(box.dim(), box.dim()), OpFlag::partial_isometry};
    op.data.setFromTriplets(trip.begin(), trip.end());
    return op;
}

double covariance_check(const PhaseCache& cache, const RMat& O)
{
    const LatticeBox& box = cache.box;
    const int d = box.d();
    // O must be a signed permutation preserving the box
    std::vector<int> perm(static_cast<std::size_t>(d));
    std::vector<int> sgn(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) {
        int found = -1;
        for (int r = 0; r < d; ++r) {
            if (std::abs(std::abs(O(r, c)) - 1.0) < 1e-12) found = r;
            else if (std::abs(O(r, c)) > 1e-12) found = -2;
            if (found == -2) break;
        }
        if (found < 0) throw Error("monopole", "covariance check needs a signed permutation");
        perm[std::size_t(c)] = found;
        sgn[std::size_t(c)] = O(found, c) > 0 ? 1 : -1;
    }
    for (int a = 0; a < d; ++a)
        if (box.offset()[std::size_t(a)] != box.offset()[0]) throw Error("monopole", "box is not symmetric under O");

    GaugeField f{build_clifford(d), cache.alpha};
    PinLift lift = pin_lift(f.rep, O);

    double worst = 0.0;
    std::vector<int> n(static_cast<std::size_t>(d));
    for (int s = 0; s < box.num_sites(); ++s) {
        // y = O^T x
        RVec x = box.position(s);
        RVec y = O.transpose() * x;
        for (int a = 0; a < d; ++a) n[std::size_t(a)] = int(std::lround(y(a) - box.offset()[std::size_t(a)]));
        int sy = box.index(n);
        if (sy < 0) throw Error("monopole", "box is not symmetric under O");
        for (int k = 0; k < d; ++k) {
            // O e_k = sgn[k] e_{perm[k]}
            CMat lhs;
            if (!cache.signed_at(k, 1, sy, lhs)) continue;
            CMat rhs;
            if (!cache.signed_at(perm[std::size_t(k)], sgn[std::size_t(k)], s, rhs)) continue;
            CMat conj = lift.g * lhs * lift.g_reversed;
            worst = std::max(worst, (conj - rhs).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

Envelope decay_envelope(const PhaseCache& cache)
{
    const LatticeBox& box = cache.box;
    Envelope env;
    const int n = cache.fiber_dim;
    std::vector<double> r(static_cast<std::size_t>(box.num_sites())), dev(std::size_t(box.num_sites()));
    for (int s = 0; s < box.num_sites(); ++s) {
        r[std::size_t(s)] = box.norm(s);
        double m = 0.0;
        for (int k = 0; k < box.d(); ++k) m = std::max(m, opnorm(cache.at(k, s) - CMat::Identity(n, n)));
        dev[std::size_t(s)] = m;
    }
    for (std::size_t s = 0; s < r.size(); ++s)
        if (r[s] >= 0.5 * box.radius()) env.c_fit = std::max(env.c_fit, r[s] * dev[s]);
    for (std::size_t s = 0; s < r.size(); ++s)
        if (env.c_fit > 0) env.worst_ratio = std::max(env.worst_ratio, r[s] * dev[s] / env.c_fit);
    return env;
}

}  // namespace monoflow
