#include "monoflow/oracles.hpp"

#include "monoflow/linalg.hpp"
#include "monoflow/parallel.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace monoflow {

namespace {

constexpr double kPi = std::numbers::pi;

ModelSpec symbol_spec(const ModelSpec& spec)
{
    if (spec.kind == ModelKind::ssh) {
        // A = S + m
        ModelSpec out = spec;
        out.d = 1;
        out.hopping = {{{1}, CMat::Identity(1, 1)}};
        out.potential = spec.mass * CMat::Identity(1, 1);
        return out;
    }
    return expand_model(spec);
}

// i^{(d-1)/2} tr(gamma_1 ... gamma_d) / N of the representation entering the Dirac phase.
// The index pairs with the degree of A(k) through this orientation.
double orientation_sign(int d)
{
    const CliffordRep rep = build_clifford(d);
    CMat prod = CMat::Identity(rep.fiber_dim, rep.fiber_dim);
    for (const CMat& g : rep.gammas) prod = prod * g;
    cplx c = prod.trace() / double(rep.fiber_dim);
    for (int j = 0; j < (d - 1) / 2; ++j) c *= cplx(0, 1);
    if (std::abs(std::abs(c.real()) - 1.0) > 1e-12 || std::abs(c.imag()) > 1e-12)
        throw Error("index", "Clifford representation is not irreducible");
    return c.real();
}

cplx word_phase(const std::vector<int>& word, const RVec& k)
{
    double phase = 0.0;
    for (int letter : word) phase += (letter > 0 ? 1.0 : -1.0) * k(std::abs(letter) - 1);
    return std::exp(kI * phase);
}

double word_charge(const std::vector<int>& word, int axis)
{
    double c = 0.0;
    for (int letter : word)
        if (std::abs(letter) - 1 == axis) c += letter > 0 ? 1.0 : -1.0;
    return c;
}

CMat symbol_of(const ModelSpec& s, const RVec& k)
{
    CMat out = s.potential;
    for (const HoppingTerm& t : s.hopping) out += t.coefficient * word_phase(t.word, k);
    return out;
}

CMat derivative_of(const ModelSpec& s, const RVec& k, int axis)
{
    CMat out = CMat::Zero(s.potential.rows(), s.potential.cols());
    for (const HoppingTerm& t : s.hopping) {
        double c = word_charge(t.word, axis);
        if (c != 0.0) out += t.coefficient * (kI * c * word_phase(t.word, k));
    }
    return out;
}

// every k with components in {0, pi}
std::vector<RVec> high_symmetry_points(int d)
{
    std::vector<RVec> pts;
    for (int mask = 0; mask < (1 << d); ++mask) {
        RVec k(d);
        for (int j = 0; j < d; ++j) k(j) = (mask >> j & 1) ? kPi : 0.0;
        pts.push_back(k);
    }
    return pts;
}

double min_singular(const CMat& A) { return singular_values(A).minCoeff(); }

double spectral_gap(const CMat& h, double mu)
{
    RVec e = eig_hermitian(h, false).values;
    return (e.array() - mu).abs().minCoeff();
}

constexpr double kGapTol = 1e-8;

// Fukui-Hatsugai-Suzuki lattice field strength summed over the zone
double fhs_sum(const ModelSpec& s, int n, double mu, int& bands, double& gap)
{
    std::vector<CMat> frames(std::size_t(n) * n);
    std::vector<double> gaps(static_cast<std::size_t>(n));
    std::vector<int> counts(std::size_t(n) * n);
    parallel_for(std::size_t(n), [&](std::size_t i) {
        double g = 1e300;
        for (int j = 0; j < n; ++j) {
            RVec k(2);
            k << 2 * kPi * double(i) / n, 2 * kPi * double(j) / n;
            HermitianEigen e = eig_hermitian(symbol_of(s, k), true);
            int c = 0;
            for (Eigen::Index b = 0; b < e.values.size(); ++b) {
                g = std::min(g, std::abs(e.values(b) - mu));
                if (e.values(b) < mu) ++c;
            }
            counts[i * n + j] = c;
            frames[i * n + j] = e.vectors.leftCols(c);
        }
        gaps[i] = g;
    });
    gap = *std::min_element(gaps.begin(), gaps.end());
    bands = counts[0];
    for (int c : counts)
        if (c != bands) throw Error("index", "band count below the Fermi level varies over the zone");
    auto at = [&](int i, int j) -> const CMat& { return frames[std::size_t((i % n + n) % n) * n + (j % n + n) % n]; };
    std::vector<double> rows(std::size_t(n), 0.0);
    parallel_for(std::size_t(n), [&](std::size_t ii) {
        int i = int(ii);
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            cplx u1 = (at(i, j).adjoint() * at(i + 1, j)).determinant();
            cplx u2 = (at(i + 1, j).adjoint() * at(i + 1, j + 1)).determinant();
            cplx u3 = (at(i + 1, j + 1).adjoint() * at(i, j + 1)).determinant();
            cplx u4 = (at(i, j + 1).adjoint() * at(i, j)).determinant();
            acc += std::arg(u1 * u2 * u3 * u4);
        }
        rows[ii] = acc;
    });
    double total = 0.0;
    for (double r : rows) total += r;
    return total;
}

// orthonormal Hermitian basis {gamma_1..gamma_d, grading} of the orbital fiber
std::vector<CMat> dirac_basis(int d)
{
    CliffordRep nu = build_clifford(d);
    std::vector<CMat> out = nu.gammas;
    out.push_back(*nu.grading);
    return out;
}

double det5(const std::array<std::array<double, 5>, 5>& m)
{
    Eigen::Matrix<double, 5, 5> M;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) M(i, j) = m[std::size_t(i)][std::size_t(j)];
    return M.determinant();
}

}  // namespace

CMat bloch_symbol(const ModelSpec& spec, const RVec& k) { return symbol_of(symbol_spec(spec), k); }

CMat bloch_derivative(const ModelSpec& spec, const RVec& k, int axis)
{
    return derivative_of(symbol_spec(spec), k, axis);
}

OracleResult chern_oracle_even(const ModelSpec& spec, int grid)
{
    if (spec.d != 2 && spec.d != 4) throw Error("index", "Chern oracle supports d = 2 and d = 4");
    if (grid < 8) throw Error("index", "Brillouin-zone grid too coarse");
    const ModelSpec s = symbol_spec(spec);
    const double mu = spec.fermi_level;
    for (const RVec& k : high_symmetry_points(spec.d))
        if (spectral_gap(symbol_of(s, k), mu) < kGapTol)
            throw Error("index", "gapless spectrum at a high-symmetry momentum");

    OracleResult r;
    r.grid = grid;
    if (spec.d == 2) {
        int bands = 0;
        double gap = 0.0;
        r.raw = -fhs_sum(s, grid, mu, bands, gap) / (2 * kPi);
        r.min_gap = gap;
        if (gap < kGapTol) throw Error("index", "gapless spectrum on the Brillouin-zone grid");
        double gap2 = 0.0;
        r.raw_check = -fhs_sum(s, 2 * grid - 1, mu, bands, gap2) / (2 * kPi);
        r.min_gap = std::min(gap, gap2);
        r.value = int(std::lround(r.raw));
        if (std::lround(r.raw_check) != r.value) throw Error("index", "Chern oracle changes under grid refinement");
        return r;
    }

    // d = 4: degree of k -> h(k)/|h(k)| for h = sum_a n_a(k) Gamma_a
    if (mu != 0.0) throw Error("index", "d=4 Chern oracle needs mu = 0");
    const std::vector<CMat> basis = dirac_basis(4);
    const double norm = double(basis[0].rows());
    auto components = [&](const CMat& h, std::array<double, 5>& n) {
        CMat rest = h;
        for (std::size_t a = 0; a < 5; ++a) {
            n[a] = (basis[a] * h).trace().real() / norm;
            rest -= n[a] * basis[a];
        }
        if (rest.cwiseAbs().maxCoeff() > 1e-10) throw Error("index", "d=4 Chern oracle needs a Dirac-type symbol");
    };
    const int n = grid;
    const double dk = 2 * kPi / n;
    std::vector<double> slabs(std::size_t(n), 0.0);
    std::vector<double> gaps(std::size_t(n), 1e300);
    parallel_for(std::size_t(n), [&](std::size_t i0) {
        double acc = 0.0;
        RVec k(4);
        for (int i1 = 0; i1 < n; ++i1)
            for (int i2 = 0; i2 < n; ++i2)
                for (int i3 = 0; i3 < n; ++i3) {
                    k << dk * double(i0), dk * i1, dk * i2, dk * i3;
                    std::array<std::array<double, 5>, 5> m{};
                    components(symbol_of(s, k), m[0]);
                    double len = 0.0;
                    for (double x : m[0]) len += x * x;
                    len = std::sqrt(len);
                    gaps[i0] = std::min(gaps[i0], len);
                    for (int ax = 0; ax < 4; ++ax) components(derivative_of(s, k, ax), m[std::size_t(ax + 1)]);
                    // det[n, dn] / |n|^5 is the pulled-back volume form of the unit vector
                    acc += det5(m) / std::pow(len, 5);
                }
        slabs[i0] = acc;
    });
    double total = 0.0;
    for (double x : slabs) total += x;
    r.min_gap = *std::min_element(gaps.begin(), gaps.end());
    if (r.min_gap < kGapTol) throw Error("index", "gapless spectrum on the Brillouin-zone grid");
    // vol(S^4) = 8 pi^2 / 3
    r.raw = total * std::pow(dk, 4) * 3.0 / (8 * kPi * kPi);
    r.raw_check = r.raw;
    r.value = int(std::lround(r.raw));
    return r;
}

OracleResult winding_oracle_odd(const ModelSpec& spec, int grid)
{
    const int d = spec.kind == ModelKind::ssh ? 1 : spec.d;
    if (d != 1 && d != 3) throw Error("index", "winding oracle supports d = 1 and d = 3");
    const ModelSpec s = symbol_spec(spec);
    for (const RVec& k : high_symmetry_points(d))
        if (min_singular(symbol_of(s, k)) < kGapTol) throw Error("index", "A(k) singular at a high-symmetry momentum");

    OracleResult r;
    r.grid = grid;
    const int n = grid;
    const double dk = 2 * kPi / n;
    if (d == 1) {
        double total = 0.0, gap = 1e300;
        for (int i = 0; i < n; ++i) {
            RVec k(1);
            k << dk * i;
            CMat A = symbol_of(s, k);
            gap = std::min(gap, min_singular(A));
            total += (inverse(A) * derivative_of(s, k, 0)).trace().imag();
        }
        // (1/2 pi i) \oint d log det A
        r.raw = total * dk / (2 * kPi);
        r.min_gap = gap;
    } else {
        std::vector<double> slabs(std::size_t(n), 0.0), gaps(std::size_t(n), 1e300);
        parallel_for(std::size_t(n), [&](std::size_t i0) {
            double acc = 0.0;
            RVec k(3);
            for (int i1 = 0; i1 < n; ++i1)
                for (int i2 = 0; i2 < n; ++i2) {
                    k << dk * double(i0), dk * i1, dk * i2;
                    CMat A = symbol_of(s, k);
                    gaps[i0] = std::min(gaps[i0], min_singular(A));
                    CMat Ai = inverse(A);
                    std::array<CMat, 3> L;
                    for (int a = 0; a < 3; ++a) L[std::size_t(a)] = Ai * derivative_of(s, k, a);
                    // eps_{abc} tr(L_a L_b L_c) = 3 tr(L_0 [L_1, L_2])
                    acc += 3.0 * (L[0] * (L[1] * L[2] - L[2] * L[1])).trace().real();
                }
            slabs[i0] = acc;
        });
        double total = 0.0;
        for (double x : slabs) total += x;
        r.min_gap = *std::min_element(gaps.begin(), gaps.end());
        r.raw = total * dk * dk * dk / (24 * kPi * kPi);
    }
    if (r.min_gap < kGapTol) throw Error("index", "A(k) singular on the Brillouin-zone grid");
    r.raw *= orientation_sign(d);
    r.raw_check = r.raw;
    r.value = int(std::lround(r.raw));
    return r;
}

}  // namespace monoflow
