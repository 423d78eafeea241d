#include "monoflow/experiment.hpp"

#include "monoflow/linalg.hpp"
#include "monoflow/parallel.hpp"
#include "monoflow/symmetry.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace monoflow {

using nlohmann::json;

namespace {

const std::set<std::string> kTasks = {"spectral_flow", "index", "oracle", "invariant_suite"};

template <class T>
T get_or(const json& obj, const char* key, T fallback)
{
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error("cli", std::string("field '") + key + "' has the wrong type");
    }
}

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where)
{
    if (!obj.is_object()) throw Error("cli", where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw Error("cli", "unknown field '" + it.key() + "' in " + where);
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

std::string hex64(std::uint64_t v)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_atomic(const std::filesystem::path& file, const std::string& content)
{
    std::filesystem::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cli", "cannot write " + tmp.string());
        out << content;
        if (!out) throw Error("cli", "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
}

bool has_task(const ExperimentConfig& c, const std::string& t)
{
    return std::find(c.tasks.begin(), c.tasks.end(), t) != c.tasks.end();
}

SpMat sparse_identity(Eigen::Index n)
{
    SpMat I(n, n);
    I.setIdentity();
    return I;
}

std::vector<Sector> sectors_for(const LatticeBox& box, const ModelSpec& spec, GammaBlock block, bool use_symmetry)
{
    if (use_symmetry) {
        SymmetryGroup G = model_symmetry(spec, block);
        if (G.elements.size() > 1) {
            G.verify();
            return build_sectors(box, G);
        }
    }
    return {Sector{"all", 1, sparse_identity(box.dim())}};
}

CMat site_indicator(const LatticeBox& box, const std::function<bool(int)>& keep)
{
    const int f = box.fiber_dim();
    RVec diag = RVec::Zero(box.dim());
    for (int s = 0; s < box.num_sites(); ++s)
        if (keep(s)) diag.segment(Eigen::Index(s) * f, f).setOnes();
    return diag.cast<cplx>().asDiagonal();
}

// kron(1_o, block) at every site of a site-diagonal operator
SpMat lift_orbital(const LatticeOperator& op, int o)
{
    const int f = op.box.fiber_dim();
    std::vector<Triplet> trip;
    for (int k = 0; k < op.data.outerSize(); ++k)
        for (SpMat::InnerIterator it(op.data, k); it; ++it) {
            Eigen::Index sr = it.row() / f, sc = it.col() / f;
            for (int a = 0; a < o; ++a)
                trip.emplace_back(sr * o * f + a * f + it.row() % f, sc * o * f + a * f + it.col() % f, it.value());
        }
    SpMat out(op.data.rows() * o, op.data.cols() * o);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

FlowOptions flow_options(const ExperimentConfig& c, int points)
{
    FlowOptions o;
    o.grid_points = points;
    o.mu = c.model.fermi_level;
    o.alpha_tol = c.alpha_tol;
    return o;
}


void finish_flow(FlowReport& f)
{
    f.net_flow = total_flow(f.sectors, false);
    f.net_flow_all = total_flow(f.sectors, true);
}

struct Runner {
    const ExperimentConfig& cfg;
    Report& rep;
    TransportOptions topts;

    void guarded(const std::string& what, const std::function<void()>& fn)
    {
        try {
            fn();
        } catch (const Error& e) {
            rep.verdicts.push_back({what + " failed: " + e.what(), false});
        } catch (const std::exception& e) {
            rep.verdicts.push_back({what + " failed: " + std::string(e.what()), false});
        }
    }

    // sector-resolved flow of a family of sector paths, on the configured and the refined grid
    FlowReport sector_flow(const std::string& label, const std::vector<std::pair<SectorFlow, OperatorPath>>& paths,
                           FlowMode mode, bool bulk_only)
    {
        FlowReport f, g;
        f.label = label;
        FlowOptions o = flow_options(cfg, cfg.grid_points);
        o.bulk_only = bulk_only;
        for (const auto& [meta, path] : paths) {
            SectorFlow sf = meta;
            if (cfg.refine_check) {
                RefinedFlow r = sf_refined(path, mode, o);
                SectorFlow fine = meta;
                fine.result = std::move(r.refined);
                g.sectors.push_back(std::move(fine));
                sf.result = std::move(r.coarse);
            } else if (mode == FlowMode::unitary_realpart) {
                sf.result = sf_unitary(path, o);
            } else if (mode == FlowMode::nonnormal_imaginary_axis) {
                sf.result = sf_nonnormal(path, o);
            } else {
                sf.result = sf_selfadjoint(path, o);
            }
            f.sectors.push_back(std::move(sf));
        }
        finish_flow(f);
        if (cfg.refine_check) {
            finish_flow(g);
            f.refined_net_flow = g.net_flow;
            f.refined_net_flow_all = g.net_flow_all;
        }
        return f;
    }

    void check_refinement(const FlowReport& f)
    {
        if (!f.refined_net_flow) return;
        bool ok = *f.refined_net_flow == f.net_flow && *f.refined_net_flow_all == f.net_flow_all;
        rep.verdicts.push_back({f.label + " stable under grid refinement (" + std::to_string(f.net_flow) + " vs " +
                                    std::to_string(*f.refined_net_flow) + ")",
                                ok});
    }

    void check_index()
    {
        if (!rep.index) return;
        const IndexResult& ix = *rep.index;
        std::string raws;
        for (std::size_t i = 0; i < ix.raws.size(); ++i)
            raws += (i ? ", " : "") + std::string("rho=") + std::to_string(ix.radii[i]) + ": " + fmt(ix.raws[i]);
        rep.verdicts.push_back({"Ind stable under radius change (" + raws + ")", ix.stable});
    }

    void run_ssh();
    void run_chirind();
    void run_even();
    void run_odd();
    void run_harness();
};

void Runner::run_ssh()
{
    const int sites = 2 * cfg.radius + 1;
    if (has_task(cfg, "spectral_flow")) {
        guarded("spectral flow", [&] {
            const SshOperators s0 = build_ssh(sites, 0.0);
            const CMat F = s0.F.dense();
            const CMat S0 = s0.U.dense();
            OperatorPath p;
            p.at = [&, F, S0](double a) { return CMat(F * build_ssh(sites, a).U.dense() * S0.adjoint()); };
            p.shell = site_indicator(s0.U.box, [&](int x) { return s0.U.box.in_shell(x, 2.0); });
            std::vector<std::pair<SectorFlow, OperatorPath>> paths{{SectorFlow{"all", 1, {}}, p}};
            rep.flows.push_back(sector_flow("SF(F S^a S^0*)", paths, FlowMode::unitary_realpart, true));
            check_refinement(rep.flows.back());
        });
    }
    if (has_task(cfg, "index")) {
        guarded("index", [&] {
            std::vector<int> radii{cfg.radius, cfg.radius + 2};
            std::vector<double> raws;
            for (int r : radii) {
                const SshOperators s = build_ssh(2 * r + 1, 0.0);
                const CMat P = hardy_projection(s.F).dense();
                const CMat U = s.U.dense();
                const CMat inner = site_indicator(s.U.box, [&](int x) { return !s.U.box.in_shell(x, 1.0); });
                raws.push_back(fedosov_raw(P, U, U.adjoint(), fedosov_power(1), inner));
                if (r == cfg.radius) {
                    const CMat shell = site_indicator(s.U.box, [&](int x) { return s.U.box.in_shell(x, 2.0); });
                    rep.kernel = kernel_count(P, U, shell);
                }
            }
            rep.index = index_from_raws(IndexMethod::fedosov_trace, radii, raws);
            check_index();
            rep.verdicts.push_back({"Ind == kernel count (" + std::to_string(rep.index->value) + " vs " +
                                        std::to_string(rep.kernel->value) + ")",
                                    rep.index->value == rep.kernel->value});
        });
    }
    if (has_task(cfg, "oracle")) guarded("oracle", [&] { rep.oracle = winding_oracle_odd(cfg.model, cfg.oracle_grid); });
    if (has_task(cfg, "invariant_suite")) {
        guarded("invariant suite", [&] {
            const SshOperators s0 = build_ssh(sites, 0.0), s1 = build_ssh(sites, 1.0);
            const CMat F = s0.F.dense();
            rep.invariants.push_back(
                {"S^1 = F S^0 F", (s1.U.dense() - F * s0.U.dense() * F).cwiseAbs().maxCoeff(), 1e-14, false});
            double worst = 0.0;
            for (double a : {0.25, 0.5, 0.75}) {
                CMat W = F * build_ssh(sites, a).U.dense() * s0.U.dense().adjoint();
                CMat expect = s0.U.dense() * s0.U.dense().adjoint();
                expect = F * expect;
                expect(cfg.radius, cfg.radius) = -std::exp(kI * (M_PI * a));
                worst = std::max(worst, (W - expect).cwiseAbs().maxCoeff());
            }
            rep.invariants.push_back({"F S^a S^0* diagonal with -e^{i pi a} at 0", worst, 1e-14, false});
            for (InvariantRow& r : rep.invariants) r.pass = r.value <= r.tolerance;
        });
    }
    if (rep.flows.size() && rep.index) {
        const int sf = rep.flows.front().net_flow;
        rep.verdicts.push_back({"SF == Ind (" + std::to_string(sf) + " vs " + std::to_string(rep.index->value) + ")",
                                sf == rep.index->value});
    }
    if (rep.index && rep.oracle)
        rep.verdicts.push_back({"Ind == oracle (" + std::to_string(rep.index->value) + " vs " +
                                    std::to_string(rep.oracle->value) + ")",
                                rep.index->value == rep.oracle->value});
}

void Runner::run_chirind()
{
    const int sites = 2 * cfg.radius + 1;
    if (has_task(cfg, "spectral_flow")) {
        guarded("spectral flow", [&] {
            const ChirIndPath p0 = chirind_example_path(sites, 0.0, true, true);
            const SshOperators s = build_ssh(sites, 0.0);
            const LatticeOperator J = chiral_grading(s.F.box);
            const CMat JF = J.dense() * double_fiber(s.F).dense();
            const CMat T0inv = inverse(p0.T.dense());
            OperatorPath p;
            p.at = [=](double a) { return CMat(JF * chirind_example_path(sites, a, true, true).T.dense() * T0inv); };
            p.shell = site_indicator(p0.T.box, [&](int x) { return p0.T.box.in_shell(x, 2.0); });
            std::vector<std::pair<SectorFlow, OperatorPath>> paths{{SectorFlow{"all", 1, {}}, p}};
            rep.flows.push_back(sector_flow("SF(J F T_a T_0^-1)", paths, FlowMode::nonnormal_imaginary_axis, true));
            check_refinement(rep.flows.back());
        });
    }
    if (has_task(cfg, "index")) {
        guarded("index", [&] {
            std::vector<int> radii{cfg.radius, cfg.radius + 2};
            std::vector<double> raws;
            for (int r : radii) {
                const int n = 2 * r + 1;
                const ChirIndPath p0 = chirind_example_path(n, 0.0, true, true);
                const SshOperators s = build_ssh(n, 0.0);
                const CMat P = hardy_projection(s.F).dense();
                const CMat A = p0.A.dense();
                const CMat inner = site_indicator(s.F.box, [&](int x) { return !s.F.box.in_shell(x, 1.0); });
                raws.push_back(fedosov_raw(P, A, inverse(A), fedosov_power(1), inner));
            }
            rep.index = index_from_raws(IndexMethod::fedosov_trace, radii, raws);
            check_index();
        });
    }
    if (has_task(cfg, "oracle")) guarded("oracle", [&] { rep.oracle = winding_oracle_odd(cfg.model, cfg.oracle_grid); });
    if (rep.flows.size() && rep.index) {
        const int sf = rep.flows.front().net_flow;
        rep.verdicts.push_back({"SF == 2·Ind (" + std::to_string(sf) + " vs 2*" + std::to_string(rep.index->value) + ")",
                                sf == 2 * rep.index->value});
    }
    if (rep.index && rep.oracle)
        rep.verdicts.push_back({"Ind == oracle (" + std::to_string(rep.index->value) + " vs " +
                                    std::to_string(rep.oracle->value) + ")",
                                rep.index->value == rep.oracle->value});
}

void Runner::run_even()
{
    const ModelSpec& spec = cfg.model;
    if (near_critical_mass(spec.d, spec.mass))
        rep.verdicts.push_back({"warning: mass within 1e-6 of a gap-closing value", true});
    const LatticeBox geometry = LatticeBox::half_integer(spec.d, cfg.radius);
    PhaseProvider phases(geometry, topts, cfg.cache_dir);
    const bool full = cfg.path == "full";
    const GammaBlock block = full ? GammaBlock::full : GammaBlock::upper;
    auto h = [&](double a) {
        return build_even_dirac(spec, geometry, a == 0.0 ? nullptr : &phases.get(a), block);
    };

    if (has_task(cfg, "spectral_flow")) {
        guarded("spectral flow", [&] {
            const LatticeOperator h0 = h(0.0);
            const std::vector<Sector> sectors = sectors_for(h0.box, spec, block, cfg.use_symmetry);
            std::vector<std::pair<SectorFlow, OperatorPath>> paths;
            for (const Sector& s : sectors) {
                OperatorPath p;
                p.at = [&h, s](double a) { return compress(s, h(a).data); };
                p.shell = compress_indicator(s, h0.box, [&](int x) { return h0.box.in_shell(x, 2.0); });
                paths.push_back({SectorFlow{s.irrep, s.irrep_dim, {}}, std::move(p)});
            }
            // boundary tracks are counted too for the full path: they must cancel
            rep.flows.push_back(sector_flow(full ? "SF(H_a)" : "SF(h_a)", paths, FlowMode::selfadjoint_through_mu, !full));
            check_refinement(rep.flows.back());
        });
    }
    if (has_task(cfg, "index") && !full) {
        guarded("index", [&] {
            std::vector<int> radii{cfg.radius, cfg.radius + 2};
            std::vector<double> raws;
            const CliffordRep gam = build_clifford(spec.d);
            const int o = orbital_rep(spec).fiber_dim;
            for (int r : radii) {
                const LatticeBox g = LatticeBox::half_integer(spec.d, r);
                const LatticeOperator h0 = build_even_dirac(spec, g, nullptr, GammaBlock::upper);
                HermitianEigen e = eig_hermitian(h0.dense(), true);
                Eigen::Index below = 0;
                while (below < e.values.size() && e.values(below) < spec.fermi_level) ++below;
                const CMat Q = e.vectors.leftCols(below);
                const CMat P = Q * Q.adjoint();
                const LatticeOperator F = dirac_phase(dirac_operator(g.with_fiber(gam.fiber_dim), gam));
                const SpMat V = lift_orbital(split_F(F, gam).V, o);
                const CMat inner = site_indicator(h0.box, [&](int x) { return !h0.box.in_shell(x, 1.0); });
                raws.push_back(fedosov_raw_unitary(P, V, fedosov_power(spec.d), inner));
            }
            rep.index = index_from_raws(IndexMethod::fedosov_trace, radii, raws);
            check_index();
        });
    }
    if (has_task(cfg, "oracle")) guarded("oracle", [&] { rep.oracle = chern_oracle_even(spec, cfg.oracle_grid); });
    if (has_task(cfg, "invariant_suite"))
        guarded("invariant suite", [&] {
            auto rows = monopole_identity_suite(spec.d, std::min(cfg.radius, 6), {0.3, 0.5, 1.0}, topts, cfg.cache_dir);
            rep.invariants.insert(rep.invariants.end(), rows.begin(), rows.end());
        });

    if (full && rep.flows.size()) {
        const FlowReport& f = rep.flows.front();
        rep.verdicts.push_back({"SF(H) == 0 including boundary tracks (" + std::to_string(f.net_flow_all) + ")",
                                f.net_flow_all == 0});
    }
    if (!full && rep.flows.size() && rep.index) {
        const int sf = rep.flows.front().net_flow;
        rep.verdicts.push_back({"SF == Ind (" + std::to_string(sf) + " vs " + std::to_string(rep.index->value) + ")",
                                sf == rep.index->value});
    }
    if (rep.index && rep.oracle)
        rep.verdicts.push_back({"Ind == oracle (" + std::to_string(rep.index->value) + " vs " +
                                    std::to_string(rep.oracle->value) + ")",
                                rep.index->value == rep.oracle->value});
}

void Runner::run_odd()
{
    const ModelSpec& spec = cfg.model;
    if (spec.d != 3) throw Error("cli", "odd_chiral experiments are implemented for d = 3");
    if (near_critical_mass(spec.d, spec.mass))
        rep.verdicts.push_back({"warning: mass within 1e-6 of a gap-closing value", true});
    const LatticeBox geometry = LatticeBox::half_integer(spec.d, cfg.radius);
    PhaseProvider phases(geometry, topts, cfg.cache_dir);
    const CliffordRep gam = build_clifford(spec.d);
    auto A = [&](const LatticeBox& g, PhaseProvider* pp, double a) {
        return build_odd_chiral_A(spec, g, (a == 0.0 || !pp) ? nullptr : &pp->get(a));
    };

    if (has_task(cfg, "spectral_flow")) {
        guarded("spectral flow", [&] {
            const LatticeOperator A0 = A(geometry, nullptr, 0.0);
            const LatticeOperator F = dirac_phase(dirac_operator(A0.box, gam));
            const std::vector<Sector> sectors = sectors_for(A0.box, spec, GammaBlock::full, cfg.use_symmetry);
            std::vector<std::pair<SectorFlow, OperatorPath>> paths;
            // B_a = J F H_a H_0^{-1} = diag(F A_a A_0^{-1}, -(A_0^{-1} A_a F)^*): both blocks per sector
            for (const Sector& s : sectors) {
                const CMat Fs = compress(s, F.data);
                const CMat A0inv = inverse(compress(s, A0.data));
                const CMat shell = compress_indicator(s, A0.box, [&](int x) { return A0.box.in_shell(x, 2.0); });
                OperatorPath upper, lower;
                upper.at = [&, s, Fs, A0inv](double a) { return CMat(Fs * compress(s, A(geometry, &phases, a).data) * A0inv); };
                lower.at = [&, s, Fs, A0inv](double a) {
                    return CMat(-(A0inv * compress(s, A(geometry, &phases, a).data) * Fs).adjoint());
                };
                upper.shell = shell;
                lower.shell = shell;
                paths.push_back({SectorFlow{s.irrep + "/upper", s.irrep_dim, {}}, std::move(upper)});
                paths.push_back({SectorFlow{s.irrep + "/lower", s.irrep_dim, {}}, std::move(lower)});
            }
            rep.flows.push_back(sector_flow("SF(J F H_a H_0^-1)", paths, FlowMode::nonnormal_imaginary_axis, true));
            check_refinement(rep.flows.back());
        });
    }
    if (has_task(cfg, "index")) {
        guarded("index", [&] {
            std::vector<int> radii{cfg.radius, cfg.radius + 2};
            std::vector<double> raws;
            for (int r : radii) {
                const LatticeBox g = LatticeBox::half_integer(spec.d, r);
                const LatticeOperator A0 = A(g, nullptr, 0.0);
                const LatticeOperator F = dirac_phase(dirac_operator(A0.box, gam));
                const SpMat P = hardy_projection(F).data;
                const std::vector<Sector> sectors = sectors_for(A0.box, spec, GammaBlock::full, cfg.use_symmetry);
                std::vector<double> parts(sectors.size());
                parallel_for(sectors.size(), [&](std::size_t i) {
                    const Sector& s = sectors[i];
                    const CMat As = compress(s, A0.data);
                    const CMat inner = compress_indicator(s, A0.box, [&](int x) { return !A0.box.in_shell(x, 1.0); });
                    parts[i] = s.irrep_dim * fedosov_raw(compress(s, P), As, inverse(As), fedosov_power(spec.d), inner);
                });
                raws.push_back(std::accumulate(parts.begin(), parts.end(), 0.0));
            }
            rep.index = index_from_raws(IndexMethod::fedosov_trace, radii, raws);
            check_index();
        });
    }
    if (has_task(cfg, "oracle")) guarded("oracle", [&] { rep.oracle = winding_oracle_odd(spec, cfg.oracle_grid); });
    if (has_task(cfg, "invariant_suite"))
        guarded("invariant suite", [&] {
            auto rows = monopole_identity_suite(spec.d, std::min(cfg.radius, 4), {0.3, 0.5, 1.0}, topts, cfg.cache_dir);
            rep.invariants.insert(rep.invariants.end(), rows.begin(), rows.end());
        });

    if (rep.flows.size() && rep.index) {
        const int sf = rep.flows.front().net_flow;
        rep.verdicts.push_back({"SF == 2·Ind (" + std::to_string(sf) + " vs 2*" + std::to_string(rep.index->value) + ")",
                                sf == 2 * rep.index->value});
    }
    if (rep.index && rep.oracle)
        rep.verdicts.push_back({"Ind == oracle (" + std::to_string(rep.index->value) + " vs " +
                                    std::to_string(rep.oracle->value) + ")",
                                rep.index->value == rep.oracle->value});
}

void Runner::run_harness()
{
    HarnessResult h = unitary_harness(cfg.harness_trials, cfg.harness_max_dim, std::uint64_t(cfg.seed));
    rep.verdicts.push_back({"SF == Ind on " + std::to_string(h.trials) + " random pairs (" + std::to_string(h.matches) +
                                " matches)",
                            h.matches == h.trials});
    int same = 0;
    for (const HarnessTrial& t : h.details) same += t.flow == t.refined_flow;
    rep.verdicts.push_back({"harness SF stable under grid refinement (" + std::to_string(same) + "/" +
                                std::to_string(h.trials) + ")",
                            same == h.trials});
}

}  // namespace

HarnessResult unitary_harness(int trials, int max_dim, std::uint64_t seed)
{
    if (max_dim < 2) throw Error("flow", "harness dimension must be at least 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    HarnessResult out;
    auto haar = [&](int n) {
        CMat G(n, n);
        for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = cplx(gauss(rng), gauss(rng));
        Eigen::HouseholderQR<CMat> qr(G);
        CMat Q = qr.householderQ();
        CMat R = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int j = 0; j < n; ++j) Q.col(j) *= R(j, j) / std::abs(R(j, j));
        return Q;
    };
    for (int t = 0; t < trials; ++t) {
        const int n = 2 + int(rng() % std::uint64_t(max_dim - 1));
        const int neg = 1 + int(rng() % std::uint64_t(n - 1));
        CMat D = CMat::Identity(n, n);
        for (int i = 0; i < neg; ++i) D(i, i) = -1.0;
        const CMat V = haar(n);
        const CMat F = V * D * V.adjoint();
        const CMat U0 = haar(n);
        // U_a = U0 exp(i pi/2 (F - 1 + a U0^*[F, U0])) runs from U0 F to F U0
        const CMat comm = U0.adjoint() * (F * U0 - U0 * F);
        auto U = [&](double a) {
            CMat X = F - CMat::Identity(n, n) + a * comm;
            return CMat(U0 * hermitian_function(CMat(0.5 * (X + X.adjoint())), [](double x) {
                            return std::exp(kI * (M_PI / 2 * x));
                        }));
        };
        const CMat start = U(0.0);
        OperatorPath p;
        p.at = [&](double a) { return CMat(F * U(a) * start.adjoint()); };
        HarnessTrial trial;
        trial.dim = n;
        FlowOptions o;
        o.bulk_only = false;
        trial.flow = sf_unitary(p, o).net_flow;
        o.grid_points = 2 * o.grid_points - 1;
        trial.refined_flow = sf_unitary(p, o).net_flow;
        const CMat P = 0.5 * (F + CMat::Identity(n, n));
        // exact kernel / cokernel count on Ran P
        HermitianEigen e = eig_hermitian(P, true);
        CMat Q = e.vectors.rightCols(n - neg);
        CMat T = Q.adjoint() * start * Q;
        auto nullity = [](const CMat& M) {
            RVec s = singular_values(M);
            return int((s.array() < 1e-10).count());
        };
        trial.index = nullity(T) - nullity(CMat(T.adjoint()));
        if (trial.flow == trial.index) ++out.matches;
        out.details.push_back(trial);
        ++out.trials;
    }
    return out;
}

bool Report::passed() const
{
    for (const Verdict& v : verdicts)
        if (!v.pass) return false;
    for (const InvariantRow& r : invariants)
        if (!r.pass) return false;
    return true;
}

ExperimentConfig parse_config(const json& doc)
{
    only_keys(doc, {"name", "experiment", "model", "box", "path", "alpha_grid", "tasks", "symmetry", "oracle_grid",
                    "seed", "output_dir", "cache_dir", "harness"},
              "config");
    ExperimentConfig c;
    c.name = get_or<std::string>(doc, "name", "experiment");
    c.experiment = get_or<std::string>(doc, "experiment", "model");
    if (c.experiment != "model" && c.experiment != "harness" && c.experiment != "chirind")
        throw Error("cli", "experiment must be model, chirind or harness");
    c.seed = get_or<int>(doc, "seed", 0);
    c.output_dir = get_or<std::string>(doc, "output_dir", "");
    c.cache_dir = get_or<std::string>(doc, "cache_dir", "");
    c.use_symmetry = get_or<bool>(doc, "symmetry", true);
    c.oracle_grid = get_or<int>(doc, "oracle_grid", 201);
    if (c.oracle_grid < 8) throw Error("cli", "oracle_grid must be at least 8");

    if (c.experiment == "harness") {
        json h = doc.value("harness", json::object());
        only_keys(h, {"trials", "max_dim"}, "harness");
        c.harness_trials = get_or<int>(h, "trials", 50);
        c.harness_max_dim = get_or<int>(h, "max_dim", 24);
        if (c.harness_trials < 1 || c.harness_max_dim < 2) throw Error("cli", "harness needs trials >= 1, max_dim >= 2");
        c.source = config_to_json(c);
        return c;
    }

    if (!doc.contains("model")) throw Error("cli", "config needs a model section");
    const json& m = doc.at("model");
    only_keys(m, {"kind", "d", "mass", "fermi_level"}, "model");
    c.model.kind = model_kind_from_string(get_or<std::string>(m, "kind", "even_dirac"));
    c.model.d = get_or<int>(m, "d", c.model.kind == ModelKind::ssh ? 1 : 2);
    c.model.mass = get_or<double>(m, "mass", c.model.kind == ModelKind::ssh ? 0.0 : 1.0);
    c.model.fermi_level = get_or<double>(m, "fermi_level", 0.0);
    if (c.model.kind == ModelKind::custom_polynomial) throw Error("cli", "custom_polynomial models have no runner");
    if (c.model.kind == ModelKind::ssh && c.model.d != 1) throw Error("cli", "ssh is one-dimensional");
    if (c.model.kind == ModelKind::even_dirac && c.model.d % 2 != 0) throw Error("cli", "even_dirac needs even d");
    if (c.model.kind == ModelKind::odd_chiral && c.model.d % 2 != 1) throw Error("cli", "odd_chiral needs odd d");
    if (c.model.kind == ModelKind::ssh && c.model.mass != 0.0) throw Error("cli", "the ssh runner has mass 0");
    if (c.experiment == "chirind" && c.model.kind != ModelKind::ssh) throw Error("cli", "chirind runs on the ssh model");

    if (!doc.contains("box")) throw Error("cli", "config needs a box section");
    const json& b = doc.at("box");
    only_keys(b, {"d", "radius", "offset"}, "box");
    if (get_or<int>(b, "d", c.model.d) != c.model.d) throw Error("cli", "box.d differs from model.d");
    c.radius = get_or<int>(b, "radius", 4);
    c.offset = get_or<std::string>(b, "offset", c.model.kind == ModelKind::ssh ? "integer" : "half");
    if (c.model.kind == ModelKind::ssh) {
        if (c.offset != "integer") throw Error("cli", "ssh chains use integer sites");
        if (2 * c.radius + 1 < 9) throw Error("cli", "ssh chains need at least 9 sites");
    } else {
        if (c.offset != "half") throw Error("cli", "monopole boxes need the half-integer offset");
        if (c.radius < 1) throw Error("cli", "box radius must be positive");
    }

    c.path = get_or<std::string>(doc, "path", "h");
    if (c.path != "h" && c.path != "full") throw Error("cli", "path must be h or full");
    if (c.path == "full" && c.model.kind != ModelKind::even_dirac) throw Error("cli", "path full needs even_dirac");

    json g = doc.value("alpha_grid", json::object());
    only_keys(g, {"points", "tolerance", "refine_check"}, "alpha_grid");
    c.grid_points = get_or<int>(g, "points", 101);
    c.alpha_tol = get_or<double>(g, "tolerance", 1e-4);
    c.refine_check = get_or<bool>(g, "refine_check", true);
    if (c.grid_points < 2) throw Error("cli", "alpha_grid.points must be at least 2");
    if (!(c.alpha_tol > 0.0)) throw Error("cli", "alpha_grid.tolerance must be positive");

    if (doc.contains("tasks")) {
        if (!doc.at("tasks").is_array()) throw Error("cli", "tasks must be a list");
        for (const json& t : doc.at("tasks")) {
            if (!t.is_string() || !kTasks.count(t.get<std::string>())) throw Error("cli", "unknown task " + t.dump());
            c.tasks.push_back(t.get<std::string>());
        }
    } else {
        c.tasks = {"spectral_flow", "index", "oracle"};
    }
    c.source = config_to_json(c);
    return c;
}

json config_to_json(const ExperimentConfig& c)
{
    json j;
    j["name"] = c.name;
    j["experiment"] = c.experiment;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["cache_dir"] = c.cache_dir;
    j["symmetry"] = c.use_symmetry;
    j["oracle_grid"] = c.oracle_grid;
    if (c.experiment == "harness") {
        j["harness"] = {{"trials", c.harness_trials}, {"max_dim", c.harness_max_dim}};
        return j;
    }
    j["model"] = {{"kind", to_string(c.model.kind)}, {"d", c.model.d}, {"mass", c.model.mass},
                  {"fermi_level", c.model.fermi_level}};
    j["box"] = {{"d", c.model.d}, {"radius", c.radius}, {"offset", c.offset}};
    j["path"] = c.path;
    j["alpha_grid"] = {{"points", c.grid_points}, {"tolerance", c.alpha_tol}, {"refine_check", c.refine_check}};
    j["tasks"] = c.tasks;
    return j;
}

std::string config_hash(const ExperimentConfig& c)
{
    json j = config_to_json(c);
    // where results are written does not change them
    j.erase("output_dir");
    j.erase("cache_dir");
    return hex64(fnv1a(j.dump()));
}

std::vector<std::string> list_presets()
{
    std::vector<std::string> names;
    const std::filesystem::path dir = MONOFLOW_PRESET_DIR;
    if (!std::filesystem::exists(dir)) return names;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
    std::sort(names.begin(), names.end());
    return names;
}

json load_preset(const std::string& name)
{
    const std::filesystem::path file = std::filesystem::path(MONOFLOW_PRESET_DIR) / (name + ".json");
    std::ifstream in(file);
    if (!in) throw Error("cli", "no preset named '" + name + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("cli", "preset '" + name + "' is not valid JSON: " + e.what());
    }
}

Report run_experiment(const ExperimentConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    Report rep;
    rep.config = cfg;
    rep.hash = config_hash(cfg);
    Runner run{cfg, rep, TransportOptions{}};
    if (cfg.experiment == "harness") {
        run.run_harness();
    } else if (cfg.experiment == "chirind") {
        run.run_chirind();
    } else {
        switch (cfg.model.kind) {
        case ModelKind::ssh: run.run_ssh(); break;
        case ModelKind::even_dirac: run.run_even(); break;
        case ModelKind::odd_chiral: run.run_odd(); break;
        case ModelKind::custom_polynomial: throw Error("cli", "custom_polynomial models have no runner");
        }
    }
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

json report_to_json(const Report& r)
{
    json j;
    j["schema"] = "monoflow-report";
    j["schema_version"] = 1;
    j["config"] = config_to_json(r.config);
    j["config_hash"] = r.hash;
    j["flows"] = json::array();
    for (const FlowReport& f : r.flows) {
        json jf{{"label", f.label}, {"net_flow", f.net_flow}, {"net_flow_all", f.net_flow_all}};
        if (f.refined_net_flow) {
            jf["refined_net_flow"] = *f.refined_net_flow;
            jf["refined_net_flow_all"] = *f.refined_net_flow_all;
        }
        jf["sectors"] = json::array();
        for (const SectorFlow& s : f.sectors) {
            json js{{"sector", s.sector},
                    {"multiplicity", s.multiplicity},
                    {"mode", to_string(s.result.mode)},
                    {"net_flow", s.result.net_flow},
                    {"net_flow_all", s.result.net_flow_all},
                    {"refinements", s.result.refinements},
                    {"weak_matches", s.result.weak_matches},
                    {"bridges", s.result.bridges},
                    {"min_gap", s.result.min_gap}};
            js["crossings"] = json::array();
            for (const Crossing& c : s.result.crossings)
                js["crossings"].push_back({{"alpha", c.alpha},
                                           {"direction", c.direction},
                                           {"track", c.track},
                                           {"bulk", c.bulk},
                                           {"shell_weight", c.shell_weight}});
            jf["sectors"].push_back(js);
        }
        j["flows"].push_back(jf);
    }
    if (r.index)
        j["index"] = {{"value", r.index->value}, {"method", to_string(r.index->method)}, {"raw", r.index->raw},
                      {"stability", r.index->stability}, {"stable", r.index->stable}, {"radii", r.index->radii},
                      {"raws", r.index->raws}};
    if (r.kernel)
        j["kernel_count"] = {{"kernel", r.kernel->kernel}, {"cokernel", r.kernel->cokernel},
                             {"value", r.kernel->value}, {"discarded", r.kernel->discarded}};
    if (r.oracle)
        j["oracle"] = {{"value", r.oracle->value}, {"method", to_string(IndexMethod::oracle_momentum)},
                       {"raw", r.oracle->raw}, {"raw_check", r.oracle->raw_check}, {"grid", r.oracle->grid},
                       {"min_gap", r.oracle->min_gap}};
    j["invariants"] = json::array();
    for (const InvariantRow& row : r.invariants)
        j["invariants"].push_back(
            {{"name", row.name}, {"value", row.value}, {"tolerance", row.tolerance}, {"pass", row.pass}});
    j["verdicts"] = json::array();
    for (const Verdict& v : r.verdicts) j["verdicts"].push_back({{"line", v.line}, {"pass", v.pass}});
    j["passed"] = r.passed();
    j["wall_time"] = r.wall_time;
    return j;
}

std::string trajectory_csv(const FlowReport& f)
{
    std::ostringstream out;
    out << "alpha,track,re,im,bulk\n";
    for (const SectorFlow& s : f.sectors)
        for (const Track& t : s.result.path.tracks)
            for (const TrackPoint& p : t.points)
                out << fmt(p.alpha) << ',' << s.sector << ':' << t.id << ',' << fmt(p.value.real()) << ','
                    << fmt(p.value.imag()) << ',' << (p.bulk ? 1 : 0) << '\n';
    return out.str();
}

void emit_trajectories(const Report& r, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cli", "cannot create " + dir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < r.flows.size(); ++i)
        write_atomic(dir / ("trajectories_" + std::to_string(i) + ".csv"), trajectory_csv(r.flows[i]));
    write_atomic(dir / "summary.json", report_to_json(r).dump(2) + "\n");
}

std::vector<RMat> signed_permutations(int d)
{
    std::vector<int> perm(static_cast<std::size_t>(d));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<RMat> out;
    do {
        for (int signs = 0; signs < (1 << d); ++signs) {
            RMat O = RMat::Zero(d, d);
            for (int j = 0; j < d; ++j) O(perm[std::size_t(j)], j) = (signs >> j & 1) ? -1.0 : 1.0;
            out.push_back(O);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

std::vector<InvariantRow> monopole_identity_suite(int d, int radius, const std::vector<double>& alphas,
                                                  const TransportOptions& opts, const std::filesystem::path& cache_dir)
{
    const CliffordRep rep = build_clifford(d);
    const LatticeBox box = LatticeBox::half_integer(d, radius);
    const LatticeBox gbox = box.with_fiber(rep.fiber_dim);
    const SpMat F = dirac_phase(dirac_operator(gbox, rep)).data;
    const int f = rep.fiber_dim;
    std::vector<InvariantRow> rows;
    const std::vector<RMat> syms = signed_permutations(d);
    for (double a : alphas) {
        const PhaseCache ca = cached_phases(box, GaugeField{rep, a}, opts, cache_dir);
        const PhaseCache cb = cached_phases(box, GaugeField{rep, 1.0 - a}, opts, cache_dir);
        double conj = 0.0, grad = 0.0;
        for (int k = 0; k < d; ++k) {
            const SpMat Sa = monopole_shift(ca, k).data;
            const SpMat Sb = monopole_shift(cb, k).data;
            const SpMat diff = F * Sa * F - Sb;
            for (int c = 0; c < diff.outerSize(); ++c)
                for (SpMat::InnerIterator it(diff, c); it; ++it) {
                    const int sr = int(it.row() / f), sc = int(it.col() / f);
                    if (box.in_shell(sr, 1.0) || box.in_shell(sc, 1.0)) continue;
                    conj = std::max(conj, std::abs(it.value()));
                }
            if (rep.grading) {
                const SpMat G = site_constant(gbox, *rep.grading).data;
                const SpMat dg = G * Sa * G - Sa;
                for (int c = 0; c < dg.outerSize(); ++c)
                    for (SpMat::InnerIterator it(dg, c); it; ++it) grad = std::max(grad, std::abs(it.value()));
            }
        }
        const std::string tag = " (alpha=" + fmt(a) + ")";
        rows.push_back({"F S^a F = S^{1-a} interior" + tag, conj, 1e-8, conj <= 1e-8});
        if (rep.grading) rows.push_back({"Gamma S^a Gamma = S^a" + tag, grad, 1e-14, grad <= 1e-14});
        double cov = 0.0;
        for (const RMat& O : syms) cov = std::max(cov, covariance_check(ca, O));
        rows.push_back({"covariance under " + std::to_string(syms.size()) + " box symmetries" + tag, cov, 1e-6,
                        cov <= 1e-6});
        const Envelope env = decay_envelope(ca);
        rows.push_back({"R ||M - 1|| <= C' with fitted C' = " + fmt(env.c_fit) + tag, env.worst_ratio, 2.0,
                        env.worst_ratio <= 2.0});
    }
    return rows;
}

CMat closed_form_phase_d2(const RVec& x, int k, double alpha)
{
    if (x.size() != 2 || (k != 0 && k != 1)) throw Error("monopole", "closed form is for d = 2, k in {0, 1}");
    double phase;
    if (k == 0)
        phase = alpha * (std::atan(x(0) / x(1)) - std::atan((x(0) + 1) / x(1)));
    else
        phase = -alpha * (std::atan(x(1) / x(0)) - std::atan((x(1) + 1) / x(0)));
    CMat M = CMat::Zero(2, 2);
    M(0, 0) = std::exp(kI * phase);
    M(1, 1) = std::exp(-kI * phase);
    return M;
}

double closed_form_deviation(int radius, double alpha, const TransportOptions& opts)
{
    const LatticeBox box = LatticeBox::half_integer(2, radius);
    const GaugeField field{build_clifford(2), alpha};
    std::vector<double> worst(static_cast<std::size_t>(box.num_sites()), 0.0);
    parallel_for(worst.size(), [&](std::size_t s) {
        const RVec x = box.position(int(s));
        for (int k = 0; k < 2; ++k) {
            const CMat M = phase_matrix(field, x, RVec::Unit(2, k), opts);
            worst[s] = std::max(worst[s], (M - closed_form_phase_d2(x, k, alpha)).cwiseAbs().maxCoeff());
        }
    });
    return *std::max_element(worst.begin(), worst.end());
}

}  // namespace monoflow
