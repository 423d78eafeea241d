#include "monoflow/flow.hpp"

#include "monoflow/linalg.hpp"
#include "monoflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>

namespace monoflow {

std::string to_string(FlowMode m)
{
    switch (m) {
    case FlowMode::selfadjoint_through_mu: return "selfadjoint_through_mu";
    case FlowMode::unitary_realpart: return "unitary_realpart";
    case FlowMode::nonnormal_imaginary_axis: return "nonnormal_imaginary_axis";
    }
    return "unknown";
}

namespace {

struct Snapshot {
    double alpha = 0.0;
    CVec values;
    CMat vectors;  // unit columns
    CMat left;     // rows dual to the columns of vectors (non-normal mode only)
    RVec weight;   // shell weight per eigenvector (zero outside [lo, hi))
    // Selfadjoint modes: values ascend and only [lo, hi) lies within the tracked band around mu.
    Eigen::Index lo = 0, hi = 0;
};

void check_path(const OperatorPath& path, FlowMode mode)
{
    for (double a : {0.0, 1.0}) {
        if (mode == FlowMode::unitary_realpart) {
            CMat W = path.at(a);
            CMat X = 0.5 * (W + W.adjoint());
            // Re(W) = W for a selfadjoint endpoint
            if ((X - W).cwiseAbs().maxCoeff() > 1e-8) throw Error("flow", "unitary path endpoints must be selfadjoint");
        } else if (mode == FlowMode::nonnormal_imaginary_axis) {
            GeneralEigen e = eig_general(path.at(a), false);
            if (e.values.imag().cwiseAbs().maxCoeff() > 1e-6)
                throw Error("flow", "non-normal path endpoints must have real spectrum");
        }
    }
}

class Tracker {
public:
    Tracker(const OperatorPath& path, FlowMode mode, const FlowOptions& opts)
        : path_(path), mode_(mode), opts_(opts)
    {
        result_.mode = mode;
        result_.path.matching_threshold = opts.match_threshold;
        if (opts_.grid_points < 2) throw Error("flow", "alpha grid needs at least two points");
        for (int i = 0; i < opts_.grid_points; ++i) result_.path.grid.push_back(double(i) / (opts_.grid_points - 1));
        const CMat& sh = path_.shell;
        if (sh.size() != 0 && (sh - CMat(sh.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0)
            shell_diag_ = sh.diagonal().real();
    }

    const std::vector<double>& grid() const { return result_.path.grid; }

    Snapshot snapshot(double alpha) const
    {
        Snapshot s;
        s.alpha = alpha;
        CMat A = path_.at(alpha);
        if (mode_ == FlowMode::nonnormal_imaginary_axis) {
            GeneralEigen e = eig_general(A, true);
            s.values = e.values;
            s.vectors = std::move(e.vectors);
            s.left = inverse(s.vectors);
            s.lo = 0;
            s.hi = s.values.size();
        } else {
            CMat X = 0.5 * (A + A.adjoint());
            HermitianEigen e = eig_hermitian(X, true);
            s.values = e.values.cast<cplx>();
            s.vectors = std::move(e.vectors);
            const double band = 3 * opts_.window;
            s.lo = 0;
            while (s.lo < s.values.size() && s.values(s.lo).real() <= opts_.mu - band) ++s.lo;
            s.hi = s.lo;
            while (s.hi < s.values.size() && s.values(s.hi).real() < opts_.mu + band) ++s.hi;
        }
        const Eigen::Index n = s.values.size(), m = s.hi - s.lo;
        s.weight = RVec::Zero(n);
        if (path_.shell.size() != 0 && m > 0) {
            const auto V = s.vectors.middleCols(s.lo, m);
            if (shell_diag_.size() != 0) {
                s.weight.segment(s.lo, m) = (shell_diag_.asDiagonal() * V.cwiseAbs2()).colwise().sum().transpose();
            } else {
                CMat SV = path_.shell * V;
                for (Eigen::Index i = 0; i < m; ++i) s.weight(s.lo + i) = V.col(i).dot(SV.col(i)).real();
            }
            for (Eigen::Index i = 0; i < m; ++i) s.weight(s.lo + i) /= V.col(i).squaredNorm();
        }
        return s;
    }

    // Grid snapshots arrive in increasing alpha; the walk between them refines on its own.
    void feed(Snapshot s)
    {
        if (!have_prev_) {
            check_endpoint(s);
            track_of_.resize(std::size_t(s.values.size()));
            std::iota(track_of_.begin(), track_of_.end(), 0);
            record(s, std::vector<double>(std::size_t(s.values.size()), 1.0));
            prev_ = std::move(s);
            have_prev_ = true;
            return;
        }
        // a bridge may already have carried the walk past this grid point
        if (s.alpha <= prev_.alpha) return;
        prev_ = walk(std::move(prev_), std::move(s));
    }

    FlowResult finish()
    {
        if (!have_prev_) throw Error("flow", "no snapshots were tracked");
        if (prev_.alpha < 1.0) prev_ = walk(std::move(prev_), snapshot(1.0));
        check_endpoint(prev_);

        for (const Crossing& c : result_.crossings) {
            result_.net_flow_all += c.direction;
            if (c.bulk || !opts_.bulk_only) result_.net_flow += c.direction;
        }
        for (auto& [id, tr] : tracks_)
            if (!tr.points.empty()) result_.path.tracks.push_back(std::move(tr));
        return std::move(result_);
    }

private:
    double side(cplx z) const { return z.real() - opts_.mu > 0 ? 1.0 : -1.0; }
    bool near(cplx z, double w) const { return std::abs(z.real() - opts_.mu) < w; }


    // |coefficient of b's eigenvector L + j in a's eigenvector L + i|, i, j < m
    RMat overlaps(const Snapshot& a, const Snapshot& b, Eigen::Index L, Eigen::Index m) const
    {
        if (mode_ == FlowMode::nonnormal_imaginary_axis)
            return (b.left.middleRows(L, m) * a.vectors.middleCols(L, m)).cwiseAbs();
        return (b.vectors.middleCols(L, m).adjoint() * a.vectors.middleCols(L, m)).cwiseAbs();
    }

    void check_endpoint(const Snapshot& s)
    {
        double gap = 1e300;
        for (Eigen::Index i = 0; i < s.values.size(); ++i) {
            if (s.weight(i) >= opts_.boundary_weight) continue;
            gap = std::min(gap, std::abs(s.values(i).real() - opts_.mu));
        }
        if (gap < opts_.endpoint_gap)
            throw Error("flow", "endpoint not invertible: bulk eigenvalue within " + std::to_string(gap) +
                                    " of the crossing line at alpha=" + std::to_string(s.alpha));
        result_.min_gap = have_gap_ ? std::min(result_.min_gap, gap) : gap;
        have_gap_ = true;
    }

    struct Matching {
        std::vector<int> next;   // partner in b for each eigenvector of a
        std::vector<double> score;
        bool weak = false;
    };

    // States below min(lo) and above max(hi) keep their rank; the band in between is matched
    // by overlaps.
    Matching match(const Snapshot& a, const Snapshot& b) const
    {
        const Eigen::Index total = a.values.size();
        const Eigen::Index L = std::min(a.lo, b.lo), R = std::max(a.hi, b.hi);
        Matching m;
        m.next.resize(std::size_t(total));
        std::iota(m.next.begin(), m.next.end(), 0);
        m.score.assign(std::size_t(total), 1.0);
        if (R <= L) return m;
        Matching band = match_band(a.values.segment(L, R - L), b.values.segment(L, R - L), overlaps(a, b, L, R - L));
        for (Eigen::Index i = 0; i < R - L; ++i) {
            m.next[std::size_t(L + i)] = int(L) + band.next[std::size_t(i)];
            m.score[std::size_t(L + i)] = band.score[std::size_t(i)];
        }
        m.weak = band.weak;
        return m;
    }

    // O(j, i): b's j against a's i
    Matching match_band(const CVec& av, const CVec& bv, const RMat& O) const
    {
        const Eigen::Index n = av.size();

        // clusters of b by eigenvalue
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int x, int y) {
            const cplx u = bv(x), v = bv(y);
            return u.real() != v.real() ? u.real() < v.real() : u.imag() < v.imag();
        });
        std::vector<int> cluster(static_cast<std::size_t>(n));
        std::vector<std::vector<int>> members;
        for (std::size_t k = 0; k < order.size(); ++k) {
            if (k == 0 || std::abs(bv(order[k]) - bv(order[k - 1])) > opts_.cluster_tol) members.emplace_back();
            members.back().push_back(order[k]);
            cluster[std::size_t(order[k])] = int(members.size()) - 1;
        }

        // candidate (score, a, cluster)
        struct Cand {
            double score;
            int i, c;
        };
        std::vector<Cand> cands;
        cands.reserve(std::size_t(n) * 4);
        for (Eigen::Index i = 0; i < n; ++i) {
            std::vector<double> acc(members.size(), 0.0);
            for (Eigen::Index j = 0; j < n; ++j) {
                double o = O(j, i);
                if (o > 1e-3) acc[std::size_t(cluster[std::size_t(j)])] += o * o;
            }
            for (std::size_t c = 0; c < members.size(); ++c)
                if (acc[c] > 1e-6) cands.push_back({std::sqrt(acc[c]), int(i), int(c)});
        }
        std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.score > y.score; });

        Matching m;
        m.next.assign(std::size_t(n), -1);
        m.score.assign(std::size_t(n), 0.0);
        std::vector<int> slots(members.size());
        for (std::size_t c = 0; c < members.size(); ++c) slots[c] = int(members[c].size());
        std::vector<char> used(std::size_t(n), 0);
        for (const Cand& cd : cands) {
            if (m.next[std::size_t(cd.i)] >= 0 || slots[std::size_t(cd.c)] == 0) continue;
            int best = -1;
            double bo = -1;
            for (int j : members[std::size_t(cd.c)])
                if (!used[std::size_t(j)] && O(j, cd.i) > bo) {
                    bo = O(j, cd.i);
                    best = j;
                }
            used[std::size_t(best)] = 1;
            --slots[std::size_t(cd.c)];
            m.next[std::size_t(cd.i)] = best;
            m.score[std::size_t(cd.i)] = cd.score;
        }
        // leftovers (negligible overlap everywhere): pair by eigenvalue proximity
        for (Eigen::Index i = 0; i < n; ++i) {
            if (m.next[std::size_t(i)] >= 0) continue;
            int best = -1;
            double bd = 1e300;
            for (Eigen::Index j = 0; j < n; ++j)
                if (!used[std::size_t(j)] && std::abs(bv(j) - av(i)) < bd) {
                    bd = std::abs(bv(j) - av(i));
                    best = int(j);
                }
            used[std::size_t(best)] = 1;
            m.next[std::size_t(i)] = best;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            int j = m.next[std::size_t(i)];
            bool active = near(av(i), opts_.window) || near(bv(j), opts_.window);
            if (active && m.score[std::size_t(i)] < opts_.match_threshold) m.weak = true;
        }
        return m;
    }

    // Advances the tracks from a to b, halving weakly matched steps. Returns the snapshot
    // reached, which lies beyond b when a bridge was needed.
    Snapshot walk(Snapshot a, Snapshot b)
    {
        const double min_width = (b.alpha - a.alpha) / std::pow(2.0, opts_.max_depth);
        std::vector<Snapshot> stack;
        stack.push_back(std::move(b));
        while (!stack.empty()) {
            if (stack.back().alpha <= a.alpha) {
                stack.pop_back();
                continue;
            }
            const Snapshot& next = stack.back();
            Matching m = match(a, next);
            const double width = next.alpha - a.alpha;
            if (!m.weak) {
                commit(a, next, m);
                a = std::move(stack.back());
                stack.pop_back();
                continue;
            }
            if (width > std::max(opts_.bridge_width, min_width * 1.5)) {
                ++result_.refinements;
                stack.push_back(snapshot(a.alpha + 0.5 * width));
                continue;
            }
            if (auto c = bridge(a, width)) {
                Matching mb = match(a, *c);
                commit(a, *c, mb);
                ++result_.bridges;
                a = std::move(*c);
                continue;
            }
            commit(a, next, m);
            a = std::move(stack.back());
            stack.pop_back();
        }
        return a;
    }

    // Two levels that hybridize across a gap far below the grid scale are matched
    // diabatically: from a to the first later snapshot whose states match a cleanly.
    std::optional<Snapshot> bridge(const Snapshot& a, double width)
    {
        for (double w = 2 * width; w <= opts_.bridge_span; w *= 2) {
            double alpha = std::min(1.0, a.alpha + w);
            Snapshot c = snapshot(alpha);
            if (!match(a, c).weak) return c;
            if (alpha >= 1.0) break;
        }
        return std::nullopt;
    }

    void commit(const Snapshot& a, const Snapshot& b, const Matching& m)
    {
        const Eigen::Index n = a.values.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            int j = m.next[std::size_t(i)];
            bool active = near(a.values(i), opts_.window) || near(b.values(j), opts_.window);
            if (active && m.score[std::size_t(i)] < opts_.match_threshold) ++result_.weak_matches;
            if (side(a.values(i)) != side(b.values(j))) locate(a, int(i), b, j, track_of_[std::size_t(i)]);
        }
        std::vector<int> next_track(static_cast<std::size_t>(n));
        std::vector<double> score(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            next_track[std::size_t(m.next[std::size_t(i)])] = track_of_[std::size_t(i)];
            score[std::size_t(m.next[std::size_t(i)])] = m.score[std::size_t(i)];
        }
        track_of_ = std::move(next_track);
        record(b, score);
    }

    // bisection on one track between a (index i) and b (index j) across the crossing line
    void locate(const Snapshot& a0, int i0, const Snapshot& b0, int j0, int track)
    {
        double lo = a0.alpha, hi = b0.alpha;
        cplx vlo = a0.values(i0), vhi = b0.values(j0);
        CVec vec = a0.vectors.col(i0);
        while (hi - lo > opts_.alpha_tol) {
            Snapshot mid = snapshot(0.5 * (lo + hi));
            RVec o = overlaps_of(vec, mid);
            Eigen::Index k;
            o.maxCoeff(&k);
            if (side(mid.values(k)) == side(vlo)) {
                lo = mid.alpha;
                vlo = mid.values(k);
                vec = mid.vectors.col(k);
            } else {
                hi = mid.alpha;
                vhi = mid.values(k);
            }
        }
        Crossing c;
        c.alpha = 0.5 * (lo + hi);
        c.direction = vhi.real() > vlo.real() ? +1 : -1;
        c.track = track;
        c.shell_weight = 0.5 * (a0.weight(i0) + b0.weight(j0));
        c.bulk = c.shell_weight < opts_.boundary_weight;
        result_.crossings.push_back(c);
    }

    RVec overlaps_of(const CVec& v, const Snapshot& s) const
    {
        if (mode_ == FlowMode::nonnormal_imaginary_axis) return (s.left * v).cwiseAbs();
        return (s.vectors.adjoint() * v).cwiseAbs();
    }

    void record(const Snapshot& s, const std::vector<double>& score)
    {
        for (Eigen::Index i = 0; i < s.values.size(); ++i) {
            if (!near(s.values(i), 2 * opts_.window)) continue;
            int id = track_of_[std::size_t(i)];
            Track& tr = tracks_[id];
            tr.id = id;
            tr.points.push_back({s.alpha, s.values(i), score[std::size_t(i)], s.weight(i) < opts_.boundary_weight});
        }
    }

    const OperatorPath& path_;
    FlowMode mode_;
    FlowOptions opts_;
    FlowResult result_;
    std::vector<int> track_of_;
    std::map<int, Track> tracks_;
    bool have_gap_ = false;
    RVec shell_diag_;
    Snapshot prev_;
    bool have_prev_ = false;
};

// Snapshots of `grid` in batches so that workers share the load; `sink` sees them in order.
void sweep(const Tracker& t, const std::vector<double>& grid, const std::function<void(std::size_t, Snapshot)>& sink)
{
    const std::size_t batch = std::max<std::size_t>(1, std::size_t(num_threads()));
    std::vector<Snapshot> pending;
    for (std::size_t start = 0; start < grid.size(); start += batch) {
        const std::size_t count = std::min(batch, grid.size() - start);
        pending.assign(count, Snapshot{});
        parallel_for(count, [&](std::size_t i) { pending[i] = t.snapshot(grid[start + i]); });
        for (std::size_t i = 0; i < count; ++i) sink(start + i, std::move(pending[i]));
    }
}

FlowResult run(const OperatorPath& path, FlowMode mode, const FlowOptions& opts)
{
    Tracker t(path, mode, opts);
    sweep(t, t.grid(), [&](std::size_t, Snapshot s) { t.feed(std::move(s)); });
    return t.finish();
}

}  // namespace

FlowResult sf_selfadjoint(const OperatorPath& path, const FlowOptions& opts)
{
    return run(path, FlowMode::selfadjoint_through_mu, opts);
}

FlowResult sf_unitary(const OperatorPath& path, FlowOptions opts)
{
    opts.mu = 0.0;
    check_path(path, FlowMode::unitary_realpart);
    return run(path, FlowMode::unitary_realpart, opts);
}

FlowResult sf_nonnormal(const OperatorPath& path, const FlowOptions& opts)
{
    check_path(path, FlowMode::nonnormal_imaginary_axis);
    return run(path, FlowMode::nonnormal_imaginary_axis, opts);
}

RefinedFlow sf_refined(const OperatorPath& path, FlowMode mode, FlowOptions opts)
{
    if (mode == FlowMode::unitary_realpart) opts.mu = 0.0;
    check_path(path, mode);
    FlowOptions fine = opts;
    fine.grid_points = 2 * opts.grid_points - 1;
    Tracker coarse(path, mode, opts), refined(path, mode, fine);
    sweep(refined, refined.grid(), [&](std::size_t i, Snapshot s) {
        if (i % 2 == 0) coarse.feed(s);
        refined.feed(std::move(s));
    });
    return {coarse.finish(), refined.finish()};
}

CMat polar_homotopy(const CMat& A, double s)
{
    CMat AA = A.adjoint() * A;
    HermitianEigen e = eig_hermitian(AA, true);
    if (e.values.minCoeff() < 1e-24) throw Error("flow", "polar homotopy needs an invertible operator");
    CVec f = e.values.unaryExpr([s](double x) { return std::pow(x, -0.5 * s); }).cast<cplx>();
    return A * e.vectors * f.asDiagonal() * e.vectors.adjoint();
}

int total_flow(const std::vector<SectorFlow>& flows, bool all_tracks)
{
    int total = 0;
    for (const SectorFlow& f : flows) total += f.multiplicity * (all_tracks ? f.result.net_flow_all : f.result.net_flow);
    return total;
}

}  // namespace monoflow
