// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference for specular paths over rectangular facets. A
// specular path through a facet sequence is the minimiser of the total
// polyline length with each rp constrained to its facet; the length is convex
// in the facet coordinates, so a zooming grid search converges to it. The
// minimum equals the unfolded distance (tx mirrored through every plane, then
// to rx) exactly when a specular path exists.
//
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "matid/scene.hpp"

namespace oracle {

using matid::Vec3;

struct Rect {
    std::string id;
    Vec3 c, u, v;  // centre, orthonormal in-plane axes
    double hu = 1.0, hv = 1.0;

    Vec3 normal() const { return matid::cross(u, v); }
    Vec3 at(double s, double t) const { return c + u * s + v * t; }
    Vec3 mirror(const Vec3& p) const {
        const Vec3 n = normal();
        return p - n * (2.0 * matid::dot(p - c, n));
    }
    matid::Facet facet(std::string material = "unknown") const {
        return {id, {at(-hu, -hv), at(hu, -hv), at(hu, hv), at(-hu, hv)}, std::move(material), 0.1};
    }
    // Distance inside the rectangle to its nearest edge (negative outside), for a point on its plane.
    double edge_margin(const Vec3& p) const {
        const Vec3 d = p - c;
        return std::min(hu - std::abs(matid::dot(d, u)), hv - std::abs(matid::dot(d, v)));
    }
};

struct BrutePath {
    std::vector<Vec3> rps;
    double length = 0.0;
    double unfolded = 0.0;
};

inline double polyline(const Vec3& tx, const std::vector<Vec3>& pts, const Vec3& rx) {
    double len = 0.0;
    Vec3 prev = tx;
    for (const auto& p : pts) {
        len += matid::distance(prev, p);
        prev = p;
    }
    return len + matid::distance(prev, rx);
}

// Zooming grid search down to a 1e-6 m cell.
inline BrutePath brute_force_path(const std::vector<const Rect*>& seq, const Vec3& tx, const Vec3& rx) {
    const std::size_t dims = 2 * seq.size();
    const int pts = seq.size() == 1 ? 41 : 11;
    std::vector<double> lo(dims), hi(dims), best(dims, 0.0);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        lo[2 * i] = -seq[i]->hu;
        hi[2 * i] = seq[i]->hu;
        lo[2 * i + 1] = -seq[i]->hv;
        hi[2 * i + 1] = seq[i]->hv;
    }
    std::vector<Vec3> cur(seq.size());
    auto eval = [&](const std::vector<double>& x) {
        for (std::size_t i = 0; i < seq.size(); ++i) cur[i] = seq[i]->at(x[2 * i], x[2 * i + 1]);
        return polyline(tx, cur, rx);
    };
    double best_len = std::numeric_limits<double>::infinity();
    std::vector<double> x(dims);
    std::vector<int> idx(dims);
    for (;;) {
        std::vector<double> step(dims);
        double widest = 0.0;
        for (std::size_t k = 0; k < dims; ++k) {
            step[k] = (hi[k] - lo[k]) / (pts - 1);
            widest = std::max(widest, hi[k] - lo[k]);
        }
        std::fill(idx.begin(), idx.end(), 0);
        for (;;) {
            for (std::size_t k = 0; k < dims; ++k) x[k] = lo[k] + idx[k] * step[k];
            const double len = eval(x);
            if (len < best_len) {
                best_len = len;
                best = x;
            }
            std::size_t k = 0;
            while (k < dims && ++idx[k] == pts) idx[k++] = 0;
            if (k == dims) break;
        }
        if (widest < 1e-6) break;
        for (std::size_t k = 0; k < dims; ++k) {
            const std::size_t facet = k / 2;
            const double half = k % 2 == 0 ? seq[facet]->hu : seq[facet]->hv;
            lo[k] = std::max(-half, best[k] - 2.0 * step[k]);
            hi[k] = std::min(half, best[k] + 2.0 * step[k]);
        }
    }
    BrutePath out;
    for (std::size_t i = 0; i < seq.size(); ++i) out.rps.push_back(seq[i]->at(best[2 * i], best[2 * i + 1]));
    out.length = polyline(tx, out.rps, rx);
    Vec3 image = tx;
    for (const auto* r : seq) image = r->mirror(image);
    out.unfolded = matid::distance(image, rx);
    return out;
}

enum class Crossing { Clear, Hit, Borderline };

// Segment a-b against a rectangle; crossings within 1e-4 m of either
// endpoint are ignored (they are the path's own rps).
inline Crossing segment_crossing(const Rect& r, const Vec3& a, const Vec3& b) {
    const Vec3 n = r.normal();
    const double da = matid::dot(a - r.c, n);
    const double db = matid::dot(b - r.c, n);
    if ((da > 0.0) == (db > 0.0) || da == db) return Crossing::Clear;
    const double t = da / (da - db);
    const Vec3 p = a + (b - a) * t;
    const double len = matid::distance(a, b);
    if (t * len < 1e-4 || (1.0 - t) * len < 1e-4) return Crossing::Clear;
    const double m = r.edge_margin(p);
    if (std::abs(m) < 1e-3) return Crossing::Borderline;
    return m > 0.0 ? Crossing::Hit : Crossing::Clear;
}

enum class Verdict { Valid, Invalid, Borderline };

struct OracleResult {
    Verdict verdict = Verdict::Invalid;
    BrutePath path;
};

inline OracleResult classify(const std::vector<Rect>& rects, const std::vector<const Rect*>& seq, const Vec3& tx,
                             const Vec3& rx) {
    OracleResult res;
    res.path = brute_force_path(seq, tx, rx);
    const double gap = res.path.length - res.path.unfolded;
    if (gap > 1e-5) return res;
    if (gap > 1e-7) {
        res.verdict = Verdict::Borderline;
        return res;
    }
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (seq[i]->edge_margin(res.path.rps[i]) < 1e-3) {
            res.verdict = Verdict::Borderline;
            return res;
        }
    }
    std::vector<Vec3> chain{tx};
    chain.insert(chain.end(), res.path.rps.begin(), res.path.rps.end());
    chain.push_back(rx);
    bool borderline = false;
    for (std::size_t leg = 0; leg + 1 < chain.size(); ++leg) {
        if (matid::distance(chain[leg], chain[leg + 1]) < 1e-3) borderline = true;
        for (const auto& r : rects) {
            const auto c = segment_crossing(r, chain[leg], chain[leg + 1]);
            if (c == Crossing::Hit) return res;
            if (c == Crossing::Borderline) borderline = true;
        }
    }
    res.verdict = borderline ? Verdict::Borderline : Verdict::Valid;
    return res;
}

struct RandomScene {
    std::vector<Rect> rects;
    Vec3 tx, rx;

    matid::Scene scene() const {
        std::vector<matid::Facet> facets;
        for (const auto& r : rects) facets.push_back(r.facet());
        return matid::Scene(std::move(facets));
    }
};

// Rectangles around the origin facing roughly inward, terminals near the
// centre, so that most facet sequences have a chance of a specular path.
inline RandomScene random_scene(std::uint64_t seed, int n_facets) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> half(0.8, 3.0);
    auto rand_vec = [&](double s) { return Vec3{s * unit(rng), s * unit(rng), s * unit(rng)}; };
    RandomScene out;
    for (;;) {
        out.rects.clear();
        for (int i = 0; i < n_facets; ++i) {
            Rect r;
            r.id = "f" + std::to_string(i);
            Vec3 c = rand_vec(4.0);
            while (matid::norm(c) < 2.5) c = rand_vec(4.0);
            r.c = c;
            const Vec3 n = matid::normalized(-c * (1.0 / matid::norm(c)) + rand_vec(0.4));
            Vec3 helper = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
            r.u = matid::normalized(matid::cross(helper, n));
            r.v = matid::cross(n, r.u);
            r.hu = half(rng);
            r.hv = half(rng);
            out.rects.push_back(r);
        }
        out.tx = rand_vec(1.5);
        out.rx = rand_vec(1.5);
        bool ok = matid::distance(out.tx, out.rx) > 0.5;
        for (const auto& r : out.rects) {
            ok = ok && std::abs(matid::dot(out.tx - r.c, r.normal())) > 0.05 &&
                 std::abs(matid::dot(out.rx - r.c, r.normal())) > 0.05;
        }
        // Rectangles may intersect one another; the scene model allows that.
        if (ok) return out;
    }
}

// All facet sequences of length 1..max_bounces with no immediate repeats.
inline std::vector<std::vector<std::size_t>> facet_sequences(std::size_t n, int max_bounces) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::vector<std::size_t>> frontier{{}};
    for (int depth = 1; depth <= max_bounces; ++depth) {
        std::vector<std::vector<std::size_t>> next;
        for (const auto& s : frontier) {
            for (std::size_t i = 0; i < n; ++i) {
                if (!s.empty() && s.back() == i) continue;
                auto t = s;
                t.push_back(i);
                next.push_back(t);
            }
        }
        out.insert(out.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return out;
}

struct OracleStats {
    int valid_checked = 0;
    int invalid_checked = 0;
    int borderline = 0;
    int mismatches = 0;
    double worst_rp_error = 0.0;
};

// Compares trace() against the brute-force search for every sequence of up to
// two bounces.
inline OracleStats compare_with_trace(const RandomScene& rs) {
    OracleStats st;
    const auto scene = rs.scene();
    const auto traced = matid::trace(scene, rs.tx, rs.rx, 2);
    for (const auto& seq_idx : facet_sequences(rs.rects.size(), 2)) {
        std::vector<const Rect*> seq;
        std::string key;
        for (auto i : seq_idx) {
            seq.push_back(&rs.rects[i]);
            key += (key.empty() ? "" : ">") + rs.rects[i].id;
        }
        const auto res = classify(rs.rects, seq, rs.tx, rs.rx);
        const matid::Trajectory* match = nullptr;
        int count = 0;
        for (const auto& t : traced) {
            if (t.path_key() == key) {
                match = &t;
                ++count;
            }
        }
        if (res.verdict == Verdict::Borderline) {
            ++st.borderline;
            continue;
        }
        if (res.verdict == Verdict::Invalid) {
            ++st.invalid_checked;
            if (count != 0) ++st.mismatches;
            continue;
        }
        ++st.valid_checked;
        if (count != 1) {
            ++st.mismatches;
            continue;
        }
        for (std::size_t h = 0; h < seq.size(); ++h) {
            const double err = matid::distance(match->hops[h].rp, res.path.rps[h]);
            st.worst_rp_error = std::max(st.worst_rp_error, err);
            if (err > 1e-3) ++st.mismatches;
        }
    }
    return st;
}

// Reversing tx and rx gives the same set of paths with hops reversed.
inline bool reciprocal(const matid::Scene& scene, const Vec3& a, const Vec3& b, int k, double tol = 1e-9) {
    auto fwd = matid::trace(scene, a, b, k);
    auto bwd = matid::trace(scene, b, a, k);
    if (fwd.size() != bwd.size()) return false;
    std::vector<bool> used(bwd.size(), false);
    for (const auto& f : fwd) {
        bool found = false;
        for (std::size_t j = 0; j < bwd.size() && !found; ++j) {
            const auto& g = bwd[j];
            if (used[j] || g.hops.size() != f.hops.size()) continue;
            if (std::abs(g.total_length - f.total_length) > tol) continue;
            bool same = true;
            const std::size_t n = f.hops.size();
            for (std::size_t h = 0; h < n && same; ++h) {
                same = f.hops[h].facet_id == g.hops[n - 1 - h].facet_id &&
                       matid::distance(f.hops[h].rp, g.hops[n - 1 - h].rp) < 1e-6;
            }
            if (same) {
                used[j] = true;
                found = true;
            }
        }
        if (!found) return false;
    }
    return true;
}

// Re-derives every outgoing leg from the mirror law and checks it lands on the next point.
inline double specular_replay_error(const matid::Scene& scene, const matid::Trajectory& t) {
    double worst = 0.0;
    Vec3 prev = t.tx;
    for (std::size_t h = 0; h < t.hops.size(); ++h) {
        const Vec3 rp = t.hops[h].rp;
        const Vec3 next = h + 1 < t.hops.size() ? t.hops[h + 1].rp : t.rx;
        const Vec3 n = scene.plane(scene.facet_index(t.hops[h].facet_id)).normal;
        const Vec3 d_in = matid::normalized(rp - prev);
        const Vec3 d_out = d_in - n * (2.0 * matid::dot(d_in, n));
        const double along = matid::dot(next - rp, d_out);
        const Vec3 predicted = rp + d_out * along;
        worst = std::max(worst, along > 0.0 ? matid::distance(predicted, next) : matid::distance(rp, next) + 1.0);
        prev = rp;
    }
    return worst;
}

}  // namespace oracle
