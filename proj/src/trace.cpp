// SPDX-License-Identifier: Apache-2.0
//
// Image-method tracer. For a facet sequence f1..fk the transmitter is mirrored
// successively across each facet plane; the reflection points are then found
// back to front by intersecting the line from each image to the next known
// point with the corresponding plane.
//
#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "matid/error.hpp"
#include "matid/scene.hpp"

namespace matid {

namespace {

constexpr double kParallelTol = 1e-12;

bool segment_blocked(const Scene& scene, const Vec3& a, const Vec3& b) {
    const double length = distance(a, b);
    for (std::size_t g = 0; g < scene.size(); ++g) {
        const Plane& pl = scene.plane(g);
        const double da = pl.signed_distance(a);
        const double db = pl.signed_distance(b);
        if ((da > kOcclusionEps && db > kOcclusionEps) || (da < -kOcclusionEps && db < -kOcclusionEps)) continue;
        const double denom = da - db;
        if (std::abs(denom) < kParallelTol) continue;
        const double t = da / denom;
        if (t * length <= kOcclusionEps || (1.0 - t) * length <= kOcclusionEps) continue;
        if (scene.inside_polygon(g, a + (b - a) * t)) return true;
    }
    return false;
}

struct Tracer {
    const Scene& scene;
    Vec3 tx;
    Vec3 rx;
    int max_bounces;
    std::vector<std::size_t> sequence;
    std::vector<Vec3> images;  // images[j] = tx mirrored across sequence[0..j]
    std::vector<Trajectory> out;

    void descend() {
        const Vec3 source = images.empty() ? tx : images.back();
        for (std::size_t f = 0; f < scene.size(); ++f) {
            if (!sequence.empty() && sequence.back() == f) continue;
            const Plane& pl = scene.plane(f);
            if (std::abs(pl.signed_distance(source)) < kParallelTol) continue;
            sequence.push_back(f);
            images.push_back(pl.mirror(source));
            try_path();
            if (static_cast<int>(sequence.size()) < max_bounces) descend();
            sequence.pop_back();
            images.pop_back();
        }
    }

    void try_path() {
        const std::size_t k = sequence.size();
        std::vector<Vec3> points(k);
        Vec3 target = rx;
        for (std::size_t j = k; j-- > 0;) {
            const Plane& pl = scene.plane(sequence[j]);
            const Vec3& image = images[j];
            const double di = pl.signed_distance(image);
            const double dt = pl.signed_distance(target);
            // Image and the next point must straddle the plane.
            if (!((di > 0.0 && dt < 0.0) || (di < 0.0 && dt > 0.0))) return;
            const double denom = di - dt;
            if (std::abs(denom) < kParallelTol) return;
            const double t = di / denom;
            const Vec3 p = image + (target - image) * t;
            if (!scene.inside_polygon(sequence[j], p)) return;
            points[j] = p;
            target = p;
        }

        Trajectory traj;
        traj.tx = tx;
        traj.rx = rx;
        Vec3 prev = tx;
        for (std::size_t j = 0; j < k; ++j) {
            const double leg = distance(prev, points[j]);
            if (leg <= kOcclusionEps) return;
            traj.segment_lengths.push_back(leg);
            prev = points[j];
        }
        const double last = distance(prev, rx);
        if (last <= kOcclusionEps) return;
        traj.segment_lengths.push_back(last);

        prev = tx;
        for (std::size_t j = 0; j < k; ++j) {
            if (segment_blocked(scene, prev, points[j])) return;
            prev = points[j];
        }
        if (segment_blocked(scene, prev, rx)) return;

        prev = tx;
        for (std::size_t j = 0; j < k; ++j) {
            const Vec3 dir = normalized(points[j] - prev);
            traj.hops.push_back({points[j], scene.facet(sequence[j]).id,
                                 incident_angle(dir, scene.plane(sequence[j]).normal)});
            prev = points[j];
        }
        traj.total_length = 0.0;
        for (double s : traj.segment_lengths) traj.total_length += s;
        out.push_back(std::move(traj));
    }
};

}  // namespace

std::string Trajectory::path_key() const {
    std::string key;
    for (const auto& h : hops) {
        if (!key.empty()) key += '>';
        key += h.facet_id;
    }
    return key;
}

double incident_angle(const Vec3& direction, const Vec3& normal) {
    if (std::abs(norm(direction) - 1.0) > 1e-9 || std::abs(norm(normal) - 1.0) > 1e-9) {
        throw InvalidArgument("incident_angle expects unit vectors");
    }
    const double cosine = std::min(1.0, std::abs(dot(direction, normal)));
    const double theta = std::acos(cosine);
    const double below_grazing = std::nextafter(kHalfPi, 0.0);
    return std::min(theta, below_grazing);
}

std::vector<Trajectory> trace(const Scene& scene, const Vec3& tx, const Vec3& rx, int max_bounces) {
    if (max_bounces < 1 || max_bounces > kMaxBounces) {
        throw InvalidArgument("max_bounces must lie in [1, " + std::to_string(kMaxBounces) + "]");
    }
    if (distance(tx, rx) == 0.0) throw InvalidArgument("tx and rx coincide");
    if (scene.has_explicit_bounds() && (!scene.bounds().contains(tx) || !scene.bounds().contains(rx))) {
        throw InvalidArgument("tx or rx outside scene bounds");
    }

    Tracer tracer{scene, tx, rx, max_bounces, {}, {}, {}};
    tracer.descend();

    auto& out = tracer.out;
    std::sort(out.begin(), out.end(), [](const Trajectory& a, const Trajectory& b) {
        if (a.bounces() != b.bounces()) return a.bounces() < b.bounces();
        if (a.total_length != b.total_length) return a.total_length < b.total_length;
        return a.path_key() < b.path_key();
    });
    return out;
}

}  // namespace matid
