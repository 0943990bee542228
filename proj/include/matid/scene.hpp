// SPDX-License-Identifier: Apache-2.0
//
// Polygonal 3D scenes and image-method specular ray tracing.
//
#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "matid/geometry.hpp"

namespace matid {

inline constexpr std::string_view kUnknownMaterial = "unknown";

/// Convex planar polygon; vertices counter-clockwise around the outward normal.
struct Facet {
    std::string id;
    std::vector<Vec3> vertices;
    std::string material{kUnknownMaterial};
    double thickness = 0.0;  // m
};

class Scene {
public:
    Scene() = default;

    /// Throws ValidationError naming the first offending facet.
    explicit Scene(std::vector<Facet> facets, std::optional<Aabb> bounds = std::nullopt,
                   std::vector<Vec3> transmitters = {}, std::vector<Vec3> receivers = {});

    const std::vector<Facet>& facets() const { return facets_; }
    const Facet& facet(std::size_t i) const { return facets_[i]; }
    const Plane& plane(std::size_t i) const { return planes_[i]; }
    std::size_t size() const { return facets_.size(); }

    /// Index of the facet with this id; throws InvalidArgument if absent.
    std::size_t facet_index(std::string_view id) const;
    const Facet& facet(std::string_view id) const { return facets_[facet_index(id)]; }

    /// Explicit bounds when given, otherwise the bounding box of all facets.
    const Aabb& bounds() const { return bounds_; }
    bool has_explicit_bounds() const { return explicit_bounds_; }

    /// Optional TX/RX placements carried by the scene file.
    const std::vector<Vec3>& transmitters() const { return transmitters_; }
    const std::vector<Vec3>& receivers() const { return receivers_; }

    /// p is assumed to lie on the facet's plane; edges count as inside.
    bool inside_polygon(std::size_t facet, const Vec3& p) const;

private:
    std::vector<Facet> facets_;
    std::vector<Plane> planes_;
    Aabb bounds_;
    bool explicit_bounds_ = false;
    std::vector<Vec3> transmitters_;
    std::vector<Vec3> receivers_;
};

/// JSON: {"units": "m", "facets": [{"id", "vertices": [[x,y,z],...], "material", "thickness_m"}],
///        "bounds": {"min": [..], "max": [..]}, "transmitters": [[..]], "receivers": [[..]]}
/// The last three keys are optional.
Scene parse_scene_json(std::string_view text, const std::string& source = "<scene>");
Scene load_scene(const std::string& path);
std::string scene_to_json(const Scene& scene);

struct Hop {
    Vec3 rp;
    std::string facet_id;
    double theta_i = 0.0;  // rad
};

struct Trajectory {
    Vec3 tx;
    Vec3 rx;
    std::vector<Hop> hops;
    std::vector<double> segment_lengths;  // hops.size() + 1 legs
    double total_length = 0.0;

    std::size_t bounces() const { return hops.size(); }
    /// Facet ids joined by '>', e.g. "floor>ceiling".
    std::string path_key() const;
};

inline constexpr int kMaxBounces = 4;
inline constexpr double kOcclusionEps = 1e-6;  // m

/// All specular trajectories with 1..max_bounces reflections, sorted by
/// (bounce count, total length, facet sequence). Consecutive bounces on the
/// same facet are not considered.
std::vector<Trajectory> trace(const Scene& scene, const Vec3& tx, const Vec3& rx, int max_bounces);

/// Angle between the reversed incoming direction and the surface normal, in [0, pi/2).
/// Either side of the surface may be hit. Throws InvalidArgument for non-unit inputs.
double incident_angle(const Vec3& direction, const Vec3& normal);

enum class SettlingStatus { Ok, TooThin, Indeterminate };

struct SettlingCheck {
    std::string facet_id;
    SettlingStatus status = SettlingStatus::Indeterminate;
    double thickness_m = 0.0;
    double required_m = 0.0;  // 0 when indeterminate
};

/// settling_by_material maps material name to settling thickness (m) at the
/// frequency of interest. Facets whose material is unknown or missing from
/// the map are reported as indeterminate.
std::vector<SettlingCheck> check_settling(const Scene& scene,
                                          const std::map<std::string, double, std::less<>>& settling_by_material);

std::string_view to_string(SettlingStatus s);

}  // namespace matid
