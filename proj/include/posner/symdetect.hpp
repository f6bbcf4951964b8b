#pragma once

#include "posner/geom.hpp"

#include <vector>

namespace posner::symdetect {

enum class OpKind { Identity, Inversion, ProperRotation, ImproperRotation, Mirror };

/// One symmetry operation about the molecular centroid. `axis` is the
/// rotation axis for Cn/Sn and the plane normal for mirrors; unused for
/// identity and inversion. `score` is the normalized maximum matched
/// displacement (max displacement / molecular radius).
struct SymmetryElement {
    OpKind kind = OpKind::Identity;
    geom::Vec3 axis = geom::Vec3::UnitZ();
    int order = 1;  // n for Cn / Sn
    double score = 0.0;

    geom::Mat3 matrix() const;
    std::string name() const;  // "E", "i", "C3", "S6", "sigma"
};

constexpr int kInfiniteOrder = -1;

struct PointGroup {
    std::string schoenflies;
    int order = 1;  // kInfiniteOrder for Kh, Cinfv, Dinfh
    std::vector<SymmetryElement> elements;
};

struct DetectOptions {
    int n_max = 8;                   // highest proper rotation order tested
    double axis_merge_deg = 1.0;     // axes closer than this are one axis
    double linear_threshold = 1e-4;  // min/max inertia moment ratio
};

/// Max distance of any atom from the centroid.
double molecular_radius(const geom::Structure& s);

/// Normalized max displacement of the best same-species bijection
/// between s and its image under e. +inf if no bijection exists.
/// Throws for zero molecular radius.
double score_element(const geom::Structure& s, const SymmetryElement& e);

/// All elements scoring <= tol, deduplicated by kind/order/axis.
std::vector<SymmetryElement> find_elements(const geom::Structure& s, double tol,
                                           const DetectOptions& opts = {});

PointGroup detect_point_group(const geom::Structure& s, double tol = 0.1,
                              const DetectOptions& opts = {});

/// Group order for a Schoenflies label; kInfiniteOrder for infinite groups.
int group_order(const std::string& schoenflies);

}  // namespace posner::symdetect
