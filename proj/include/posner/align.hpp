#pragma once

#include "posner/geom.hpp"

namespace posner::align {

struct AlignOptions {
    bool mass_weighted = false;
};

/// Optimal proper rigid transform taking `mobile` onto `reference`
/// (least-squares, det +1 enforced).
geom::RigidTransform kabsch(const geom::Structure& mobile,
                            const geom::Structure& reference,
                            const AlignOptions& opts = {});

geom::Trajectory align_trajectory(const geom::Trajectory& traj,
                                  const geom::Structure& reference,
                                  const AlignOptions& opts = {});

/// Per-atom mean over frames after dropping the first
/// ceil(skip_fraction * F) frames. Assumes the caller aligned the
/// trajectory first.
geom::Structure time_average(const geom::Trajectory& traj,
                             double skip_fraction = 0.05);

}  // namespace posner::align
