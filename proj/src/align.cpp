#include "posner/align.hpp"

#include <cmath>

namespace posner::align {

using geom::Mat3;
using geom::RigidTransform;
using geom::Structure;
using geom::Trajectory;
using geom::Vec3;

RigidTransform kabsch(const Structure& mobile, const Structure& reference,
                      const AlignOptions& opts) {
    if (!mobile.same_species_sequence(reference)) {
        throw std::invalid_argument(
            "kabsch: structures differ in atom count or species");
    }
    const std::size_t n = mobile.size();
    std::vector<double> w(n, 1.0);
    double wsum = static_cast<double>(n);
    if (opts.mass_weighted) {
        wsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = mobile.atoms[i].element.mass;
            wsum += w[i];
        }
    }

    Vec3 cm = Vec3::Zero(), cr = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        cm += w[i] * mobile.atoms[i].position;
        cr += w[i] * reference.atoms[i].position;
    }
    cm /= wsum;
    cr /= wsum;

    Mat3 cross = Mat3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        cross += w[i] * (mobile.atoms[i].position - cm) *
                 (reference.atoms[i].position - cr).transpose();
    }

    Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    // Mirror branch: flip the smallest singular direction to keep det +1.
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) {
        d(2, 2) = -1.0;
    }
    RigidTransform t;
    t.rotation = svd.matrixV() * d * svd.matrixU().transpose();
    t.translation = cr - t.rotation * cm;
    return t;
}

Trajectory align_trajectory(const Trajectory& traj, const Structure& reference,
                            const AlignOptions& opts) {
    traj.validate();
    Trajectory out = traj;
    for (auto& frame : out.frames) {
        frame = geom::apply_transform(frame, kabsch(frame, reference, opts));
    }
    return out;
}

Structure time_average(const Trajectory& traj, double skip_fraction) {
    traj.validate();
    if (skip_fraction < 0.0 || skip_fraction >= 1.0) {
        throw std::invalid_argument("skip_fraction must be in [0, 1)");
    }
    const std::size_t f0 = static_cast<std::size_t>(
        std::ceil(skip_fraction * static_cast<double>(traj.n_frames())));
    if (f0 >= traj.n_frames()) {
        throw std::invalid_argument("time_average: all frames skipped");
    }

    Structure avg = traj.frames[f0];
    avg.energy.reset();
    avg.label = "time-average";
    const std::size_t kept = traj.n_frames() - f0;
    for (std::size_t i = 0; i < avg.size(); ++i) {
        // Pairwise-stable Kahan sum so parallel callers and serial callers
        // agree on the result.
        Vec3 sum = Vec3::Zero(), comp = Vec3::Zero();
        for (std::size_t f = f0; f < traj.n_frames(); ++f) {
            const Vec3 y = traj.frames[f].atoms[i].position - comp;
            const Vec3 t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        avg.atoms[i].position = sum / static_cast<double>(kept);
    }
    return avg;
}

}  // namespace posner::align
