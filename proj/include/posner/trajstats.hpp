#pragma once

#include "posner/geom.hpp"
#include "posner/symdetect.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace posner::trajstats {

/// Maximal run of consecutive frames sharing one point-group label.
/// Frame indices refer to the retained (post-skip) trajectory.
struct TimelineSegment {
    std::size_t start_frame = 0;
    std::size_t end_frame = 0;  // inclusive
    std::string group_label;
    double duration_fs = 0.0;   // (end - start + 1) * timestep
};

struct PersistenceEntry {
    double max_duration_fs = 0.0;
    double mean_duration_fs = 0.0;
    std::size_t segment_count = 0;
};

struct EnergyStats {
    double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0, spread = 0.0;  // eV
    std::vector<std::size_t> histogram;
    double bin_width = 0.0;
};

struct FormationCheck {
    double delta_ev = 0.0;
    bool more_stable = false;
};

struct PcaResult {
    geom::Structure mean;
    std::vector<double> eigenvalues;            // descending, A^2
    std::vector<Eigen::VectorXd> eigenvectors;  // orthonormal, 3N each
    std::vector<double> explained_fraction;
};

struct ClusterResult {
    std::size_t k = 1;
    std::vector<std::size_t> assignments;
    std::vector<geom::Structure> centroids;
    double inertia = 0.0;     // within-cluster sum of squares, A^2
    double silhouette = 0.0;  // mean score over the (sub)sample
};

std::vector<TimelineSegment> symmetry_timeline(
    const geom::Trajectory& traj, double tol = 0.1, std::size_t skip_frames = 500,
    const symdetect::DetectOptions& opts = {});

/// Frame-weighted percentage per label; sums to 100.
std::map<std::string, double> occurrence_histogram(
    const std::vector<TimelineSegment>& timeline);

std::map<std::string, PersistenceEntry> persistence_stats(
    const std::vector<TimelineSegment>& timeline);

EnergyStats energy_stats(const geom::Trajectory& traj, std::size_t bins = 50);

FormationCheck formation_check(double e_cluster_ev, double e_unit_ev,
                               std::size_t n_units);

PcaResult pca(const geom::Trajectory& aligned, bool mass_weighted = false);

struct ModeDisplacements {
    std::vector<geom::Vec3> displacements;
    double max_magnitude = 0.0;
};

/// Per-atom displacement vectors for one eigenmode. Amplitude defaults
/// to sqrt(eigenvalue) when negative.
ModeDisplacements eigenmode_displacements(const PcaResult& p, std::size_t mode,
                                          double amplitude = -1.0);

ClusterResult kmeans(const geom::Trajectory& aligned, std::size_t k,
                     std::uint64_t seed);

/// k in [k_min, k_max] maximizing mean silhouette; ties go to smaller k.
std::size_t select_k(const geom::Trajectory& aligned, std::size_t k_min,
                     std::size_t k_max, std::uint64_t seed);

}  // namespace posner::trajstats
