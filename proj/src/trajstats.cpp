#include "posner/trajstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace posner::trajstats {

using geom::Structure;
using geom::Trajectory;
using geom::Vec3;

std::vector<TimelineSegment> symmetry_timeline(
    const Trajectory& traj, double tol, std::size_t skip_frames,
    const symdetect::DetectOptions& opts) {
    traj.validate();
    if (skip_frames >= traj.n_frames()) {
        throw std::invalid_argument("symmetry_timeline: no frames left after skip");
    }

    std::vector<TimelineSegment> out;
    for (std::size_t f = skip_frames; f < traj.n_frames(); ++f) {
        const auto group = symdetect::detect_point_group(traj.frames[f], tol, opts);
        const std::size_t retained = f - skip_frames;
        if (!out.empty() && out.back().group_label == group.schoenflies) {
            out.back().end_frame = retained;
        } else {
            out.push_back({retained, retained, group.schoenflies, 0.0});
        }
    }
    for (auto& seg : out) {
        seg.duration_fs =
            static_cast<double>(seg.end_frame - seg.start_frame + 1) *
            traj.timestep_fs;
    }
    return out;
}

std::map<std::string, double> occurrence_histogram(
    const std::vector<TimelineSegment>& timeline) {
    if (timeline.empty()) throw std::invalid_argument("empty timeline");
    std::map<std::string, double> frames;
    double total = 0.0;
    for (const auto& seg : timeline) {
        const double n = static_cast<double>(seg.end_frame - seg.start_frame + 1);
        frames[seg.group_label] += n;
        total += n;
    }
    for (auto& [label, count] : frames) count = 100.0 * count / total;
    return frames;
}

std::map<std::string, PersistenceEntry> persistence_stats(
    const std::vector<TimelineSegment>& timeline) {
    if (timeline.empty()) throw std::invalid_argument("empty timeline");
    std::map<std::string, PersistenceEntry> out;
    for (const auto& seg : timeline) {
        auto& entry = out[seg.group_label];
        entry.max_duration_fs = std::max(entry.max_duration_fs, seg.duration_fs);
        entry.mean_duration_fs += seg.duration_fs;
        entry.segment_count += 1;
    }
    for (auto& [label, entry] : out) {
        entry.mean_duration_fs /= static_cast<double>(entry.segment_count);
    }
    return out;
}

EnergyStats energy_stats(const Trajectory& traj, std::size_t bins) {
    traj.validate();
    if (bins == 0) throw std::invalid_argument("bins must be positive");
    std::vector<double> e;
    e.reserve(traj.n_frames());
    for (std::size_t f = 0; f < traj.n_frames(); ++f) {
        if (!traj.frames[f].energy) {
            throw std::invalid_argument("frame " + std::to_string(f) +
                                        " carries no energy");
        }
        e.push_back(*traj.frames[f].energy);
    }

    EnergyStats out;
    out.min = *std::min_element(e.begin(), e.end());
    out.max = *std::max_element(e.begin(), e.end());
    out.spread = out.max - out.min;
    out.mean = std::accumulate(e.begin(), e.end(), 0.0) / e.size();
    double var = 0.0;
    for (double x : e) var += (x - out.mean) * (x - out.mean);
    out.stddev = e.size() > 1 ? std::sqrt(var / (e.size() - 1)) : 0.0;

    out.histogram.assign(bins, 0);
    out.bin_width = out.spread > 0.0 ? out.spread / bins : 1.0;
    for (double x : e) {
        auto b = static_cast<std::size_t>((x - out.min) / out.bin_width);
        out.histogram[std::min(b, bins - 1)] += 1;
    }
    return out;
}

FormationCheck formation_check(double e_cluster_ev, double e_unit_ev,
                               std::size_t n_units) {
    if (n_units < 1) throw std::invalid_argument("n_units must be >= 1");
    FormationCheck out;
    out.delta_ev = e_cluster_ev - static_cast<double>(n_units) * e_unit_ev;
    out.more_stable = out.delta_ev < 0.0;
    return out;
}

namespace {

Eigen::MatrixXd flatten(const Trajectory& traj, bool mass_weighted) {
    const std::size_t f_count = traj.n_frames();
    const std::size_t n = traj.frames[0].size();
    Eigen::MatrixXd x(f_count, 3 * n);
    for (std::size_t f = 0; f < f_count; ++f) {
        for (std::size_t i = 0; i < n; ++i) {
            const double w =
                mass_weighted ? std::sqrt(traj.frames[f].atoms[i].element.mass)
                              : 1.0;
            x.row(f).segment<3>(3 * i) =
                w * traj.frames[f].atoms[i].position.transpose();
        }
    }
    return x;
}

}  // namespace

PcaResult pca(const Trajectory& aligned, bool mass_weighted) {
    aligned.validate();
    if (aligned.n_frames() < 2) {
        throw std::invalid_argument("pca needs at least 2 frames");
    }
    Eigen::MatrixXd x = flatten(aligned, mass_weighted);
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov =
        x.transpose() * x / static_cast<double>(aligned.n_frames() - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const auto dim = cov.rows();

    PcaResult out;
    out.mean = aligned.frames[0];
    out.mean.energy.reset();
    out.mean.label = "pca-mean";
    for (Eigen::Index i = 0; i < dim / 3; ++i) {
        out.mean.atoms[i].position = mean.segment<3>(3 * i).transpose();
        if (mass_weighted) {
            out.mean.atoms[i].position /=
                std::sqrt(out.mean.atoms[i].element.mass);
        }
    }

    double total = 0.0;
    for (Eigen::Index i = dim - 1; i >= 0; --i) {
        double lambda = solver.eigenvalues()[i];
        if (lambda < 0.0) lambda = 0.0;  // numerical negatives clipped
        Eigen::VectorXd v = solver.eigenvectors().col(i);
        // Reproducible sign: largest-magnitude component positive.
        Eigen::Index lead = 0;
        v.cwiseAbs().maxCoeff(&lead);
        if (v[lead] < 0.0) v = -v;
        out.eigenvalues.push_back(lambda);
        out.eigenvectors.push_back(std::move(v));
        total += lambda;
    }
    for (double lambda : out.eigenvalues) {
        out.explained_fraction.push_back(total > 0.0 ? lambda / total : 0.0);
    }
    return out;
}

ModeDisplacements eigenmode_displacements(const PcaResult& p, std::size_t mode,
                                          double amplitude) {
    if (mode >= p.eigenvectors.size()) {
        throw std::out_of_range("eigenmode index out of range");
    }
    if (amplitude < 0.0) amplitude = std::sqrt(p.eigenvalues[mode]);
    const auto& v = p.eigenvectors[mode];
    ModeDisplacements out;
    for (Eigen::Index i = 0; i < v.size() / 3; ++i) {
        const Vec3 d = amplitude * v.segment<3>(3 * i);
        out.max_magnitude = std::max(out.max_magnitude, d.norm());
        out.displacements.push_back(d);
    }
    return out;
}

namespace {

double mean_silhouette(const Eigen::MatrixXd& x,
                       const std::vector<std::size_t>& assign, std::size_t k,
                       std::uint64_t seed) {
    if (k < 2) return 0.0;
    const std::size_t f_count = x.rows();
    std::vector<std::size_t> sample(f_count);
    std::iota(sample.begin(), sample.end(), 0);
    constexpr std::size_t kMaxSample = 2000;
    if (f_count > kMaxSample) {
        std::mt19937_64 rng(seed ^ 0x51170e77eULL);
        std::shuffle(sample.begin(), sample.end(), rng);
        sample.resize(kMaxSample);
        std::sort(sample.begin(), sample.end());
    }

    const std::size_t m = sample.size();
    double acc = 0.0;
    std::vector<double> cluster_dist(k);
    std::vector<std::size_t> cluster_count(k);
    for (std::size_t a = 0; a < m; ++a) {
        std::fill(cluster_dist.begin(), cluster_dist.end(), 0.0);
        std::fill(cluster_count.begin(), cluster_count.end(), 0);
        for (std::size_t b = 0; b < m; ++b) {
            if (a == b) continue;
            const double d = (x.row(sample[a]) - x.row(sample[b])).norm();
            cluster_dist[assign[sample[b]]] += d;
            cluster_count[assign[sample[b]]] += 1;
        }
        const std::size_t own = assign[sample[a]];
        if (cluster_count[own] == 0) continue;  // singleton: score 0
        const double a_i = cluster_dist[own] / cluster_count[own];
        double b_i = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c == own || cluster_count[c] == 0) continue;
            b_i = std::min(b_i, cluster_dist[c] / cluster_count[c]);
        }
        if (!std::isfinite(b_i)) continue;
        acc += (b_i - a_i) / std::max(a_i, b_i);
    }
    return acc / static_cast<double>(m);
}

}  // namespace

ClusterResult kmeans(const Trajectory& aligned, std::size_t k,
                     std::uint64_t seed) {
    aligned.validate();
    const std::size_t f_count = aligned.n_frames();
    if (k < 1 || k > f_count) {
        throw std::invalid_argument("kmeans: k must be in [1, n_frames]");
    }
    const Eigen::MatrixXd x = flatten(aligned, false);
    const Eigen::Index dim = x.cols();

    // k-means++ seeding.
    std::mt19937_64 rng(seed);
    std::vector<Eigen::VectorXd> centers;
    {
        std::uniform_int_distribution<std::size_t> first(0, f_count - 1);
        centers.push_back(x.row(first(rng)).transpose());
        Eigen::VectorXd d2 = Eigen::VectorXd::Constant(
            f_count, std::numeric_limits<double>::infinity());
        while (centers.size() < k) {
            for (std::size_t f = 0; f < f_count; ++f) {
                d2[f] = std::min(
                    d2[f], (x.row(f).transpose() - centers.back()).squaredNorm());
            }
            const double total = d2.sum();
            if (total <= 0.0) {
                // all remaining points coincide with a chosen center
                centers.push_back(x.row(0).transpose());
                continue;
            }
            std::uniform_real_distribution<double> u(0.0, total);
            double r = u(rng);
            std::size_t pick = f_count - 1;
            for (std::size_t f = 0; f < f_count; ++f) {
                r -= d2[f];
                if (r <= 0.0) { pick = f; break; }
            }
            centers.push_back(x.row(pick).transpose());
        }
    }

    std::vector<std::size_t> assign(f_count, 0);
    double inertia = 0.0;
    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        inertia = 0.0;
        for (std::size_t f = 0; f < f_count; ++f) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_c = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double d = (x.row(f).transpose() - centers[c]).squaredNorm();
                if (d < best) { best = d; best_c = c; }
            }
            if (assign[f] != best_c) { assign[f] = best_c; changed = true; }
            inertia += best;
        }
        if (!changed && iter > 0) break;

        std::vector<Eigen::VectorXd> sums(k, Eigen::VectorXd::Zero(dim));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t f = 0; f < f_count; ++f) {
            sums[assign[f]] += x.row(f).transpose();
            counts[assign[f]] += 1;
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) centers[c] = sums[c] / static_cast<double>(counts[c]);
        }
    }

    ClusterResult out;
    out.k = k;
    out.assignments = assign;
    out.inertia = inertia;
    for (std::size_t c = 0; c < k; ++c) {
        Structure cs = aligned.frames[0];
        cs.energy.reset();
        cs.label = "cluster-" + std::to_string(c);
        for (Eigen::Index i = 0; i < dim / 3; ++i) {
            cs.atoms[i].position = centers[c].segment<3>(3 * i);
        }
        out.centroids.push_back(std::move(cs));
    }
    out.silhouette = mean_silhouette(x, assign, k, seed);
    return out;
}

std::size_t select_k(const Trajectory& aligned, std::size_t k_min,
                     std::size_t k_max, std::uint64_t seed) {
    if (k_min < 2 || k_max < k_min || k_max > aligned.n_frames()) {
        throw std::invalid_argument("select_k: invalid k range");
    }
    std::size_t best_k = k_min;
    double best_s = -2.0;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        const double s = kmeans(aligned, k, seed).silhouette;
        if (s > best_s + 1e-12) {
            best_s = s;
            best_k = k;
        }
    }
    return best_k;
}

}  // namespace posner::trajstats
