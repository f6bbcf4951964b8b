#include "posner/symdetect.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>

namespace posner::symdetect {

using geom::Mat3;
using geom::Structure;
using geom::Vec3;

geom::Mat3 SymmetryElement::matrix() const {
    switch (kind) {
        case OpKind::Identity:
            return Mat3::Identity();
        case OpKind::Inversion:
            return -Mat3::Identity();
        case OpKind::ProperRotation:
            return Eigen::AngleAxisd(2.0 * std::numbers::pi / order, axis)
                .toRotationMatrix();
        case OpKind::ImproperRotation: {
            const Mat3 rot =
                Eigen::AngleAxisd(2.0 * std::numbers::pi / order, axis)
                    .toRotationMatrix();
            const Mat3 reflect = Mat3::Identity() - 2.0 * axis * axis.transpose();
            return reflect * rot;
        }
        case OpKind::Mirror:
            return Mat3::Identity() - 2.0 * axis * axis.transpose();
    }
    return Mat3::Identity();
}

std::string SymmetryElement::name() const {
    switch (kind) {
        case OpKind::Identity: return "E";
        case OpKind::Inversion: return "i";
        case OpKind::ProperRotation: return "C" + std::to_string(order);
        case OpKind::ImproperRotation: return "S" + std::to_string(order);
        case OpKind::Mirror: return "sigma";
    }
    return "?";
}

double molecular_radius(const Structure& s) {
    const Vec3 c = geom::centroid(s);
    double r = 0.0;
    for (const auto& a : s.atoms) r = std::max(r, (a.position - c).norm());
    return r;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Centroid-centered positions grouped by species, plus the scoring radius.
struct Scorer {
    std::vector<std::vector<Vec3>> blocks;
    double radius = 0.0;

    explicit Scorer(const Structure& s) {
        const Vec3 c = geom::centroid(s);
        std::map<std::string, std::size_t> index;
        for (const auto& a : s.atoms) {
            auto [it, fresh] = index.try_emplace(a.element.symbol, blocks.size());
            if (fresh) blocks.emplace_back();
            const Vec3 r = a.position - c;
            blocks[it->second].push_back(r);
            radius = std::max(radius, r.norm());
        }
    }

    // Bottleneck assignment within one species: smallest threshold t such
    // that a perfect matching exists using edges with distance <= t.
    static double bottleneck(const std::vector<Vec3>& img,
                             const std::vector<Vec3>& ref, double reject_above) {
        const int n = static_cast<int>(img.size());
        std::vector<double> d(n * n);
        double lower = 0.0;
        for (int i = 0; i < n; ++i) {
            double row_min = kInf;
            for (int j = 0; j < n; ++j) {
                d[i * n + j] = (img[i] - ref[j]).norm();
                row_min = std::min(row_min, d[i * n + j]);
            }
            lower = std::max(lower, row_min);
        }
        if (lower > reject_above) return kInf;

        std::vector<double> sorted(d);
        std::sort(sorted.begin(), sorted.end());
        auto begin = std::lower_bound(sorted.begin(), sorted.end(), lower);
        auto end = std::upper_bound(sorted.begin(), sorted.end(), reject_above);
        if (begin == end) return kInf;

        std::vector<int> match_of_ref(n);
        std::vector<char> visited(n);
        auto feasible = [&](double thr) {
            std::fill(match_of_ref.begin(), match_of_ref.end(), -1);
            std::function<bool(int)> augment = [&](int i) {
                for (int j = 0; j < n; ++j) {
                    if (visited[j] || d[i * n + j] > thr) continue;
                    visited[j] = 1;
                    if (match_of_ref[j] < 0 || augment(match_of_ref[j])) {
                        match_of_ref[j] = i;
                        return true;
                    }
                }
                return false;
            };
            for (int i = 0; i < n; ++i) {
                std::fill(visited.begin(), visited.end(), 0);
                if (!augment(i)) return false;
            }
            return true;
        };

        // Binary search over the candidate thresholds.
        long lo = begin - sorted.begin();
        long hi = end - sorted.begin() - 1;
        if (!feasible(sorted[hi])) return kInf;
        while (lo < hi) {
            const long mid = (lo + hi) / 2;
            if (feasible(sorted[mid])) hi = mid; else lo = mid + 1;
        }
        return sorted[lo];
    }

    // Normalized score of operation M, or +inf if it exceeds max_score.
    double score(const Mat3& m, double max_score) const {
        const double cap = max_score * radius;
        double worst = 0.0;
        std::vector<Vec3> img;
        for (const auto& block : blocks) {
            img.resize(block.size());
            for (std::size_t i = 0; i < block.size(); ++i) img[i] = m * block[i];
            const double b = bottleneck(img, block, cap);
            if (!std::isfinite(b)) return kInf;
            worst = std::max(worst, b);
        }
        return worst / radius;
    }
};

Vec3 canonical_axis(Vec3 v) {
    v.normalize();
    int lead = 0;
    v.cwiseAbs().maxCoeff(&lead);
    if (v[lead] < 0.0) v = -v;
    return v;
}

bool axes_close(const Vec3& a, const Vec3& b, double cos_tol) {
    return std::abs(a.dot(b)) >= cos_tol;
}

std::vector<Vec3> candidate_axes(const Scorer& sc, const Structure& s) {
    std::vector<Vec3> axes;
    const double min_len = 1e-3 * sc.radius;

    try {
        const auto inertia = geom::inertia_tensor(s);
        for (int i = 0; i < 3; ++i) axes.push_back(canonical_axis(inertia.axes.col(i)));
    } catch (const std::invalid_argument&) {
        // fewer than 2 atoms; no inertia candidates
    }

    for (const auto& block : sc.blocks) {
        const std::size_t n = block.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (block[i].norm() > min_len) axes.push_back(canonical_axis(block[i]));
            for (std::size_t j = i + 1; j < n; ++j) {
                const Vec3 mid = 0.5 * (block[i] + block[j]);
                const Vec3 diff = block[i] - block[j];
                if (mid.norm() > min_len) axes.push_back(canonical_axis(mid));
                if (diff.norm() > min_len) axes.push_back(canonical_axis(diff));
                for (std::size_t k = j + 1; k < n; ++k) {
                    const Vec3 normal =
                        (block[j] - block[i]).cross(block[k] - block[i]);
                    if (normal.norm() > min_len * min_len) {
                        axes.push_back(canonical_axis(normal));
                    }
                }
            }
        }
    }

    // Drop near-exact duplicates; the 1 degree merge happens on accepted
    // elements where scores are known.
    const double cos_exact = std::cos(1e-4);
    std::vector<Vec3> unique;
    unique.reserve(axes.size());
    for (const auto& v : axes) {
        bool dup = false;
        for (const auto& u : unique) {
            if (axes_close(u, v, cos_exact)) { dup = true; break; }
        }
        if (!dup) unique.push_back(v);
    }
    return unique;
}

}  // namespace

double score_element(const Structure& s, const SymmetryElement& e) {
    Scorer sc(s);
    if (sc.radius < 1e-12) {
        throw std::invalid_argument("score_element: zero molecular radius");
    }
    return sc.score(e.matrix(), kInf);
}

namespace {

// Accepted operations wobble their axes by roughly asin(score), so the
// merge window widens with tolerance.
double merge_angle_deg(double tol, const DetectOptions& opts) {
    const double from_tol =
        std::asin(std::min(tol, 0.5)) * 180.0 / std::numbers::pi;
    return std::max(opts.axis_merge_deg, from_tol);
}

}  // namespace

std::vector<SymmetryElement> find_elements(const Structure& s, double tol,
                                           const DetectOptions& opts) {
    if (tol <= 0.0) throw std::invalid_argument("tolerance must be positive");
    Scorer sc(s);
    std::vector<SymmetryElement> accepted;
    accepted.push_back({OpKind::Identity, Vec3::UnitZ(), 1, 0.0});
    if (sc.radius < 1e-12) return accepted;

    auto try_op = [&](SymmetryElement e) {
        const double sscore = sc.score(e.matrix(), tol);
        if (sscore <= tol) {
            e.score = sscore;
            accepted.push_back(e);
        }
    };

    try_op({OpKind::Inversion, Vec3::UnitZ(), 2, 0.0});
    for (const Vec3& axis : candidate_axes(sc, s)) {
        for (int n = 2; n <= opts.n_max; ++n) {
            try_op({OpKind::ProperRotation, axis, n, 0.0});
        }
        for (int n = 3; n <= 2 * opts.n_max; ++n) {
            try_op({OpKind::ImproperRotation, axis, n, 0.0});
        }
        try_op({OpKind::Mirror, axis, 2, 0.0});
    }

    // Merge near-parallel axes of the same kind and order, lowest score wins.
    const double cos_merge =
        std::cos(merge_angle_deg(tol, opts) * std::numbers::pi / 180.0);
    std::sort(accepted.begin(), accepted.end(),
              [](const SymmetryElement& a, const SymmetryElement& b) {
                  return a.score < b.score;
              });
    std::vector<SymmetryElement> merged;
    for (const auto& e : accepted) {
        bool dup = false;
        if (e.kind == OpKind::ProperRotation || e.kind == OpKind::ImproperRotation ||
            e.kind == OpKind::Mirror) {
            for (const auto& kept : merged) {
                if (kept.kind == e.kind && kept.order == e.order &&
                    axes_close(kept.axis, e.axis, cos_merge)) {
                    dup = true;
                    break;
                }
            }
        }
        if (!dup) merged.push_back(e);
    }
    return merged;
}

namespace {

struct ProperAxis {
    Vec3 axis;
    int max_order = 1;
};

bool lex_less(const Vec3& a, const Vec3& b) {
    for (int i = 0; i < 3; ++i) {
        if (std::abs(a[i] - b[i]) > 1e-9) return a[i] < b[i];
    }
    return false;
}

PointGroup assemble(std::string label, int order,
                    std::vector<SymmetryElement> elems) {
    return {std::move(label), order, std::move(elems)};
}

bool has_axis(const SymmetryElement& e) {
    return e.kind == OpKind::ProperRotation || e.kind == OpKind::ImproperRotation ||
           e.kind == OpKind::Mirror;
}

// True when two accepted elements can coexist in one point group, up to
// the angular slack. A mirror and a rotation axis fit together only as
// sigma_h (normal parallel to the axis) or a plane containing the axis;
// high-order proper axes closer than the cubic-group minimum of ~54.7
// degrees cannot both be real.
bool consistent_pair(const SymmetryElement& a, const SymmetryElement& b,
                     double cos_slack) {
    if (!has_axis(a) || !has_axis(b)) return true;
    if (a.kind == OpKind::Mirror && b.kind == OpKind::Mirror) return true;
    const double d = std::abs(a.axis.dot(b.axis));
    const bool parallel = d >= cos_slack;
    const bool perpendicular = d <= std::sqrt(1.0 - cos_slack * cos_slack);
    if (a.kind == OpKind::ProperRotation && b.kind == OpKind::ProperRotation) {
        if (a.order < 3 || b.order < 3) return true;
        return parallel || d < std::cos(45.0 * std::numbers::pi / 180.0);
    }
    return parallel || perpendicular;
}

// Greedy best-score-first selection: an element geometrically
// incompatible with a meaningfully better-scoring one is treated as a
// tolerance artifact and dropped. Exact ties (symmetric structures) are
// never dropped.
// The margin and angular slack are deliberately tolerance-independent:
// elements only admitted at a looser tolerance score worse than every
// element admitted at a tighter one, so with fixed veto rules the kept
// set can only grow as the tolerance grows.
std::vector<SymmetryElement> filter_consistent(std::vector<SymmetryElement> elems,
                                               double cos_slack) {
    std::stable_sort(elems.begin(), elems.end(),
                     [](const SymmetryElement& a, const SymmetryElement& b) {
                         return a.score < b.score;
                     });
    const double margin = 0.015;
    std::vector<SymmetryElement> kept;
    for (const auto& e : elems) {
        bool ok = true;
        for (const auto& k : kept) {
            if (!consistent_pair(e, k, cos_slack) && e.score > k.score + margin) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(e);
    }
    return kept;
}

}  // namespace

int group_order(const std::string& g) {
    if (g == "Kh" || g == "Cinfv" || g == "Dinfh") return kInfiniteOrder;
    if (g == "C1") return 1;
    if (g == "Cs" || g == "Ci") return 2;
    if (g == "T") return 12;
    if (g == "Th" || g == "Td" || g == "O") return 24;
    if (g == "Oh") return 48;
    if (g == "I") return 60;
    if (g == "Ih") return 120;
    const char head = g[0];
    const char tail = g.back();
    const bool has_suffix = tail == 'v' || tail == 'h' || tail == 'd';
    const int n = std::stoi(g.substr(1, g.size() - 1 - (has_suffix ? 1 : 0)));
    if (head == 'S') return n;
    if (head == 'C') return has_suffix ? 2 * n : n;
    if (head == 'D') return has_suffix ? 4 * n : 2 * n;
    throw std::invalid_argument("unknown point group label: " + g);
}

PointGroup detect_point_group(const Structure& s, double tol,
                              const DetectOptions& opts) {
    if (tol <= 0.0) throw std::invalid_argument("tolerance must be positive");
    std::vector<SymmetryElement> identity_only = {
        {OpKind::Identity, Vec3::UnitZ(), 1, 0.0}};
    if (s.size() == 1) return assemble("Kh", kInfiniteOrder, identity_only);

    Scorer sc(s);
    if (sc.radius < 1e-12) return assemble("Kh", kInfiniteOrder, identity_only);

    const auto inertia = geom::inertia_tensor(s);
    if (inertia.moments[2] < opts.linear_threshold * inertia.moments[0]) {
        SymmetryElement inv{OpKind::Inversion, Vec3::UnitZ(), 2, 0.0};
        const double inv_score = sc.score(inv.matrix(), tol);
        auto elems = identity_only;
        if (inv_score <= tol) {
            inv.score = inv_score;
            elems.push_back(inv);
            return assemble("Dinfh", kInfiniteOrder, std::move(elems));
        }
        return assemble("Cinfv", kInfiniteOrder, std::move(elems));
    }

    auto elems = find_elements(s, tol, opts);
    const double merge_deg = merge_angle_deg(tol, opts);
    const double cos_merge = std::cos(merge_deg * std::numbers::pi / 180.0);
    const double cos_filter = std::cos(10.0 * std::numbers::pi / 180.0);
    const auto kept = filter_consistent(elems, cos_filter);

    const bool has_inversion = std::any_of(
        kept.begin(), kept.end(),
        [](const SymmetryElement& e) { return e.kind == OpKind::Inversion; });
    std::vector<const SymmetryElement*> mirrors;
    for (const auto& e : kept) {
        if (e.kind == OpKind::Mirror) mirrors.push_back(&e);
    }

    // Collapse proper rotations into axes with their highest order.
    std::vector<ProperAxis> axes;
    for (const auto& e : kept) {
        if (e.kind != OpKind::ProperRotation) continue;
        bool found = false;
        for (auto& ax : axes) {
            if (axes_close(ax.axis, e.axis, cos_merge)) {
                ax.max_order = std::max(ax.max_order, e.order);
                found = true;
                break;
            }
        }
        if (!found) axes.push_back({e.axis, e.order});
    }

    const int high_axes = static_cast<int>(
        std::count_if(axes.begin(), axes.end(),
                      [](const ProperAxis& a) { return a.max_order >= 3; }));
    if (high_axes >= 2) {
        const int c5 = static_cast<int>(std::count_if(
            axes.begin(), axes.end(),
            [](const ProperAxis& a) { return a.max_order >= 5; }));
        const int c4 = static_cast<int>(std::count_if(
            axes.begin(), axes.end(),
            [](const ProperAxis& a) { return a.max_order == 4; }));
        if (c5 >= 2) return assemble(has_inversion ? "Ih" : "I",
                                     group_order(has_inversion ? "Ih" : "I"),
                                     std::move(elems));
        if (c4 >= 2) return assemble(has_inversion ? "Oh" : "O",
                                     group_order(has_inversion ? "Oh" : "O"),
                                     std::move(elems));
        if (has_inversion) return assemble("Th", 24, std::move(elems));
        if (!mirrors.empty()) return assemble("Td", 24, std::move(elems));
        return assemble("T", 12, std::move(elems));
    }

    if (axes.empty()) {
        if (!mirrors.empty()) return assemble("Cs", 2, std::move(elems));
        if (has_inversion) return assemble("Ci", 2, std::move(elems));
        return assemble("C1", 1, std::move(elems));
    }

    // Principal axis: highest order, ties by lexicographic axis.
    const ProperAxis* principal = &axes[0];
    for (const auto& ax : axes) {
        if (ax.max_order > principal->max_order ||
            (ax.max_order == principal->max_order &&
             lex_less(ax.axis, principal->axis))) {
            principal = &ax;
        }
    }
    const int n = principal->max_order;
    const double slack_deg = std::max(8.0, merge_deg);
    const double cos_perp = std::cos((90.0 - slack_deg) * std::numbers::pi / 180.0);
    const double cos_par = std::cos(slack_deg * std::numbers::pi / 180.0);

    int perp_c2 = 0;
    for (const auto& ax : axes) {
        if (&ax == principal) continue;
        if (std::abs(ax.axis.dot(principal->axis)) < cos_perp) ++perp_c2;
    }
    bool sigma_h = false;
    int sigma_v = 0;
    for (const auto* m : mirrors) {
        const double d = std::abs(m->axis.dot(principal->axis));
        if (d > cos_par) sigma_h = true;
        else if (d < cos_perp) ++sigma_v;
    }
    bool s2n = false;
    for (const auto& e : kept) {
        if (e.kind == OpKind::ImproperRotation && e.order == 2 * n &&
            axes_close(e.axis, principal->axis, cos_par)) {
            s2n = true;
        }
    }

    std::string label;
    if (perp_c2 >= n) {
        label = sigma_h ? "D" + std::to_string(n) + "h"
              : (sigma_v >= n ? "D" + std::to_string(n) + "d"
                              : "D" + std::to_string(n));
    } else {
        if (sigma_h) label = "C" + std::to_string(n) + "h";
        else if (sigma_v >= n) label = "C" + std::to_string(n) + "v";
        else if (s2n) label = "S" + std::to_string(2 * n);
        else label = "C" + std::to_string(n);
    }
    return assemble(label, group_order(label), std::move(elems));
}

}  // namespace posner::symdetect
