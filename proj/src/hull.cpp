#include "nclab/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "nclab/errors.hpp"

namespace nclab {

namespace {

using Vec3 = Eigen::Vector3d;

struct WorkFace {
    int v[3];
    Vec3 normal;
    double offset;
    std::vector<int> outside;
    bool alive = true;
};

WorkFace make_face(const std::vector<Vec3>& p, int a, int b, int c, const Vec3& interior) {
    WorkFace f;
    f.v[0] = a;
    f.v[1] = b;
    f.v[2] = c;
    f.normal = (p[b] - p[a]).cross(p[c] - p[a]).normalized();
    f.offset = f.normal.dot(p[a]);
    if (f.normal.dot(interior) > f.offset) {
        std::swap(f.v[1], f.v[2]);
        f.normal = -f.normal;
        f.offset = -f.offset;
    }
    return f;
}

}  // namespace

ConvexHull::ConvexHull(std::vector<Vec3> points) : points_(std::move(points)) {
    const auto& p = points_;
    const int n = static_cast<int>(p.size());
    if (n < 4) throw PreconditionError("convex hull needs at least 4 points");

    double scale = 0.0;
    for (const auto& q : p) scale = std::max(scale, q.cwiseAbs().maxCoeff());
    const double eps = 1e-12 * std::max(scale, 1.0);

    // Initial simplex: extreme points along x, then farthest from the line,
    // then farthest from the plane.
    int i0 = 0, i1 = 0;
    for (int i = 0; i < n; ++i) {
        if (p[i].x() < p[i0].x()) i0 = i;
        if (p[i].x() > p[i1].x()) i1 = i;
    }
    if ((p[i1] - p[i0]).norm() <= eps) {
        for (int i = 0; i < n; ++i)
            if ((p[i] - p[i0]).norm() > (p[i1] - p[i0]).norm()) i1 = i;
    }
    const Vec3 dir = (p[i1] - p[i0]).normalized();
    int i2 = -1;
    double best = eps;
    for (int i = 0; i < n; ++i) {
        const double d = (p[i] - p[i0]).cross(dir).norm();
        if (d > best) best = d, i2 = i;
    }
    if (i2 < 0) throw PreconditionError("convex hull points are collinear");
    const Vec3 pn = (p[i1] - p[i0]).cross(p[i2] - p[i0]).normalized();
    int i3 = -1;
    best = eps;
    for (int i = 0; i < n; ++i) {
        const double d = std::abs(pn.dot(p[i] - p[i0]));
        if (d > best) best = d, i3 = i;
    }
    if (i3 < 0) throw PreconditionError("convex hull points are coplanar");

    const Vec3 interior = (p[i0] + p[i1] + p[i2] + p[i3]) / 4.0;
    std::vector<WorkFace> faces;
    faces.push_back(make_face(p, i0, i1, i2, interior));
    faces.push_back(make_face(p, i0, i1, i3, interior));
    faces.push_back(make_face(p, i0, i2, i3, interior));
    faces.push_back(make_face(p, i1, i2, i3, interior));

    auto assign = [&](const std::vector<int>& candidates, const std::vector<int>& targets) {
        for (int i : candidates) {
            int where = -1;
            double far = eps;
            for (int fi : targets) {
                const double d = faces[static_cast<std::size_t>(fi)].normal.dot(p[i]) -
                                 faces[static_cast<std::size_t>(fi)].offset;
                if (d > far) far = d, where = fi;
            }
            if (where >= 0) faces[static_cast<std::size_t>(where)].outside.push_back(i);
        }
    };
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    assign(all, {0, 1, 2, 3});

    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
        if (!faces[fi].alive || faces[fi].outside.empty()) continue;
        // Farthest outside point of this face.
        int apex = faces[fi].outside.front();
        double far = -1.0;
        for (int i : faces[fi].outside) {
            const double d = faces[fi].normal.dot(p[i]) - faces[fi].offset;
            if (d > far) far = d, apex = i;
        }
        // Faces visible from the apex, and the horizon edges around them.
        std::vector<int> visible;
        for (std::size_t fj = 0; fj < faces.size(); ++fj) {
            if (faces[fj].alive && faces[fj].normal.dot(p[apex]) - faces[fj].offset > eps) {
                visible.push_back(static_cast<int>(fj));
            }
        }
        std::map<std::pair<int, int>, int> edges;  // directed edge -> count
        std::vector<int> orphans;
        for (int fj : visible) {
            WorkFace& f = faces[static_cast<std::size_t>(fj)];
            f.alive = false;
            for (int k = 0; k < 3; ++k) edges[{f.v[k], f.v[(k + 1) % 3]}] += 1;
            for (int i : f.outside)
                if (i != apex) orphans.push_back(i);
            f.outside.clear();
        }
        std::vector<int> created;
        for (const auto& [e, count] : edges) {
            if (edges.count({e.second, e.first})) continue;  // interior edge of the visible set
            faces.push_back(make_face(p, e.first, e.second, apex, interior));
            created.push_back(static_cast<int>(faces.size()) - 1);
        }
        assign(orphans, created);
    }

    for (const auto& f : faces) {
        if (f.alive) faces_.push_back({f.v[0], f.v[1], f.v[2], f.normal, f.offset});
    }
}

double ConvexHull::signed_distance(const Vec3& q) const {
    double d = -std::numeric_limits<double>::infinity();
    for (const auto& f : faces_) d = std::max(d, f.normal.dot(q) - f.offset);
    return d;
}

bool ConvexHull::contains(const Vec3& q, double tolerance) const { return signed_distance(q) <= tolerance; }

}  // namespace nclab
