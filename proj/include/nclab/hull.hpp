#pragma once

#include <Eigen/Dense>
#include <vector>

namespace nclab {

// Convex hull of a 3D point set as outward-facing planes n.x <= offset.
class ConvexHull {
public:
    struct Face {
        int a, b, c;  // vertex indices into points()
        Eigen::Vector3d normal;  // unit, outward
        double offset;
    };

    // Quickhull. Throws PreconditionError for fewer than 4 affinely
    // independent points.
    explicit ConvexHull(std::vector<Eigen::Vector3d> points);

    const std::vector<Eigen::Vector3d>& points() const { return points_; }
    const std::vector<Face>& faces() const { return faces_; }

    // Largest signed distance to a face plane; <= 0 inside.
    double signed_distance(const Eigen::Vector3d& p) const;
    // Inside or within `tolerance` of the boundary.
    bool contains(const Eigen::Vector3d& p, double tolerance = 1e-9) const;

private:
    std::vector<Eigen::Vector3d> points_;
    std::vector<Face> faces_;
};

}  // namespace nclab
