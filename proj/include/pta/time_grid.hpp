#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pta {

// Ordered observation times shared by all subjects. A cubic basis needs at
// least four points.
struct TimeGrid {
    Eigen::VectorXd points;

    int size() const { return static_cast<int>(points.size()); }
    double front() const { return points(0); }
    double back() const { return points(points.size() - 1); }
};

// Validates and builds a grid: strictly increasing, finite, length >= 4.
TimeGrid make_time_grid(const std::vector<double>& times);
TimeGrid make_time_grid(const Eigen::VectorXd& times);

}  // namespace pta
