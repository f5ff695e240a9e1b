#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace spsdr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// n observed sites: planar coordinates, predictors and scalar response.
struct SpatialSample {
    Matrix coords;  ///< n x 2
    Matrix x;       ///< n x p
    Vector y;       ///< n

    [[nodiscard]] Index size() const { return x.rows(); }
    [[nodiscard]] Index predictors() const { return x.cols(); }

    /// Throws InvalidArgument when row counts disagree or values are not finite.
    void validate() const;

    [[nodiscard]] SpatialSample subset(const std::vector<Index>& rows) const;
};

}  // namespace spsdr
