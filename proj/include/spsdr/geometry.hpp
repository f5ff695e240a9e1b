#pragma once

#include "spsdr/linalg.hpp"
#include "spsdr/types.hpp"

namespace spsdr {

/// n x 2 planar site coordinates.
struct Coordinates {
    Matrix points;

    [[nodiscard]] Index size() const { return points.rows(); }
    /// Shape and finiteness only; duplicates are detected by pairwise_distances.
    void validate() const;
};

/// Symmetric Euclidean distance matrix with zero diagonal.
struct DistanceMatrix {
    Matrix dist;

    [[nodiscard]] Index size() const { return dist.rows(); }
    /// Median of the strictly upper-triangular entries.
    [[nodiscard]] double median() const;
};

/// Exponential correlation matrix H_ij = exp(-lambda * dist_ij), together
/// with its eigendecomposition (after the jitter policy, if it was needed).
struct CorrelationH {
    double lambda = 0.0;
    Matrix h;
    linalg::SpdFactor factor;
};

/// Column-normalized binary neighbor matrix for threshold d_max.
struct NeighborWeights {
    Matrix w;
    double d_max = 0.0;
};

/// W_theta = I - theta * W, with log|det W_theta| from its LU factorization.
struct LaggedWeights {
    double theta = 0.0;
    Matrix w_theta;
    double log_abs_det = 0.0;
};

DistanceMatrix pairwise_distances(const Coordinates& coords);

CorrelationH build_h(const DistanceMatrix& dist, double lambda);

/// max_i min_{j != i} dist_ij: the smallest threshold giving every site a neighbor.
double max_min_distance(const DistanceMatrix& dist);

NeighborWeights build_w(const DistanceMatrix& dist, double d_max);

LaggedWeights build_w_theta(const NeighborWeights& w, double theta);

}  // namespace spsdr
