#pragma once

#include "spsdr/dimselect.hpp"
#include "spsdr/geometry.hpp"
#include "spsdr/models.hpp"
#include "spsdr/predictor.hpp"
#include "spsdr/types.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace spsdr {

enum class LocationMode { uniform, grid };

std::string_view to_string(LocationMode mode) noexcept;
LocationMode parse_location_mode(std::string_view text);

/// Gaussian random field for the response: linear trend plus a spherical
/// covariogram.
struct GrfSpec {
    double intercept = 1.0;
    double slope_s1 = 0.1;
    double slope_s2 = 0.05;
    double sill = 1.25;
    double range = 2.0;

    void validate() const;
    [[nodiscard]] double covariance(double distance) const;
    [[nodiscard]] double trend(double s1, double s2) const;
};

struct SimConfig {
    int n = 400;
    int p = 24;
    int r = 2;
    int d = 2;
    ModelKind model = ModelKind::sem;  ///< error structure used to generate X (sscm or sem)
    double lambda = 0.1;
    double theta = 0.8;
    int reps = 30;
    double train_frac = 0.7;
    std::uint64_t seed = 1;
    LocationMode locations = LocationMode::uniform;
    GrfSpec grf;
    /// Estimation grids; empty means the fitter's default.
    std::vector<double> lambda_grid;
    std::vector<double> theta_grid;
    int cv_folds = 5;

    void validate() const;
};

/// Parameters the predictors were generated from.
struct SimTruth {
    Vector mu;
    Matrix a;      ///< p x d
    Matrix b;      ///< d x r
    Matrix delta;  ///< p x p
};

struct SimulatedX {
    Matrix x;
    SimTruth truth;
};

/// Streams of one replication; every draw comes from make_rng(seed, {rep, stream}).
enum class SimStream : std::uint64_t { locations = 0, response = 1, predictors = 2, split = 3, folds = 4 };

std::mt19937_64 replication_rng(std::uint64_t seed, int rep, SimStream stream);

Coordinates sample_locations(int n, std::mt19937_64& rng);
Coordinates sample_locations(int n, std::uint64_t seed);

/// Regular sqrt(n) x sqrt(n) lattice spanning [0,1]^2; n must be a perfect square.
Coordinates grid_locations(int n);

/// Spherical covariance matrix of the field at the given sites.
Matrix spherical_covariance(const Coordinates& coords, const GrfSpec& grf);

Vector simulate_y(const Coordinates& coords, const GrfSpec& grf, std::mt19937_64& rng);
Vector simulate_y(const Coordinates& coords, const GrfSpec& grf, std::uint64_t seed);

SimulatedX simulate_x(const Vector& y, const Coordinates& coords, const SimConfig& cfg, std::mt19937_64& rng);
SimulatedX simulate_x(const Vector& y, const Coordinates& coords, const SimConfig& cfg, std::uint64_t seed);

struct Replication {
    SpatialSample full;
    SimTruth truth;
    std::vector<Index> train_rows;
    std::vector<Index> test_rows;
    SpatialSample train;
    SpatialSample test;
};

/// Data and 70/30 style split for replication `rep` of cfg.
Replication make_replication(const SimConfig& cfg, int rep);

struct DPolicy {
    enum class Kind { fixed, lr, aic, bic, cv };
    Kind kind = Kind::fixed;
    int d = 2;      ///< fixed rank
    double alpha = 0.05;

    static DPolicy parse(std::string_view text);
    [[nodiscard]] std::string name() const;
};

struct MethodResult {
    std::string method;
    std::vector<double> mse;      ///< per replication; NaN where the method failed
    std::vector<int> d_selected;  ///< per replication; -1 where not applicable or failed
    std::vector<double> h1;
    std::vector<double> h2;       ///< NaN for one-kernel methods
    double mean = 0.0;            ///< over successful replications
    double sd = 0.0;              ///< sample standard deviation over successful replications
    int failures = 0;
    bool unstable = false;        ///< failures in at least 20% of replications
};

struct MetricsReport {
    SimConfig config;
    std::string d_policy;
    std::vector<std::uint64_t> replication_seeds;  ///< first draw of each replication's location stream
    std::vector<MethodResult> methods;
    /// Estimated spatial parameter per model (ind, sscm, sem) and replication; NaN if not fitted.
    std::vector<std::vector<double>> spatial_params;

    [[nodiscard]] bool any_unstable() const;
    [[nodiscard]] const MethodResult& method(std::string_view name) const;
};

/// Mean and sample standard deviation of the finite entries.
void summarize(MethodResult& result, int reps);

MetricsReport run_experiment(const SimConfig& cfg, const std::vector<PredictorMode>& methods, const DPolicy& policy,
                             std::size_t threads = 0);

}  // namespace spsdr
