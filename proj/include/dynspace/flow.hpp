#pragma once

#include "dynspace/geometry.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dynspace {

enum class Metric { Cosine, Euclidean };

/// How focal points are drawn from a slice.
enum class FocalSampling {
    BoundingBox,    // uniform over the per-dimension [min, max] box of word vectors
    WordPositions,  // resampled word vectors
};

/// Which slice pairs feed flow validation.
enum class FlowMode {
    PooledPairs,  // every adjacent pair (t, t+1), focal points drawn from slice t
    FinalSlice,   // focal points from the last slice, evaluated on the last pair
};

/// Rows of `points` are observations.
Eigen::MatrixXd sample_focal_points(const Eigen::MatrixXd& slice, std::size_t m, std::uint64_t seed,
                                    FocalSampling mode = FocalSampling::BoundingBox);

struct DensityPeakParams {
    Metric metric = Metric::Cosine;
    /// Kernel bandwidth d_c as a percentile of all pairwise distances.
    double bandwidth_percentile = 2.0;
    /// 0 selects the peak count at the largest gap of sorted log(rho * delta)
    /// among the top ceil(sqrt(n)) + 1 points.
    std::size_t n_clusters = 0;
};

struct ClusterAssignment {
    std::vector<std::size_t> labels;  // per point, in [0, peaks.size())
    std::vector<std::size_t> peaks;   // point index of each label's peak
    std::vector<double> rho;
    std::vector<double> delta;

    std::size_t n_clusters() const noexcept { return peaks.size(); }
};

/// Density-peak clustering. rho is a Gaussian-kernel density, delta the distance
/// to the nearest point of higher density (the maximum pairwise distance for the
/// densest point). Density ties are broken by coordinates, so the partition does
/// not depend on input order.
ClusterAssignment density_peak_cluster(const Eigen::MatrixXd& points, const DensityPeakParams& params = {});

double pairwise_distance(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                         Metric metric);

/// Linear-interpolation percentile (p in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double p);

struct InFlowParams {
    /// Percent of word vectors nearest (by cosine) to the focal point.
    double t1_percent = 30.0;
    std::size_t min_cluster_input = 10;
    DensityPeakParams clustering{};
};

/// Indices of the nearest `percent`% of words with nonzero vectors.
std::vector<std::size_t> nearest_words(const Vector& focal, const Eigen::MatrixXd& slice, double percent);

/// Groups of word indices: the focal neighbourhood at `slice`, clustered.
std::vector<std::vector<std::size_t>> neighbourhood_clusters(const Vector& focal, const Eigen::MatrixXd& slice,
                                                             const InFlowParams& params = {});

/// Mean over clusters of cos(centroid_to, focal) - cos(centroid_from, focal),
/// where both centroids average the same member words.
double cluster_in_flow(const Vector& focal, const std::vector<std::vector<std::size_t>>& clusters,
                       const Eigen::MatrixXd& from, const Eigen::MatrixXd& to);

double in_flow(const Vector& focal, const Eigen::MatrixXd& from, const Eigen::MatrixXd& to,
               const InFlowParams& params = {});

/// t2_percent-th percentile of the cosine distances between every focal point
/// and every document vector (rows of both matrices).
double innovation_radius(const Eigen::MatrixXd& focals, const Eigen::MatrixXd& docs, double t2_percent);

/// Documents within cosine distance `radius` of the focal point.
std::size_t innovation_count(const Vector& focal, const Eigen::MatrixXd& docs, double radius);

/// Product-moment correlation. Throws Error(Degenerate, "constant series").
double pearson(std::span<const double> x, std::span<const double> y);

struct FlowParams {
    std::size_t m = 5000;
    double t1_percent = 30.0;
    double t2_percent = 12.0;
    std::uint64_t seed = 1;
    FocalSampling sampling = FocalSampling::BoundingBox;
    FlowMode mode = FlowMode::PooledPairs;
    InFlowParams inflow{};
};

struct FlowRow {
    std::size_t slice_pair = 0;  // t of the pair (t, t+1)
    std::size_t focal_id = 0;
    double t1 = 0.0;
    double t2 = 0.0;
    double in_flow = 0.0;
    std::size_t innovation_count = 0;
};

struct FlowSummary {
    double t1 = 0.0;
    double t2 = 0.0;
    std::optional<double> pearson_r;  // empty when a series is constant
    std::size_t n_points = 0;
    std::size_t skipped = 0;  // focal points without a usable neighbourhood
};

struct FlowResult {
    std::vector<FlowRow> rows;
    FlowSummary summary;
};

/// One slice pair from raw matrices: `doc_vectors` holds the slice-(t+1)
/// project documents, one per row.
std::vector<FlowRow> flow_rows(const Eigen::MatrixXd& focals, const Eigen::MatrixXd& from, const Eigen::MatrixXd& to,
                               const Eigen::MatrixXd& doc_vectors, std::size_t slice_pair, double t1_percent,
                               double t2_percent, const InFlowParams& inflow, std::size_t* skipped = nullptr);

FlowSummary summarize_flow(std::span<const FlowRow> rows, double t1, double t2, std::size_t skipped);

FlowResult flow_validation(const SpaceView& space, const FlowParams& params = {});

/// Default robustness grids expressed as "percent nearest".
inline constexpr double kT1Grid[] = {50.0, 40.0, 30.0, 20.0, 10.0};
inline constexpr double kT2Grid[] = {20.0, 16.0, 12.0, 8.0, 4.0};

std::vector<FlowSummary> flow_grid(const SpaceView& space, const FlowParams& params,
                                   std::span<const double> t1_values, std::span<const double> t2_values);

}  // namespace dynspace
