#pragma once

#include "dynspace/geometry.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace dynspace {

/// In-vocabulary tokens across the creator's slice-t documents.
std::set<std::size_t> concept_usage(const Corpus& corpus, const SlicedCorpus& sliced, const Vocabulary& vocab,
                                    const std::string& creator_id, std::size_t t);

/// cos(experience, concept_t1) - cos(experience, concept_t).
double movement_delta(const Vector& experience, const Vector& concept_t, const Vector& concept_t1);

/// Cosine of the angle the concept's movement subtends at the observer. 1 when
/// the concept does not move.
double visual_angle_cos(const Vector& experience, const Vector& concept_t, const Vector& concept_t1);

struct AdoptionRecord {
    std::string creator_id;
    std::size_t token = 0;
    std::size_t t = 0;
    double delta_d = 0.0;
    double theta_v_cos = 0.0;
    double theta_v = 0.0;  // radians, for inspection only
    bool adopted = false;
};

struct AdoptionParams {
    std::size_t sample_n = 20000;  // creators per slice pair
    std::size_t candidates = 500;  // nearest unused tokens per creator
    std::uint64_t seed = 1;
};

/// For each adjacent slice pair and each sampled creator with slice-t work:
/// the `candidates` tokens nearest the creator's slice-t position among those
/// the creator did not use at t, labelled adopted when used at t+1.
std::vector<AdoptionRecord> build_adoption_table(const SpaceView& space, const AdoptionParams& params = {});

struct OlsFit {
    std::vector<std::string> names;
    std::vector<double> coefficients;
    std::vector<double> std_errors;
    double residual_ss = 0.0;
    std::size_t n = 0;
};

/// Least squares through a column-pivoting QR. Throws Error(Degenerate) when
/// the design is rank deficient or has fewer rows than columns.
OlsFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, std::vector<std::string> names = {});

/// Subtracts each group's mean from every column of `design` and from `y`.
void demean_by_group(Eigen::MatrixXd& design, Eigen::VectorXd& y, std::span<const std::string> groups);

/// Linear probability model adopted ~ 1 + delta_d + theta_v_cos + delta_d:theta_v_cos.
/// With `demean_creators` the intercept is dropped and creator means removed.
OlsFit fit_adoption(std::span<const AdoptionRecord> records, bool demean_creators = false);

}  // namespace dynspace
