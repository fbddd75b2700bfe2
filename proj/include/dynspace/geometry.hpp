#pragma once

#include "dynspace/corpus.hpp"
#include "dynspace/dynembed.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dynspace {

using Vector = Eigen::VectorXd;

/// Read-only bundle of everything needed to project documents into a space.
struct SpaceView {
    const Corpus& corpus;
    const SlicedCorpus& sliced;
    const Vocabulary& vocab;
    const EmbeddingTensor& tensor;
};

/// Mean of the slice vectors of the document's in-vocabulary tokens, counting
/// repeats. Throws Error(Degenerate, "unprojectable document") when no token is
/// in the vocabulary.
Vector document_vector(const Document& doc, const Vocabulary& vocab, const Eigen::MatrixXd& slice);

struct ExperienceVector {
    std::string creator_id;
    std::size_t as_of = 0;
    Vector vector;
    std::size_t n_docs = 0;
    std::size_t lookback = 0;
};

/// Equal-weight mean of the creator's history documents, each projected in its
/// own slice. Throws Error(Degenerate, "no prior experience") on an empty history.
ExperienceVector experience_vector(const SpaceView& space, const std::string& creator_id,
                                   std::size_t as_of, std::size_t lookback);

/// 1 - cos(u, v), clamped to [0, 2]. Throws Error(Degenerate, "zero vector").
double cosine_distance(const Vector& u, const Vector& v);
double cosine_similarity(const Vector& u, const Vector& v);

struct Perspective {
    Vector vector;
    bool degenerate = false;  // experience coincides with the task
};

Perspective perspective_vector(const Vector& task, const Vector& experience);

/// Mean pairwise cosine distance. Pair distances are summed in sorted order so
/// the value does not depend on member order.
double background_diversity(std::span<const Vector> members);
double perspective_diversity(const Vector& task, std::span<const Vector> members);

/// Mean pairwise angle arccos(1 - d) over the same pairs; a rendering of BD in
/// radians, not a separate measure.
double mean_pairwise_angle(std::span<const Vector> members);

/// (BD_full - BD_without_a) / BD_full. Needs >= 3 members and BD_full > 0.
double marginal_background(std::span<const Vector> members, std::size_t focal);
double marginal_perspective(const Vector& task, std::span<const Vector> members, std::size_t focal);
std::pair<double, double> marginal_contributions(const Vector& task, std::span<const Vector> members,
                                                 std::size_t focal);

double centroid_task_distance(const Vector& task, std::span<const Vector> members);

/// Mean over members of d(V_i(t), task) - d(V_i(t+1), task); positive when
/// members move toward the task.
double experience_convergence(std::span<const Vector> before, std::span<const Vector> after,
                              const Vector& task);

struct TeamRecord {
    std::string doc_id;
    std::size_t t = 0;
    Vector task;
    std::vector<ExperienceVector> members;
    /// Same members one period later, when every one of them has it.
    std::optional<std::vector<ExperienceVector>> next_members;
    std::size_t n_listed = 0;
    double prop_new_members = 0.0;
    double prev_collaboration = 0.0;
    std::optional<double> outcome;
};

struct MemberContribution {
    std::string creator_id;
    std::optional<double> mbd;
    std::optional<double> mpd;
};

struct DiversityReport {
    std::string doc_id;
    std::size_t t = 0;
    std::size_t n_members = 0;
    double bd = 0.0;
    double pd = 0.0;
    double theta_b_bar = 0.0;
    double theta_p_bar = 0.0;
    double mean_experience = 0.0;
    double prop_new_members = 0.0;
    double prev_collaboration = 0.0;
    double centroid_task_distance = 0.0;
    std::optional<double> experience_convergence;
    std::optional<double> outcome;
    std::vector<MemberContribution> members;  // sorted by creator_id
};

/// All diversity quantities of one team. Members are processed in creator_id
/// order, so the report is identical under member reordering.
DiversityReport team_report(const TeamRecord& team);

/// Builds the team for a project document: task vector from the document in its
/// own slice, members with prior history. Throws Error(Degenerate) when fewer
/// than two members have history.
TeamRecord assemble_team(const SpaceView& space, std::size_t doc_index, std::size_t lookback);

}  // namespace dynspace
