#include "dynspace/geometry.hpp"

#include "dynspace/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace dynspace {

namespace {

void require_nonzero(const Vector& v) {
    if (v.size() == 0 || v.squaredNorm() == 0.0) throw Error(ErrorKind::Degenerate, "zero vector");
}

double sorted_sum(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

std::vector<double> pair_distances(std::span<const Vector> members) {
    std::vector<double> d;
    d.reserve(members.size() * (members.size() - 1) / 2);
    for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) d.push_back(cosine_distance(members[i], members[j]));
    }
    return d;
}

std::vector<Vector> perspectives(const Vector& task, std::span<const Vector> members) {
    std::vector<Vector> out;
    out.reserve(members.size());
    for (const auto& m : members) {
        auto p = perspective_vector(task, m);
        if (p.degenerate) throw Error(ErrorKind::Degenerate, "zero perspective vector: experience equals task");
        out.push_back(std::move(p.vector));
    }
    return out;
}

std::vector<Vector> without(std::span<const Vector> members, std::size_t focal) {
    std::vector<Vector> out;
    out.reserve(members.size() - 1);
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i != focal) out.push_back(members[i]);
    }
    return out;
}

void check_marginal(std::size_t n, std::size_t focal) {
    if (n < 3) throw Error(ErrorKind::InvalidArgument, "marginal contributions need at least 3 members");
    if (focal >= n) throw Error(ErrorKind::InvalidArgument, "focal member index out of range");
}

Vector mean_of(std::span<const Vector> vs) {
    Vector sum = Vector::Zero(vs.front().size());
    for (const auto& v : vs) sum += v;
    return sum / static_cast<double>(vs.size());
}

}  // namespace

Vector document_vector(const Document& doc, const Vocabulary& vocab, const Eigen::MatrixXd& slice) {
    Vector sum = Vector::Zero(slice.cols());
    std::size_t hits = 0;
    for (const auto& token : doc.tokens) {
        if (auto idx = vocab.index_of(token)) {
            sum += slice.row(static_cast<Eigen::Index>(*idx)).transpose();
            ++hits;
        }
    }
    if (hits == 0) throw Error(ErrorKind::Degenerate, "unprojectable document: " + doc.doc_id);
    return sum / static_cast<double>(hits);
}

ExperienceVector experience_vector(const SpaceView& space, const std::string& creator_id, std::size_t as_of,
                                   std::size_t lookback) {
    ExperienceVector ev;
    ev.creator_id = creator_id;
    ev.as_of = as_of;
    ev.lookback = lookback;
    ev.vector = Vector::Zero(static_cast<Eigen::Index>(space.tensor.k()));
    for (std::size_t i : creator_history(space.sliced, creator_id, as_of, lookback)) {
        const auto t = *space.sliced.slice_of(i);
        try {
            ev.vector += document_vector(space.corpus.doc(i), space.vocab, space.tensor.slice(t));
            ++ev.n_docs;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Degenerate) throw;
        }
    }
    if (ev.n_docs == 0) throw Error(ErrorKind::Degenerate, "no prior experience: " + creator_id);
    ev.vector /= static_cast<double>(ev.n_docs);
    if (!ev.vector.allFinite() || ev.vector.squaredNorm() == 0.0) {
        throw Error(ErrorKind::Degenerate, "zero experience vector: " + creator_id);
    }
    return ev;
}

double cosine_similarity(const Vector& u, const Vector& v) {
    require_nonzero(u);
    require_nonzero(v);
    if (u.size() != v.size()) throw Error(ErrorKind::Shape, "cosine of vectors with different dimension");
    const double c = u.dot(v) / std::sqrt(u.squaredNorm() * v.squaredNorm());
    return std::clamp(c, -1.0, 1.0);
}

double cosine_distance(const Vector& u, const Vector& v) {
    return 1.0 - cosine_similarity(u, v);
}

Perspective perspective_vector(const Vector& task, const Vector& experience) {
    if (!task.allFinite() || !experience.allFinite()) throw Error(ErrorKind::Numeric, "non-finite perspective input");
    Perspective p;
    p.vector = task - experience;
    p.degenerate = p.vector.squaredNorm() == 0.0;
    return p;
}

double background_diversity(std::span<const Vector> members) {
    if (members.size() < 2) throw Error(ErrorKind::InvalidArgument, "diversity needs at least 2 members");
    auto d = pair_distances(members);
    return sorted_sum(d) / static_cast<double>(d.size());
}

double perspective_diversity(const Vector& task, std::span<const Vector> members) {
    if (members.size() < 2) throw Error(ErrorKind::InvalidArgument, "diversity needs at least 2 members");
    const auto p = perspectives(task, members);
    return background_diversity(p);
}

double mean_pairwise_angle(std::span<const Vector> members) {
    if (members.size() < 2) throw Error(ErrorKind::InvalidArgument, "diversity needs at least 2 members");
    auto d = pair_distances(members);
    for (double& x : d) x = std::acos(std::clamp(1.0 - x, -1.0, 1.0));
    return sorted_sum(d) / static_cast<double>(d.size());
}

double marginal_background(std::span<const Vector> members, std::size_t focal) {
    check_marginal(members.size(), focal);
    const double full = background_diversity(members);
    if (full == 0.0) throw Error(ErrorKind::Degenerate, "degenerate homogeneous team");
    const auto rest = without(members, focal);
    return (full - background_diversity(rest)) / full;
}

double marginal_perspective(const Vector& task, std::span<const Vector> members, std::size_t focal) {
    check_marginal(members.size(), focal);
    const auto p = perspectives(task, members);
    const double full = background_diversity(p);
    if (full == 0.0) throw Error(ErrorKind::Degenerate, "degenerate homogeneous team");
    const auto rest = without(p, focal);
    return (full - background_diversity(rest)) / full;
}

std::pair<double, double> marginal_contributions(const Vector& task, std::span<const Vector> members,
                                                 std::size_t focal) {
    return {marginal_background(members, focal), marginal_perspective(task, members, focal)};
}

double centroid_task_distance(const Vector& task, std::span<const Vector> members) {
    if (members.empty()) throw Error(ErrorKind::InvalidArgument, "centroid of an empty team");
    const Vector centroid = mean_of(members);
    if (centroid.squaredNorm() == 0.0) throw Error(ErrorKind::Degenerate, "zero centroid");
    return cosine_distance(centroid, task);
}

double experience_convergence(std::span<const Vector> before, std::span<const Vector> after, const Vector& task) {
    if (before.empty() || before.size() != after.size()) {
        throw Error(ErrorKind::InvalidArgument, "experience convergence needs every member at both periods");
    }
    std::vector<double> deltas;
    deltas.reserve(before.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
        deltas.push_back(cosine_distance(before[i], task) - cosine_distance(after[i], task));
    }
    return sorted_sum(deltas) / static_cast<double>(deltas.size());
}

DiversityReport team_report(const TeamRecord& team) {
    const std::size_t n = team.members.size();
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "team needs at least 2 members with history");
    if (team.task.squaredNorm() == 0.0) throw Error(ErrorKind::Degenerate, "zero task vector");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return team.members[a].creator_id < team.members[b].creator_id;
    });
    std::vector<Vector> vs;
    vs.reserve(n);
    std::size_t total_docs = 0;
    for (std::size_t i : order) {
        vs.push_back(team.members[i].vector);
        total_docs += team.members[i].n_docs;
    }

    DiversityReport r;
    r.doc_id = team.doc_id;
    r.t = team.t;
    r.n_members = n;
    r.bd = background_diversity(vs);
    const auto pv = perspectives(team.task, vs);
    r.pd = background_diversity(pv);
    r.theta_b_bar = mean_pairwise_angle(vs);
    r.theta_p_bar = mean_pairwise_angle(pv);
    r.mean_experience = static_cast<double>(total_docs) / static_cast<double>(n);
    r.prop_new_members = team.prop_new_members;
    r.prev_collaboration = team.prev_collaboration;
    r.centroid_task_distance = centroid_task_distance(team.task, vs);
    r.outcome = team.outcome;

    if (team.next_members && team.next_members->size() == n) {
        std::vector<Vector> next(n);
        bool matched = true;
        for (std::size_t k = 0; k < n; ++k) {
            const auto& id = team.members[order[k]].creator_id;
            auto it = std::find_if(team.next_members->begin(), team.next_members->end(),
                                   [&](const ExperienceVector& e) { return e.creator_id == id; });
            if (it == team.next_members->end()) {
                matched = false;
                break;
            }
            next[k] = it->vector;
        }
        if (matched) r.experience_convergence = experience_convergence(vs, next, team.task);
    }

    for (std::size_t k = 0; k < n; ++k) {
        MemberContribution mc;
        mc.creator_id = team.members[order[k]].creator_id;
        if (n >= 3) {
            if (r.bd > 0.0) mc.mbd = marginal_background(vs, k);
            if (r.pd > 0.0) mc.mpd = marginal_perspective(team.task, vs, k);
        }
        r.members.push_back(std::move(mc));
    }
    return r;
}

TeamRecord assemble_team(const SpaceView& space, std::size_t doc_index, std::size_t lookback) {
    const auto& doc = space.corpus.doc(doc_index);
    const auto slice = space.sliced.slice_of(doc_index);
    if (!slice) throw Error(ErrorKind::InvalidArgument, "document outside the sliced span: " + doc.doc_id);

    TeamRecord team;
    team.doc_id = doc.doc_id;
    team.t = *slice;
    team.outcome = doc.outcome;
    team.task = document_vector(doc, space.vocab, space.tensor.slice(*slice));

    std::vector<std::string> listed = doc.creator_ids;
    std::sort(listed.begin(), listed.end());
    listed.erase(std::unique(listed.begin(), listed.end()), listed.end());
    team.n_listed = listed.size();

    std::vector<std::set<std::size_t>> histories;
    std::size_t fresh = 0;
    for (const auto& id : listed) {
        const auto hist = creator_history(space.sliced, id, *slice, lookback);
        histories.emplace_back(hist.begin(), hist.end());
        try {
            team.members.push_back(experience_vector(space, id, *slice, lookback));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Degenerate) throw;
            ++fresh;
        }
    }
    team.prop_new_members = listed.empty() ? 0.0 : static_cast<double>(fresh) / static_cast<double>(listed.size());

    std::size_t pairs = 0, shared = 0;
    for (std::size_t a = 0; a < histories.size(); ++a) {
        for (std::size_t b = a + 1; b < histories.size(); ++b) {
            ++pairs;
            const bool any = std::any_of(histories[a].begin(), histories[a].end(),
                                         [&](std::size_t d) { return histories[b].count(d) > 0; });
            if (any) ++shared;
        }
    }
    team.prev_collaboration = pairs ? static_cast<double>(shared) / static_cast<double>(pairs) : 0.0;

    if (team.members.size() < 2) {
        throw Error(ErrorKind::Degenerate, "fewer than two members with prior history: " + doc.doc_id);
    }

    if (*slice + 1 < space.tensor.T()) {
        std::vector<ExperienceVector> next;
        try {
            for (const auto& m : team.members) {
                next.push_back(experience_vector(space, m.creator_id, *slice + 1, lookback));
            }
            team.next_members = std::move(next);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Degenerate) throw;
        }
    }
    return team;
}

}  // namespace dynspace
