#include "dynspace/adoption.hpp"

#include "dynspace/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace dynspace {

std::set<std::size_t> concept_usage(const Corpus& corpus, const SlicedCorpus& sliced, const Vocabulary& vocab,
                                    const std::string& creator_id, std::size_t t) {
    if (t >= sliced.size()) throw Error(ErrorKind::InvalidArgument, "slice index out of range");
    std::set<std::size_t> used;
    for (std::size_t i : creator_docs_in_slice(sliced, creator_id, t)) {
        for (const auto& token : corpus.doc(i).tokens) {
            if (auto idx = vocab.index_of(token)) used.insert(*idx);
        }
    }
    return used;
}

double movement_delta(const Vector& experience, const Vector& concept_t, const Vector& concept_t1) {
    return cosine_similarity(experience, concept_t1) - cosine_similarity(experience, concept_t);
}

double visual_angle_cos(const Vector& experience, const Vector& concept_t, const Vector& concept_t1) {
    if (concept_t == concept_t1) return 1.0;
    const Vector a = concept_t - experience;
    const Vector b = concept_t1 - experience;
    if (a.squaredNorm() == 0.0 || b.squaredNorm() == 0.0) {
        throw Error(ErrorKind::Degenerate, "zero sight line: concept coincides with the observer");
    }
    return std::clamp(a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm()), -1.0, 1.0);
}

std::vector<AdoptionRecord> build_adoption_table(const SpaceView& space, const AdoptionParams& params) {
    const std::size_t T = space.tensor.T();
    if (T < 2) throw Error(ErrorKind::InvalidArgument, "adoption needs at least 2 slices");
    const auto creators = space.sliced.creators();
    std::vector<AdoptionRecord> records;
    std::size_t eligible_total = 0;

    for (std::size_t t = 0; t + 1 < T; ++t) {
        const auto& from = space.tensor.slice(t);
        const auto& to = space.tensor.slice(t + 1);

        std::vector<ExperienceVector> eligible;
        for (const auto& c : creators) {
            try {
                eligible.push_back(experience_vector(space, c, t + 1, 1));
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Degenerate) throw;
            }
        }
        eligible_total += eligible.size();
        std::mt19937_64 rng(params.seed + 0x9E3779B97F4A7C15ull * (t + 1));
        std::shuffle(eligible.begin(), eligible.end(), rng);
        if (eligible.size() > params.sample_n) eligible.resize(params.sample_n);
        std::sort(eligible.begin(), eligible.end(),
                  [](const ExperienceVector& a, const ExperienceVector& b) { return a.creator_id < b.creator_id; });

        for (const auto& ev : eligible) {
            const auto used_t = concept_usage(space.corpus, space.sliced, space.vocab, ev.creator_id, t);
            const auto used_t1 = concept_usage(space.corpus, space.sliced, space.vocab, ev.creator_id, t + 1);
            std::vector<std::pair<double, std::size_t>> ranked;
            for (Eigen::Index w = 0; w < from.rows(); ++w) {
                const auto idx = static_cast<std::size_t>(w);
                if (used_t.count(idx)) continue;
                const Vector v = from.row(w).transpose();
                if (v.squaredNorm() == 0.0) continue;
                ranked.emplace_back(-cosine_similarity(ev.vector, v), idx);
            }
            const std::size_t take = std::min(params.candidates, ranked.size());
            std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end());
            for (std::size_t r = 0; r < take; ++r) {
                const std::size_t w = ranked[r].second;
                const Vector ct = from.row(static_cast<Eigen::Index>(w)).transpose();
                const Vector ct1 = to.row(static_cast<Eigen::Index>(w)).transpose();
                if (ct1.squaredNorm() == 0.0) continue;
                AdoptionRecord rec;
                rec.creator_id = ev.creator_id;
                rec.token = w;
                rec.t = t;
                rec.delta_d = movement_delta(ev.vector, ct, ct1);
                try {
                    rec.theta_v_cos = visual_angle_cos(ev.vector, ct, ct1);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::Degenerate) throw;
                    continue;
                }
                rec.theta_v = std::acos(rec.theta_v_cos);
                rec.adopted = used_t1.count(w) > 0;
                records.push_back(std::move(rec));
            }
        }
    }
    if (eligible_total == 0) throw Error(ErrorKind::InvalidArgument, "no eligible creators");
    return records;
}

OlsFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, std::vector<std::string> names) {
    const auto n = design.rows(), p = design.cols();
    if (y.size() != n) throw Error(ErrorKind::Shape, "ols: outcome length differs from design rows");
    if (n < p || p == 0) throw Error(ErrorKind::Degenerate, "ols: fewer rows than columns");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p) throw Error(ErrorKind::Degenerate, "ols: rank-deficient design");

    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd resid = y - design * beta;
    OlsFit fit;
    fit.n = static_cast<std::size_t>(n);
    fit.residual_ss = resid.squaredNorm();
    fit.coefficients.assign(beta.data(), beta.data() + p);

    // (X^T X)^{-1} = P R^{-1} R^{-T} P^T
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv =
        r.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd cov_perm = rinv * rinv.transpose();
    const auto perm = qr.colsPermutation();
    const Eigen::MatrixXd cov = perm * cov_perm * perm.transpose();
    const double sigma2 = n > p ? fit.residual_ss / static_cast<double>(n - p) : 0.0;
    for (Eigen::Index j = 0; j < p; ++j) fit.std_errors.push_back(std::sqrt(sigma2 * cov(j, j)));

    if (names.empty()) {
        for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
    }
    if (names.size() != static_cast<std::size_t>(p)) throw Error(ErrorKind::Shape, "ols: wrong number of names");
    fit.names = std::move(names);
    return fit;
}

void demean_by_group(Eigen::MatrixXd& design, Eigen::VectorXd& y, std::span<const std::string> groups) {
    if (static_cast<Eigen::Index>(groups.size()) != design.rows() || y.size() != design.rows()) {
        throw Error(ErrorKind::Shape, "demean: group labels do not match rows");
    }
    std::map<std::string, std::vector<Eigen::Index>> members;
    for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(static_cast<Eigen::Index>(i));
    for (const auto& [g, rows] : members) {
        Eigen::RowVectorXd mean_x = Eigen::RowVectorXd::Zero(design.cols());
        double mean_y = 0.0;
        for (auto r : rows) {
            mean_x += design.row(r);
            mean_y += y(r);
        }
        mean_x /= static_cast<double>(rows.size());
        mean_y /= static_cast<double>(rows.size());
        for (auto r : rows) {
            design.row(r) -= mean_x;
            y(r) -= mean_y;
        }
    }
}

OlsFit fit_adoption(std::span<const AdoptionRecord> records, bool demean_creators) {
    const auto n = static_cast<Eigen::Index>(records.size());
    const Eigen::Index offset = demean_creators ? 0 : 1;
    Eigen::MatrixXd x(n, 3 + offset);
    Eigen::VectorXd y(n);
    std::vector<std::string> groups;
    groups.reserve(records.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        if (offset) x(i, 0) = 1.0;
        x(i, offset) = r.delta_d;
        x(i, offset + 1) = r.theta_v_cos;
        x(i, offset + 2) = r.delta_d * r.theta_v_cos;
        y(i) = r.adopted ? 1.0 : 0.0;
        groups.push_back(r.creator_id);
    }
    std::vector<std::string> names = {"delta_d", "theta_v_cos", "delta_d:theta_v_cos"};
    if (demean_creators) {
        demean_by_group(x, y, groups);
    } else {
        names.insert(names.begin(), "intercept");
    }
    return ols_fit(x, y, std::move(names));
}

}  // namespace dynspace
