#include "dynspace/flow.hpp"

#include "dynspace/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace dynspace {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over (seed, stream)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

bool lex_less(const Eigen::MatrixXd& points, std::size_t a, std::size_t b) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
        const double x = points(static_cast<Eigen::Index>(a), c);
        const double y = points(static_cast<Eigen::Index>(b), c);
        if (x != y) return x < y;
    }
    return false;
}

double cosine_to(const Vector& focal, const Vector& v) {
    return v.dot(focal) / std::sqrt(v.squaredNorm() * focal.squaredNorm());
}

Vector centroid(const std::vector<std::size_t>& members, const Eigen::MatrixXd& slice) {
    Vector sum = Vector::Zero(slice.cols());
    for (std::size_t w : members) sum += slice.row(static_cast<Eigen::Index>(w)).transpose();
    return sum / static_cast<double>(members.size());
}

Eigen::MatrixXd project_docs(const SpaceView& space, std::size_t t) {
    std::vector<Vector> rows;
    for (std::size_t i : space.sliced.slice(t).docs) {
        const auto& doc = space.corpus.doc(i);
        if (doc.split != Split::Project) continue;
        try {
            Vector v = document_vector(doc, space.vocab, space.tensor.slice(t));
            if (v.squaredNorm() > 0.0) rows.push_back(std::move(v));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Degenerate) throw;
        }
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(space.tensor.k()));
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    return out;
}

struct PairInput {
    std::size_t t = 0;
    Eigen::MatrixXd focals;
    Eigen::MatrixXd docs;
};

std::vector<PairInput> pair_inputs(const SpaceView& space, const FlowParams& params) {
    const std::size_t T = space.tensor.T();
    if (T < 2) throw Error(ErrorKind::InvalidArgument, "flow validation needs at least 2 slices");
    std::vector<std::size_t> pairs;
    if (params.mode == FlowMode::FinalSlice) {
        pairs.push_back(T - 2);
    } else {
        for (std::size_t t = 0; t + 1 < T; ++t) pairs.push_back(t);
    }
    std::vector<PairInput> out;
    for (std::size_t t : pairs) {
        PairInput in;
        in.t = t;
        in.docs = project_docs(space, t + 1);
        if (in.docs.rows() == 0) continue;
        const std::size_t source = params.mode == FlowMode::FinalSlice ? T - 1 : t;
        in.focals = sample_focal_points(space.tensor.slice(source), params.m, mix_seed(params.seed, t),
                                        params.sampling);
        out.push_back(std::move(in));
    }
    if (out.empty()) throw Error(ErrorKind::InvalidArgument, "no projectable project docs in any later slice");
    return out;
}

std::vector<std::optional<double>> in_flows(const PairInput& in, const SpaceView& space, const InFlowParams& p) {
    std::vector<std::optional<double>> out(static_cast<std::size_t>(in.focals.rows()));
    for (Eigen::Index f = 0; f < in.focals.rows(); ++f) {
        try {
            out[static_cast<std::size_t>(f)] =
                in_flow(in.focals.row(f).transpose(), space.tensor.slice(in.t), space.tensor.slice(in.t + 1), p);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Degenerate) throw;
        }
    }
    return out;
}

std::vector<std::size_t> counts_for(const PairInput& in, double t2) {
    const double radius = innovation_radius(in.focals, in.docs, t2);
    std::vector<std::size_t> out(static_cast<std::size_t>(in.focals.rows()));
    for (Eigen::Index f = 0; f < in.focals.rows(); ++f) {
        out[static_cast<std::size_t>(f)] = innovation_count(in.focals.row(f).transpose(), in.docs, radius);
    }
    return out;
}

}  // namespace

Eigen::MatrixXd sample_focal_points(const Eigen::MatrixXd& slice, std::size_t m, std::uint64_t seed,
                                    FocalSampling mode) {
    if (m < 1) throw Error(ErrorKind::InvalidArgument, "need at least one focal point");
    if (slice.rows() == 0 || slice.cols() == 0) throw Error(ErrorKind::InvalidArgument, "empty slice");
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m), slice.cols());
    if (mode == FocalSampling::WordPositions) {
        std::uniform_int_distribution<Eigen::Index> pick(0, slice.rows() - 1);
        for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) = slice.row(pick(rng));
        return out;
    }
    const Eigen::RowVectorXd lo = slice.colwise().minCoeff();
    const Eigen::RowVectorXd hi = slice.colwise().maxCoeff();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            const double x = lo(c) + unit(rng) * (hi(c) - lo(c));
            out(r, c) = std::clamp(x, lo(c), hi(c));
        }
    }
    return out;
}

double pairwise_distance(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                         Metric metric) {
    if (metric == Metric::Euclidean) return (a - b).norm();
    const double na = a.squaredNorm(), nb = b.squaredNorm();
    if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::Degenerate, "zero vector");
    return 1.0 - std::clamp(a.dot(b) / std::sqrt(na * nb), -1.0, 1.0);
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw Error(ErrorKind::InvalidArgument, "percentile of an empty set");
    if (!(p >= 0.0 && p <= 100.0)) throw Error(ErrorKind::InvalidArgument, "percentile outside [0, 100]");
    const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    const double a = values[lo];
    if (hi == lo) return a;
    const double b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
    return a + (pos - static_cast<double>(lo)) * (b - a);
}

ClusterAssignment density_peak_cluster(const Eigen::MatrixXd& points, const DensityPeakParams& params) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "density-peak clustering needs at least one point");
    ClusterAssignment out;
    out.labels.assign(n, 0);
    out.rho.assign(n, 0.0);
    out.delta.assign(n, 0.0);
    if (n == 1) {
        out.peaks = {0};
        return out;
    }

    Eigen::MatrixXd dist(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<double> upper;
    upper.reserve(n * (n - 1) / 2);
    double max_dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = pairwise_distance(points.row(static_cast<Eigen::Index>(i)).transpose(),
                                               points.row(static_cast<Eigen::Index>(j)).transpose(), params.metric);
            dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
            dist(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
            upper.push_back(d);
            max_dist = std::max(max_dist, d);
        }
    }

    double dc = percentile(upper, params.bandwidth_percentile);
    if (!(dc > 0.0)) {
        double smallest = std::numeric_limits<double>::infinity();
        for (double d : upper) {
            if (d > 0.0) smallest = std::min(smallest, d);
        }
        dc = std::isfinite(smallest) ? smallest : 1.0;
    }

    std::vector<double> contrib(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double r = dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / dc;
            contrib[c++] = std::exp(-r * r);
        }
        std::sort(contrib.begin(), contrib.end());
        out.rho[i] = std::accumulate(contrib.begin(), contrib.end(), 0.0);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (out.rho[a] != out.rho[b]) return out.rho[a] > out.rho[b];
        if (lex_less(points, a, b)) return true;
        if (lex_less(points, b, a)) return false;
        return a < b;
    });
    std::vector<std::size_t> rank(n);
    for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;

    std::vector<std::size_t> parent(n, 0);
    out.delta[order[0]] = max_dist;
    parent[order[0]] = order[0];
    for (std::size_t r = 1; r < n; ++r) {
        const std::size_t i = order[r];
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = order[0];
        for (std::size_t q = 0; q < r; ++q) {
            const std::size_t j = order[q];
            const double d = dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        out.delta[i] = best;
        parent[i] = best_j;
    }

    std::vector<double> gamma(n);
    for (std::size_t i = 0; i < n; ++i) gamma[i] = out.rho[i] * out.delta[i];
    std::vector<std::size_t> by_gamma(n);
    std::iota(by_gamma.begin(), by_gamma.end(), std::size_t{0});
    std::sort(by_gamma.begin(), by_gamma.end(), [&](std::size_t a, std::size_t b) {
        if (gamma[a] != gamma[b]) return gamma[a] > gamma[b];
        return rank[a] < rank[b];
    });

    std::size_t n_peaks = 1;
    if (params.n_clusters > 0) {
        n_peaks = std::min(params.n_clusters, n);
    } else {
        // Gaps are taken in log gamma over the top ceil(sqrt(n)) + 1 values so
        // the inflated delta of the densest point does not dominate.
        const auto window = std::min(n, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))) + 1);
        double widest = -1.0;
        for (std::size_t m = 1; m < window; ++m) {
            const double lo = gamma[by_gamma[m]];
            if (!(lo > 0.0)) break;
            const double gap = std::log(gamma[by_gamma[m - 1]]) - std::log(lo);
            if (gap > widest) {
                widest = gap;
                n_peaks = m;
            }
        }
    }

    std::vector<bool> is_peak(n, false);
    for (std::size_t p = 0; p < n_peaks; ++p) is_peak[by_gamma[p]] = true;
    is_peak[order[0]] = true;

    constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> label(n, kUnset);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = order[r];
        if (is_peak[i]) {
            label[i] = out.peaks.size();
            out.peaks.push_back(i);
        } else {
            label[i] = label[parent[i]];
        }
    }
    out.labels = std::move(label);
    return out;
}

std::vector<std::size_t> nearest_words(const Vector& focal, const Eigen::MatrixXd& slice, double percent) {
    if (!(percent > 0.0 && percent <= 100.0)) throw Error(ErrorKind::InvalidArgument, "t1 percent outside (0, 100]");
    if (focal.squaredNorm() == 0.0) throw Error(ErrorKind::Degenerate, "zero focal point");
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(static_cast<std::size_t>(slice.rows()));
    for (Eigen::Index w = 0; w < slice.rows(); ++w) {
        const Vector v = slice.row(w).transpose();
        if (v.squaredNorm() == 0.0) continue;
        ranked.emplace_back(1.0 - cosine_to(focal, v), static_cast<std::size_t>(w));
    }
    const auto take = std::min(ranked.size(), static_cast<std::size_t>(std::ceil(
                                                   percent / 100.0 * static_cast<double>(slice.rows()))));
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end());
    std::vector<std::size_t> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(ranked[i].second);
    return out;
}

std::vector<std::vector<std::size_t>> neighbourhood_clusters(const Vector& focal, const Eigen::MatrixXd& slice,
                                                             const InFlowParams& params) {
    const auto words = nearest_words(focal, slice, params.t1_percent);
    if (words.size() < params.min_cluster_input || words.empty()) {
        throw Error(ErrorKind::Degenerate, "only " + std::to_string(words.size()) +
                                               " words in range, below the minimum cluster input");
    }
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(words.size()), slice.cols());
    for (std::size_t r = 0; r < words.size(); ++r) {
        pts.row(static_cast<Eigen::Index>(r)) = slice.row(static_cast<Eigen::Index>(words[r]));
    }
    const auto assignment = density_peak_cluster(pts, params.clustering);
    std::vector<std::vector<std::size_t>> clusters(assignment.n_clusters());
    for (std::size_t r = 0; r < words.size(); ++r) clusters[assignment.labels[r]].push_back(words[r]);
    return clusters;
}

double cluster_in_flow(const Vector& focal, const std::vector<std::vector<std::size_t>>& clusters,
                       const Eigen::MatrixXd& from, const Eigen::MatrixXd& to) {
    if (focal.squaredNorm() == 0.0) throw Error(ErrorKind::Degenerate, "zero focal point");
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& members : clusters) {
        if (members.empty()) continue;
        const Vector a = centroid(members, from);
        const Vector b = centroid(members, to);
        if (a.squaredNorm() == 0.0 || b.squaredNorm() == 0.0) continue;
        sum += cosine_to(focal, b) - cosine_to(focal, a);
        ++used;
    }
    if (used == 0) throw Error(ErrorKind::Degenerate, "no cluster with a nonzero centroid");
    return sum / static_cast<double>(used);
}

double in_flow(const Vector& focal, const Eigen::MatrixXd& from, const Eigen::MatrixXd& to,
               const InFlowParams& params) {
    if (from.rows() != to.rows() || from.cols() != to.cols()) throw Error(ErrorKind::Shape, "slice shapes differ");
    return cluster_in_flow(focal, neighbourhood_clusters(focal, from, params), from, to);
}

double innovation_radius(const Eigen::MatrixXd& focals, const Eigen::MatrixXd& docs, double t2_percent) {
    if (docs.rows() == 0) throw Error(ErrorKind::InvalidArgument, "no projectable project docs");
    if (!(t2_percent >= 0.0 && t2_percent <= 100.0)) throw Error(ErrorKind::InvalidArgument, "t2 outside [0, 100]");
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(focals.rows() * docs.rows()));
    for (Eigen::Index f = 0; f < focals.rows(); ++f) {
        for (Eigen::Index j = 0; j < docs.rows(); ++j) {
            d.push_back(pairwise_distance(focals.row(f).transpose(), docs.row(j).transpose(), Metric::Cosine));
        }
    }
    return percentile(std::move(d), t2_percent);
}

std::size_t innovation_count(const Vector& focal, const Eigen::MatrixXd& docs, double radius) {
    std::size_t c = 0;
    for (Eigen::Index j = 0; j < docs.rows(); ++j) {
        if (pairwise_distance(focal, docs.row(j).transpose(), Metric::Cosine) <= radius) ++c;
    }
    return c;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorKind::Shape, "pearson: series lengths differ");
    if (x.size() < 2) throw Error(ErrorKind::InvalidArgument, "pearson: need at least 2 points");
    const double nx = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nx;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / nx;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::Degenerate, "constant series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<FlowRow> flow_rows(const Eigen::MatrixXd& focals, const Eigen::MatrixXd& from, const Eigen::MatrixXd& to,
                               const Eigen::MatrixXd& doc_vectors, std::size_t slice_pair, double t1_percent,
                               double t2_percent, const InFlowParams& inflow, std::size_t* skipped) {
    InFlowParams p = inflow;
    p.t1_percent = t1_percent;
    const double radius = innovation_radius(focals, doc_vectors, t2_percent);
    std::vector<FlowRow> rows;
    std::size_t n_skipped = 0;
    for (Eigen::Index f = 0; f < focals.rows(); ++f) {
        const Vector focal = focals.row(f).transpose();
        double flow = 0.0;
        try {
            flow = in_flow(focal, from, to, p);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Degenerate) throw;
            ++n_skipped;
            continue;
        }
        rows.push_back({slice_pair, static_cast<std::size_t>(f), t1_percent, t2_percent, flow,
                        innovation_count(focal, doc_vectors, radius)});
    }
    if (skipped) *skipped = n_skipped;
    return rows;
}

FlowSummary summarize_flow(std::span<const FlowRow> rows, double t1, double t2, std::size_t skipped) {
    FlowSummary s;
    s.t1 = t1;
    s.t2 = t2;
    s.n_points = rows.size();
    s.skipped = skipped;
    std::vector<double> x, y;
    x.reserve(rows.size());
    y.reserve(rows.size());
    for (const auto& r : rows) {
        x.push_back(r.in_flow);
        y.push_back(static_cast<double>(r.innovation_count));
    }
    try {
        s.pearson_r = pearson(x, y);
    } catch (const Error&) {
        s.pearson_r.reset();
    }
    return s;
}

FlowResult flow_validation(const SpaceView& space, const FlowParams& params) {
    FlowResult result;
    std::size_t skipped = 0;
    for (const auto& in : pair_inputs(space, params)) {
        std::size_t s = 0;
        auto rows = flow_rows(in.focals, space.tensor.slice(in.t), space.tensor.slice(in.t + 1), in.docs, in.t,
                              params.t1_percent, params.t2_percent, params.inflow, &s);
        skipped += s;
        result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
    result.summary = summarize_flow(result.rows, params.t1_percent, params.t2_percent, skipped);
    return result;
}

std::vector<FlowSummary> flow_grid(const SpaceView& space, const FlowParams& params,
                                   std::span<const double> t1_values, std::span<const double> t2_values) {
    const auto inputs = pair_inputs(space, params);
    // flows[t1][pair][focal], counts[t2][pair][focal]
    std::vector<std::vector<std::vector<std::optional<double>>>> flows;
    for (double t1 : t1_values) {
        InFlowParams p = params.inflow;
        p.t1_percent = t1;
        auto& per_pair = flows.emplace_back();
        for (const auto& in : inputs) per_pair.push_back(in_flows(in, space, p));
    }
    std::vector<std::vector<std::vector<std::size_t>>> counts;
    for (double t2 : t2_values) {
        auto& per_pair = counts.emplace_back();
        for (const auto& in : inputs) per_pair.push_back(counts_for(in, t2));
    }
    std::vector<FlowSummary> out;
    for (std::size_t a = 0; a < t1_values.size(); ++a) {
        for (std::size_t b = 0; b < t2_values.size(); ++b) {
            std::vector<FlowRow> rows;
            std::size_t skipped = 0;
            for (std::size_t p = 0; p < inputs.size(); ++p) {
                for (std::size_t f = 0; f < flows[a][p].size(); ++f) {
                    if (!flows[a][p][f]) {
                        ++skipped;
                        continue;
                    }
                    rows.push_back({inputs[p].t, f, t1_values[a], t2_values[b], *flows[a][p][f], counts[b][p][f]});
                }
            }
            out.push_back(summarize_flow(rows, t1_values[a], t2_values[b], skipped));
        }
    }
    return out;
}

}  // namespace dynspace
