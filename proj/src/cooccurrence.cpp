#include "dynspace/cooccurrence.hpp"

#include "dynspace/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace dynspace {

CooccurrenceCounts::CooccurrenceCounts(std::size_t period, std::size_t n, std::vector<PairCount> pairs)
    : period_(period), n_(n), pairs_(std::move(pairs)), row_sums_(n, 0) {
    std::sort(pairs_.begin(), pairs_.end(), [](const PairCount& a, const PairCount& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    for (const auto& p : pairs_) {
        if (p.i >= p.j || p.j >= n_) throw Error(ErrorKind::Shape, "co-occurrence pair out of range");
        row_sums_[p.i] += p.count;
        row_sums_[p.j] += p.count;
        total_ += 2 * p.count;
    }
}

std::uint64_t CooccurrenceCounts::count(std::size_t i, std::size_t j) const {
    if (i == j) return 0;
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(pairs_.begin(), pairs_.end(), std::pair{i, j},
                               [](const PairCount& p, const std::pair<std::size_t, std::size_t>& key) {
                                   return p.i != key.first ? p.i < key.first : p.j < key.second;
                               });
    if (it != pairs_.end() && it->i == i && it->j == j) return it->count;
    return 0;
}

CooccurrenceCounts CooccurrenceCounts::scaled(std::uint64_t factor) const {
    std::vector<PairCount> out = pairs_;
    for (auto& p : out) p.count *= factor;
    return CooccurrenceCounts(period_, n_, std::move(out));
}

CooccurrenceCounts count_cooccurrences(std::span<const std::vector<std::int32_t>> encoded_docs,
                                       std::size_t n, std::size_t window, std::size_t period) {
    if (window < 1) throw Error(ErrorKind::InvalidArgument, "co-occurrence window must be >= 1");
    std::unordered_map<std::uint64_t, std::uint64_t> acc;
    for (const auto& ids : encoded_docs) {
        for (std::size_t p = 0; p < ids.size(); ++p) {
            const std::int32_t a = ids[p];
            if (a < 0) continue;
            const std::size_t stop = std::min(ids.size(), p + window + 1);
            for (std::size_t q = p + 1; q < stop; ++q) {
                const std::int32_t b = ids[q];
                if (b < 0 || b == a) continue;
                const auto lo = static_cast<std::uint64_t>(std::min(a, b));
                const auto hi = static_cast<std::uint64_t>(std::max(a, b));
                if (hi >= n) throw Error(ErrorKind::Shape, "token index exceeds vocabulary size");
                ++acc[(lo << 32) | hi];
            }
        }
    }
    std::vector<PairCount> pairs;
    pairs.reserve(acc.size());
    for (const auto& [key, c] : acc) {
        pairs.push_back({static_cast<std::uint32_t>(key >> 32), static_cast<std::uint32_t>(key & 0xFFFFFFFFu), c});
    }
    return CooccurrenceCounts(period, n, std::move(pairs));
}

CooccurrenceCounts count_cooccurrences(const Corpus& corpus, const Slice& slice, const Vocabulary& vocab,
                                       std::size_t window) {
    std::vector<std::vector<std::int32_t>> encoded;
    encoded.reserve(slice.docs.size());
    for (std::size_t i : slice.docs) encoded.push_back(encode(corpus.doc(i), vocab));
    return count_cooccurrences(encoded, vocab.size(), window, slice.period);
}

PpmiMatrix::PpmiMatrix(std::size_t period, std::size_t n, SparseMatrix matrix)
    : period_(period), n_(n), matrix_(std::move(matrix)) {
    if (matrix_.rows() != static_cast<Eigen::Index>(n) || matrix_.cols() != static_cast<Eigen::Index>(n)) {
        throw Error(ErrorKind::Shape, "PPMI matrix must be n x n");
    }
    matrix_.makeCompressed();
}

double PpmiMatrix::value(std::size_t i, std::size_t j) const {
    return matrix_.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

std::size_t PpmiMatrix::upper_nonzeros() const {
    std::size_t nnz = 0;
    for (Eigen::Index c = 0; c < matrix_.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(matrix_, c); it; ++it) {
            if (it.row() < it.col()) ++nnz;
        }
    }
    return nnz;
}

PpmiMatrix build_ppmi(const CooccurrenceCounts& counts, double shift) {
    if (counts.total() == 0) throw Error(ErrorKind::InvalidArgument, "empty co-occurrence");
    const auto& rows = counts.row_sums();
    const double total = static_cast<double>(counts.total());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(2 * counts.pairs().size());
    for (const auto& p : counts.pairs()) {
        const double num = static_cast<double>(p.count) * total;
        const double den = static_cast<double>(rows[p.i]) * static_cast<double>(rows[p.j]);
        const double pmi = std::log(num / den) - shift;
        if (!(pmi > 0.0)) continue;
        // one evaluation per unordered pair, mirrored: exact symmetry
        triplets.emplace_back(static_cast<int>(p.i), static_cast<int>(p.j), pmi);
        triplets.emplace_back(static_cast<int>(p.j), static_cast<int>(p.i), pmi);
    }
    const auto n = static_cast<Eigen::Index>(counts.n());
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return PpmiMatrix(counts.period(), counts.n(), std::move(m));
}

void write_ppmi(std::ostream& out, const PpmiMatrix& ppmi) {
    struct Entry {
        Eigen::Index i, j;
        double v;
    };
    std::vector<Entry> entries;
    const auto& m = ppmi.matrix();
    for (Eigen::Index c = 0; c < m.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
            if (it.row() < it.col()) entries.push_back({it.row(), it.col(), it.value()});
        }
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
    out << ppmi.period() << ' ' << ppmi.n() << ' ' << entries.size() << '\n';
    char buf[64];
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof buf, "%.17g", e.v);
        out << e.i << ' ' << e.j << ' ' << buf << '\n';
    }
}

PpmiMatrix read_ppmi(std::istream& in) {
    std::size_t period = 0, n = 0, nnz = 0;
    if (!(in >> period >> n >> nnz)) throw Error(ErrorKind::Format, "PPMI file: bad header");
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(2 * nnz);
    for (std::size_t e = 0; e < nnz; ++e) {
        std::size_t i = 0, j = 0;
        std::string value;
        if (!(in >> i >> j >> value)) throw Error(ErrorKind::Format, "PPMI file: truncated");
        double v = 0.0;
        try {
            v = std::stod(value);
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::Format, "PPMI file: bad value " + value);
        }
        if (i >= j || j >= n || !std::isfinite(v) || v <= 0.0) {
            throw Error(ErrorKind::Format, "PPMI file: invalid entry");
        }
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
        triplets.emplace_back(static_cast<int>(j), static_cast<int>(i), v);
    }
    SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.setFromTriplets(triplets.begin(), triplets.end());
    return PpmiMatrix(period, n, std::move(m));
}

}  // namespace dynspace
