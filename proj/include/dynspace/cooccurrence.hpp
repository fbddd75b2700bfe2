#pragma once

#include "dynspace/corpus.hpp"

#include <Eigen/SparseCore>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace dynspace {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// One unordered pair, i < j.
struct PairCount {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    std::uint64_t count = 0;
};

/// Symmetric co-occurrence counts of one slice, stored as the strict upper
/// triangle. Row sums and the total refer to the full symmetric matrix.
class CooccurrenceCounts {
public:
    CooccurrenceCounts(std::size_t period, std::size_t n, std::vector<PairCount> pairs);

    std::size_t period() const noexcept { return period_; }
    std::size_t n() const noexcept { return n_; }
    const std::vector<PairCount>& pairs() const noexcept { return pairs_; }
    const std::vector<std::uint64_t>& row_sums() const noexcept { return row_sums_; }
    std::uint64_t total() const noexcept { return total_; }
    std::uint64_t count(std::size_t i, std::size_t j) const;

    /// Every count multiplied by `factor`.
    CooccurrenceCounts scaled(std::uint64_t factor) const;

private:
    std::size_t period_;
    std::size_t n_;
    std::vector<PairCount> pairs_;
    std::vector<std::uint64_t> row_sums_;
    std::uint64_t total_ = 0;
};

/// Uniform-weight window counting. Each in-vocabulary token is paired with every
/// in-vocabulary token at most `window` positions after it in the same document;
/// out-of-vocabulary tokens keep their positions. Self pairs are not counted.
CooccurrenceCounts count_cooccurrences(std::span<const std::vector<std::int32_t>> encoded_docs,
                                       std::size_t n, std::size_t window = 5, std::size_t period = 0);

CooccurrenceCounts count_cooccurrences(const Corpus& corpus, const Slice& slice,
                                       const Vocabulary& vocab, std::size_t window = 5);

class PpmiMatrix {
public:
    PpmiMatrix(std::size_t period, std::size_t n, SparseMatrix matrix);

    std::size_t period() const noexcept { return period_; }
    std::size_t n() const noexcept { return n_; }
    /// Full symmetric storage (both triangles).
    const SparseMatrix& matrix() const noexcept { return matrix_; }
    double value(std::size_t i, std::size_t j) const;
    /// Stored entries with i < j.
    std::size_t upper_nonzeros() const;

private:
    std::size_t period_;
    std::size_t n_;
    SparseMatrix matrix_;
};

/// Y[i,j] = max(0, log(count(i,j) * total / (rowsum(i) * rowsum(j))) - shift).
/// Zeros are not stored. Throws Error(InvalidArgument, "empty co-occurrence")
/// when the total pair count is zero.
PpmiMatrix build_ppmi(const CooccurrenceCounts& counts, double shift = 0.0);

/// Text format: header `t n nnz`, then `i j value` with i < j sorted by (i, j).
void write_ppmi(std::ostream& out, const PpmiMatrix& ppmi);
PpmiMatrix read_ppmi(std::istream& in);

}  // namespace dynspace
