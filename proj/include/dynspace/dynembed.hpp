#pragma once

#include "dynspace/checksum.hpp"
#include "dynspace/cooccurrence.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace dynspace {

struct TrainConfig {
    std::size_t k = 50;
    std::size_t iterations = 10;
    double lambda = 10.0;
    double tau = 50.0;
    std::uint64_t seed = 1;
    /// Standard deviation of the Gaussian initialization; 1/sqrt(k) when unset.
    std::optional<double> init_scale;

    void validate() const;
};

/// T aligned n x k embedding slices plus the fingerprint of the vocabulary
/// they index.
class EmbeddingTensor {
public:
    EmbeddingTensor() = default;
    EmbeddingTensor(std::size_t T, std::size_t n, std::size_t k);

    std::size_t T() const noexcept { return slices_.size(); }
    std::size_t n() const noexcept { return n_; }
    std::size_t k() const noexcept { return k_; }

    Eigen::MatrixXd& slice(std::size_t t) { return slices_.at(t); }
    const Eigen::MatrixXd& slice(std::size_t t) const { return slices_.at(t); }
    const std::vector<Eigen::MatrixXd>& slices() const noexcept { return slices_; }

    const Digest& fingerprint() const noexcept { return fingerprint_; }
    void set_fingerprint(const Digest& fp) { fingerprint_ = fp; }

    bool all_finite() const;
    /// Bitwise equality of shape, fingerprint and every value.
    bool identical(const EmbeddingTensor& other) const;

private:
    std::vector<Eigen::MatrixXd> slices_;
    std::size_t n_ = 0;
    std::size_t k_ = 0;
    Digest fingerprint_{};
};

using TargetSpan = std::span<const SparseMatrix>;

/// I.i.d. N(0, init_scale^2) entries drawn in slice-major, row-major order.
EmbeddingTensor init_embeddings(std::size_t T, std::size_t n, std::size_t k, std::uint64_t seed,
                                std::optional<double> init_scale = std::nullopt);

/// 1/2 sum_t ||Y(t) - U(t)U(t)^T||_F^2 + lambda/2 sum_t ||U(t)||_F^2
///   + tau/2 sum_{t>=2} ||U(t-1) - U(t)||_F^2
///
/// Zeros of the sparse targets count as zeros. The reconstruction term is
/// expanded as ||Y||^2 - 2 tr(U^T Y U) + ||U^T U||^2 so no n x n product is formed.
double objective(const EmbeddingTensor& tensor, TargetSpan targets, double lambda, double tau);

/// Analytic gradient of objective(), one n x k block per slice.
std::vector<Eigen::MatrixXd> objective_gradient(const EmbeddingTensor& tensor, TargetSpan targets,
                                                double lambda, double tau);

struct SweepStats {
    double objective_before = 0.0;
    double objective_after = 0.0;
    std::size_t halvings = 0;  // total step halvings over all blocks
    std::size_t rejected = 0;  // blocks left unchanged
};

/// One pass of block updates t = 0..T-1. Each block solves the linearized ridge
/// system U (2 Uh^T Uh + (lambda + c tau) I) = 2 Y Uh + tau * (neighbour sum),
/// whose fixed points are the stationary points of objective(). A step that
/// raises the objective is halved toward the previous iterate up to 20 times,
/// then dropped. Throws Error(Numeric) naming the slice on non-finite values.
SweepStats sweep(EmbeddingTensor& tensor, TargetSpan targets, const TrainConfig& config);

struct TrainResult {
    EmbeddingTensor tensor;
    /// Objective at initialization followed by the value after every sweep.
    std::vector<double> objective_log;
    std::vector<SweepStats> sweeps;
};

TrainResult train(TargetSpan targets, const TrainConfig& config);
TrainResult train(EmbeddingTensor init, TargetSpan targets, const TrainConfig& config);

/// Binary "DYNE" format, version 1: magic, u32 version, u32 T, n, k, 32-byte
/// vocabulary fingerprint, T*n*k little-endian f64 (slice-major, row-major),
/// then a u64 checksum of every preceding byte.
void save_embeddings(const EmbeddingTensor& tensor, std::ostream& out);
void save_embeddings(const EmbeddingTensor& tensor, const std::filesystem::path& path);
EmbeddingTensor load_embeddings(std::istream& in);
EmbeddingTensor load_embeddings(const std::filesystem::path& path);

struct TensorHeader {
    std::uint32_t version = 0;
    std::uint32_t T = 0, n = 0, k = 0;
    Digest fingerprint{};
};
TensorHeader read_tensor_header(const std::filesystem::path& path);

/// Throws Error(Checksum) when the tensor was trained on another vocabulary.
void require_fingerprint(const EmbeddingTensor& tensor, const Digest& vocab_fingerprint);

}  // namespace dynspace
