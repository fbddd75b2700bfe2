#include "dynspace/dynembed.hpp"

#include "dynspace/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

namespace dynspace {

namespace {

constexpr char kMagic[4] = {'D', 'Y', 'N', 'E'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 3 * 4 + 32;
constexpr int kMaxHalvings = 20;

void check_shapes(const EmbeddingTensor& tensor, TargetSpan targets) {
    if (targets.empty()) throw Error(ErrorKind::Shape, "empty target sequence");
    if (tensor.T() != targets.size()) {
        throw Error(ErrorKind::Shape, "tensor has " + std::to_string(tensor.T()) + " slices, targets " +
                                          std::to_string(targets.size()));
    }
    const auto n = static_cast<Eigen::Index>(tensor.n());
    for (std::size_t t = 0; t < targets.size(); ++t) {
        if (targets[t].rows() != n || targets[t].cols() != n) {
            throw Error(ErrorKind::Shape, "target " + std::to_string(t) + " is not " + std::to_string(n) +
                                              " x " + std::to_string(n));
        }
    }
}

double reconstruction(const SparseMatrix& y, const Eigen::MatrixXd& u) {
    const Eigen::MatrixXd yu = y * u;
    const double cross = (u.array() * yu.array()).sum();
    const double gram = (u.transpose() * u).squaredNorm();
    return 0.5 * (y.squaredNorm() - 2.0 * cross + gram);
}

// Terms of the objective that depend on slice t.
double block_objective(const EmbeddingTensor& tensor, TargetSpan targets, std::size_t t,
                       const Eigen::MatrixXd& u, double lambda, double tau) {
    double f = reconstruction(targets[t], u) + 0.5 * lambda * u.squaredNorm();
    if (tau != 0.0) {
        if (t > 0) f += 0.5 * tau * (tensor.slice(t - 1) - u).squaredNorm();
        if (t + 1 < tensor.T()) f += 0.5 * tau * (u - tensor.slice(t + 1)).squaredNorm();
    }
    return f;
}

Eigen::MatrixXd solve_right(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    // U a = b with a symmetric k x k
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Eigen::VectorXd d = ldlt.vectorD();
        if (d.minCoeff() > 1e-12 * std::max(1.0, d.maxCoeff())) {
            return ldlt.solve(b.transpose()).transpose();
        }
    }
    return a.completeOrthogonalDecomposition().solve(b.transpose()).transpose();
}

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

TensorHeader parse_header(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kHeaderBytes) throw Error(ErrorKind::Format, "embedding file truncated");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(ErrorKind::Format, "embedding file: bad magic");
    TensorHeader h;
    h.version = get_u32(bytes.data() + 4);
    if (h.version != kVersion) {
        throw Error(ErrorKind::Format, "embedding file: unsupported version " + std::to_string(h.version));
    }
    h.T = get_u32(bytes.data() + 8);
    h.n = get_u32(bytes.data() + 12);
    h.k = get_u32(bytes.data() + 16);
    std::memcpy(h.fingerprint.data(), bytes.data() + 20, 32);
    return h;
}

std::vector<std::uint8_t> read_all(std::istream& in) {
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

void TrainConfig::validate() const {
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
    if (iterations < 1) throw Error(ErrorKind::InvalidArgument, "iterations must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidArgument, "lambda must be >= 0");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw Error(ErrorKind::InvalidArgument, "tau must be >= 0");
    if (init_scale && !(*init_scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "init_scale must be > 0");
}

EmbeddingTensor::EmbeddingTensor(std::size_t T, std::size_t n, std::size_t k) : n_(n), k_(k) {
    slices_.assign(T, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)));
}

bool EmbeddingTensor::all_finite() const {
    for (const auto& s : slices_) {
        if (!s.allFinite()) return false;
    }
    return true;
}

bool EmbeddingTensor::identical(const EmbeddingTensor& other) const {
    if (T() != other.T() || n_ != other.n_ || k_ != other.k_ || fingerprint_ != other.fingerprint_) return false;
    for (std::size_t t = 0; t < T(); ++t) {
        const auto bytes = static_cast<std::size_t>(slices_[t].size()) * sizeof(double);
        if (bytes && std::memcmp(slices_[t].data(), other.slices_[t].data(), bytes) != 0) return false;
    }
    return true;
}

EmbeddingTensor init_embeddings(std::size_t T, std::size_t n, std::size_t k, std::uint64_t seed,
                                std::optional<double> init_scale) {
    if (T == 0 || n == 0 || k == 0) throw Error(ErrorKind::InvalidArgument, "embedding dimensions must be positive");
    const double scale = init_scale.value_or(1.0 / std::sqrt(static_cast<double>(k)));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    EmbeddingTensor tensor(T, n, k);
    for (std::size_t t = 0; t < T; ++t) {
        auto& u = tensor.slice(t);
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            for (Eigen::Index j = 0; j < u.cols(); ++j) u(i, j) = normal(rng);
        }
    }
    return tensor;
}

double objective(const EmbeddingTensor& tensor, TargetSpan targets, double lambda, double tau) {
    check_shapes(tensor, targets);
    double recon = 0.0, ridge = 0.0, smooth = 0.0;
    for (std::size_t t = 0; t < tensor.T(); ++t) {
        recon += reconstruction(targets[t], tensor.slice(t));
        ridge += tensor.slice(t).squaredNorm();
        if (t > 0) smooth += (tensor.slice(t - 1) - tensor.slice(t)).squaredNorm();
    }
    return recon + 0.5 * lambda * ridge + 0.5 * tau * smooth;
}

std::vector<Eigen::MatrixXd> objective_gradient(const EmbeddingTensor& tensor, TargetSpan targets,
                                                double lambda, double tau) {
    check_shapes(tensor, targets);
    std::vector<Eigen::MatrixXd> grad;
    grad.reserve(tensor.T());
    for (std::size_t t = 0; t < tensor.T(); ++t) {
        const auto& u = tensor.slice(t);
        // 2 (U U^T - Y) U without forming U U^T
        Eigen::MatrixXd g = 2.0 * (u * (u.transpose() * u) - targets[t] * u) + lambda * u;
        if (t > 0) g += tau * (u - tensor.slice(t - 1));
        if (t + 1 < tensor.T()) g += tau * (u - tensor.slice(t + 1));
        grad.push_back(std::move(g));
    }
    return grad;
}

SweepStats sweep(EmbeddingTensor& tensor, TargetSpan targets, const TrainConfig& config) {
    check_shapes(tensor, targets);
    if (tensor.k() != config.k) throw Error(ErrorKind::Shape, "tensor dimension differs from config.k");
    SweepStats stats;
    stats.objective_before = objective(tensor, targets, config.lambda, config.tau);

    const std::size_t T = tensor.T();
    for (std::size_t t = 0; t < T; ++t) {
        const Eigen::MatrixXd prev = tensor.slice(t);
        const double neighbours = static_cast<double>((t > 0) + (t + 1 < T));

        Eigen::MatrixXd lhs = 2.0 * (prev.transpose() * prev);
        lhs.diagonal().array() += config.lambda + neighbours * config.tau;
        Eigen::MatrixXd rhs = 2.0 * (targets[t] * prev);
        if (config.tau != 0.0) {
            if (t > 0) rhs += config.tau * tensor.slice(t - 1);
            if (t + 1 < T) rhs += config.tau * tensor.slice(t + 1);
        }
        Eigen::MatrixXd proposal = solve_right(lhs, rhs);
        if (!proposal.allFinite()) {
            throw Error(ErrorKind::Numeric, "non-finite values in block update of slice " + std::to_string(t));
        }

        const double f_prev = block_objective(tensor, targets, t, prev, config.lambda, config.tau);
        double f_new = block_objective(tensor, targets, t, proposal, config.lambda, config.tau);
        if (!std::isfinite(f_prev)) {
            throw Error(ErrorKind::Numeric, "non-finite objective at slice " + std::to_string(t));
        }
        int halvings = 0;
        const Eigen::MatrixXd step = proposal - prev;
        double alpha = 1.0;
        while (!(f_new <= f_prev) && halvings < kMaxHalvings) {
            alpha *= 0.5;
            ++halvings;
            proposal = prev + alpha * step;
            f_new = block_objective(tensor, targets, t, proposal, config.lambda, config.tau);
        }
        stats.halvings += static_cast<std::size_t>(halvings);
        if (f_new <= f_prev) {
            tensor.slice(t) = std::move(proposal);
        } else {
            ++stats.rejected;
        }
    }
    stats.objective_after = objective(tensor, targets, config.lambda, config.tau);
    if (!std::isfinite(stats.objective_after)) throw Error(ErrorKind::Numeric, "non-finite objective after sweep");
    return stats;
}

TrainResult train(TargetSpan targets, const TrainConfig& config) {
    config.validate();
    if (targets.empty()) throw Error(ErrorKind::InvalidArgument, "train: empty target sequence");
    const auto n = static_cast<std::size_t>(targets.front().rows());
    return train(init_embeddings(targets.size(), n, config.k, config.seed, config.init_scale), targets, config);
}

TrainResult train(EmbeddingTensor init, TargetSpan targets, const TrainConfig& config) {
    config.validate();
    check_shapes(init, targets);
    TrainResult result;
    result.tensor = std::move(init);
    result.objective_log.push_back(objective(result.tensor, targets, config.lambda, config.tau));
    for (std::size_t it = 0; it < config.iterations; ++it) {
        result.sweeps.push_back(sweep(result.tensor, targets, config));
        result.objective_log.push_back(result.sweeps.back().objective_after);
    }
    return result;
}

void save_embeddings(const EmbeddingTensor& tensor, std::ostream& out) {
    std::vector<std::uint8_t> buf;
    buf.reserve(kHeaderBytes + 8 * tensor.T() * tensor.n() * tensor.k() + 8);
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<std::uint32_t>(tensor.T()));
    put_u32(buf, static_cast<std::uint32_t>(tensor.n()));
    put_u32(buf, static_cast<std::uint32_t>(tensor.k()));
    buf.insert(buf.end(), tensor.fingerprint().begin(), tensor.fingerprint().end());
    for (const auto& u : tensor.slices()) {
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            for (Eigen::Index j = 0; j < u.cols(); ++j) put_u64(buf, std::bit_cast<std::uint64_t>(u(i, j)));
        }
    }
    put_u64(buf, checksum64(buf));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error(ErrorKind::Io, "failed to write embedding tensor");
}

void save_embeddings(const EmbeddingTensor& tensor, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    save_embeddings(tensor, out);
}

EmbeddingTensor load_embeddings(std::istream& in) {
    const auto bytes = read_all(in);
    const TensorHeader h = parse_header(bytes);
    const std::size_t values = static_cast<std::size_t>(h.T) * h.n * h.k;
    const std::size_t expected = kHeaderBytes + 8 * values + 8;
    if (bytes.size() < expected) throw Error(ErrorKind::Format, "embedding file truncated");
    if (bytes.size() > expected) throw Error(ErrorKind::Format, "embedding file has trailing bytes");
    const std::uint64_t stored = get_u64(bytes.data() + expected - 8);
    if (stored != checksum64(std::span<const std::uint8_t>(bytes.data(), expected - 8))) {
        throw Error(ErrorKind::Checksum, "embedding file checksum mismatch");
    }
    EmbeddingTensor tensor(h.T, h.n, h.k);
    tensor.set_fingerprint(h.fingerprint);
    const std::uint8_t* p = bytes.data() + kHeaderBytes;
    for (std::size_t t = 0; t < h.T; ++t) {
        auto& u = tensor.slice(t);
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            for (Eigen::Index j = 0; j < u.cols(); ++j, p += 8) u(i, j) = std::bit_cast<double>(get_u64(p));
        }
    }
    return tensor;
}

EmbeddingTensor load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return load_embeddings(in);
}

TensorHeader read_tensor_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> head(kHeaderBytes);
    in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
    head.resize(static_cast<std::size_t>(in.gcount()));
    return parse_header(head);
}

void require_fingerprint(const EmbeddingTensor& tensor, const Digest& vocab_fingerprint) {
    if (tensor.fingerprint() != vocab_fingerprint) {
        throw Error(ErrorKind::Checksum, "vocabulary fingerprint mismatch: embeddings were trained on another vocabulary");
    }
}

}  // namespace dynspace
