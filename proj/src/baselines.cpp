#include "gapscore/baselines.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "gapscore/rng.hpp"

namespace gapscore {
namespace {

bool counts_toward_depth(LayerKind kind) { return kind == LayerKind::Dense || kind == LayerKind::Conv; }

Eigen::VectorXd start_vector(Eigen::Index n, Eigen::Index rows) {
    rng::Stream stream(0, rng::Purpose::PowerIterStart, static_cast<std::uint64_t>(rows),
                       static_cast<std::uint64_t>(n));
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = stream.gaussian(static_cast<std::uint64_t>(i));
    const double norm = v.norm();
    if (norm > 0.0) {
        v /= norm;
    } else {
        v.setZero();
        v[0] = 1.0;
    }
    return v;
}

} // namespace

double measure_param_count(const TensorArchive& arch) {
    std::int64_t count = 0;
    for (const auto& layer : arch.layers) count += static_cast<std::int64_t>(layer.data.size());
    return static_cast<double>(count);
}

double measure_vc_proxy(const TensorArchive& arch) {
    const double params = measure_param_count(arch);
    if (params == 0.0) return 0.0;
    int depth = 0;
    for (const auto& layer : arch.layers)
        if (counts_toward_depth(layer.kind)) ++depth;
    return params * static_cast<double>(depth) * std::log2(params);
}

double measure_log_frobenius_product(const TensorArchive& arch) {
    double sum = 0.0;
    int used = 0;
    for (const auto& layer : arch.layers) {
        if (layer.kind == LayerKind::Bias) continue;
        double sq = 0.0;
        for (float w : layer.data) {
            const double d = static_cast<double>(w);
            sq += d * d;
        }
        if (sq == 0.0) throw ScoreError("layer '" + layer.name + "' is all zeros: log norm undefined");
        sum += std::log(std::sqrt(sq));
        ++used;
    }
    if (used == 0) throw ScoreError("archive has no non-bias layer");
    return sum;
}

double spectral_norm(const Eigen::MatrixXd& mat, const PowerIterOptions& opts) {
    if (mat.size() == 0) throw ScoreError("spectral norm of an empty matrix");
    if (mat.isZero(0.0)) return 0.0;

    Eigen::VectorXd v = start_vector(mat.cols(), mat.rows());
    Eigen::VectorXd w(mat.rows()), z(mat.cols());
    double rel_residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_iter; ++it) {
        w.noalias() = mat * v;
        const double lambda = w.squaredNorm(); // Rayleigh quotient of mat^T mat at unit v
        if (lambda == 0.0) {
            v = start_vector(mat.cols(), mat.rows() + static_cast<Eigen::Index>(it) + 1);
            continue;
        }
        z.noalias() = mat.transpose() * w;
        // Eigenvalue certificate: an eigenvalue of mat^T mat lies within
        // ||z - lambda v|| of lambda, so this bounds the relative error.
        rel_residual = (z - lambda * v).norm() / lambda;
        if (rel_residual <= opts.tol) return std::sqrt(lambda);
        v = z / z.norm();
    }
    std::ostringstream msg;
    msg << "power iteration did not converge in " << opts.max_iter << " iterations (relative residual "
        << rel_residual << ", tolerance " << opts.tol << ")";
    throw ScoreError(msg.str());
}

Eigen::MatrixXd layer_as_matrix(const TensorLayer& layer) {
    Eigen::Index rows, cols;
    if (layer.shape.size() == 1) {
        rows = 1;
        cols = static_cast<Eigen::Index>(layer.shape[0]);
    } else {
        rows = static_cast<Eigen::Index>(layer.shape[0]);
        std::int64_t rest = 1;
        for (std::size_t i = 1; i < layer.shape.size(); ++i) rest *= layer.shape[i];
        cols = static_cast<Eigen::Index>(rest);
    }
    using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const RowMajorF>(layer.data.data(), rows, cols).cast<double>();
}

double measure_log_spectral_product(const TensorArchive& arch, const PowerIterOptions& opts) {
    double sum = 0.0;
    int used = 0;
    for (const auto& layer : arch.layers) {
        if (layer.kind == LayerKind::Bias) continue;
        const double sigma = spectral_norm(layer_as_matrix(layer), opts);
        if (sigma == 0.0) throw ScoreError("layer '" + layer.name + "' is all zeros: log norm undefined");
        sum += std::log(sigma);
        ++used;
    }
    if (used == 0) throw ScoreError("archive has no non-bias layer");
    return sum;
}

MeasureVector measure_noisy_oracle(const Population& pop, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw ScoreError("noisy_oracle: sigma must be non-negative");
    MeasureVector mv;
    mv.name = "noisy_oracle";
    if (sigma == 0.0) {
        mv.values = pop.gaps();
        return mv;
    }
    const auto& records = pop.records();
    mv.values.resize(static_cast<Eigen::Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto cell = static_cast<std::uint64_t>(pop.space().cell_index(records[i].coord));
        rng::Stream stream(seed, rng::Purpose::MeasureNoise, cell,
                           static_cast<std::uint64_t>(records[i].replica));
        mv.values[static_cast<Eigen::Index>(i)] = gap(records[i]) + sigma * stream.gaussian(0);
    }
    return mv;
}

} // namespace gapscore
