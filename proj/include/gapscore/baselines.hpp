#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "gapscore/population.hpp"
#include "gapscore/tensor_archive.hpp"

namespace gapscore {

// Total element count across all layers.
double measure_param_count(const TensorArchive& arch);

// params * depth * log2(params) with depth = number of dense/conv layers;
// 0 for an empty archive.
double measure_vc_proxy(const TensorArchive& arch);

// Sum over non-bias layers of log ||W||_F (natural log). Throws ScoreError
// on an all-zero layer or when no non-bias layer exists.
double measure_log_frobenius_product(const TensorArchive& arch);

struct PowerIterOptions {
    double tol = 1e-6; // relative eigenvalue residual ||A^T A v - lambda v|| / lambda
    int max_iter = 1000;
};

// Largest singular value by power iteration on A^T A with a deterministic
// seeded start vector. Throws ScoreError when not converged within max_iter,
// reporting the achieved residual.
double spectral_norm(const Eigen::MatrixXd& mat, const PowerIterOptions& opts = {});

// Non-bias layer as a matrix: 2-D stays [r, c]; conv [out,in,kh,kw] and any
// other k-D flattens to shape[0] x rest; 1-D becomes a row vector.
Eigen::MatrixXd layer_as_matrix(const TensorLayer& layer);

// Sum over non-bias layers of log sigma_max (natural log).
double measure_log_spectral_product(const TensorArchive& arch, const PowerIterOptions& opts = {});

// Gap plus i.i.d. Gaussian noise of standard deviation sigma, drawn from a
// counter-based stream keyed on (seed, cell, replica) so record order and
// evaluation order cannot change the vector. sigma = 0 returns the gaps
// exactly. Throws ScoreError on negative sigma.
MeasureVector measure_noisy_oracle(const Population& pop, double sigma, std::uint64_t seed);

} // namespace gapscore
