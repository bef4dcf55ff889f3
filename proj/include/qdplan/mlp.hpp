#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "qdplan/rng.hpp"

namespace qdplan {

// Fully-connected net described by per-layer (in, out) pairs. Parameters are
// stored flat, layer by layer: row-major weight matrix (out x in) then bias.
// Hidden activations are tanh; the last layer is linear.
using Shapes = std::vector<std::pair<int, int>>;

Shapes make_shapes(int in_dim, const std::vector<int>& hidden, int out_dim);
std::size_t mlp_param_count(const Shapes& shapes);
void validate_shapes(const Shapes& shapes);

void mlp_forward(const Shapes& shapes, const double* params, const double* x, double* y);

// Activations kept for backprop: acts[0] is the input, acts[l] the output of
// layer l (post-tanh for hidden layers, linear for the last).
struct MlpCache {
  std::vector<std::vector<double>> acts;
};

void mlp_forward_cached(const Shapes& shapes, const double* params, const double* x,
                        MlpCache& cache);

// Accumulates dL/dparams into dparams (callers zero it when starting a batch);
// dx, when non-null, receives dL/dinput.
void mlp_backward(const Shapes& shapes, const double* params, const MlpCache& cache,
                  const double* dy, double* dparams, double* dx = nullptr);

// Per-layer orthogonal weight init (Gram-Schmidt on Gaussian draws, scaled by
// gains[l]); biases zero. gains must have one entry per layer.
void orthogonal_init(const Shapes& shapes, double* params, const std::vector<double>& gains,
                     Rng& rng);

}  // namespace qdplan
