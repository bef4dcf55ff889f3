#include "qdplan/mlp.hpp"

#include <cmath>
#include <cstring>

#include "qdplan/errors.hpp"

namespace qdplan {

Shapes make_shapes(int in_dim, const std::vector<int>& hidden, int out_dim) {
  Shapes shapes;
  int prev = in_dim;
  for (int h : hidden) {
    shapes.emplace_back(prev, h);
    prev = h;
  }
  shapes.emplace_back(prev, out_dim);
  return shapes;
}

void validate_shapes(const Shapes& shapes) {
  if (shapes.empty()) throw ShapeMismatchError("mlp: no layers");
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    if (shapes[l].first <= 0 || shapes[l].second <= 0)
      throw ShapeMismatchError("mlp: non-positive layer dimension");
    if (l > 0 && shapes[l].first != shapes[l - 1].second)
      throw ShapeMismatchError("mlp: consecutive layer shapes do not chain");
  }
}

std::size_t mlp_param_count(const Shapes& shapes) {
  std::size_t n = 0;
  for (const auto& [in, out] : shapes)
    n += static_cast<std::size_t>(in) * out + static_cast<std::size_t>(out);
  return n;
}

namespace {

// y = W x + b for one layer; params points at that layer's block.
void layer_affine(int in, int out, const double* params, const double* x, double* y) {
  const double* w = params;
  const double* b = params + static_cast<std::size_t>(in) * out;
  for (int o = 0; o < out; ++o) {
    double acc = b[o];
    const double* row = w + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

}  // namespace

void mlp_forward(const Shapes& shapes, const double* params, const double* x, double* y) {
  std::vector<double> a(x, x + shapes.front().first);
  std::vector<double> z;
  const double* p = params;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const auto [in, out] = shapes[l];
    z.assign(out, 0.0);
    layer_affine(in, out, p, a.data(), z.data());
    p += static_cast<std::size_t>(in) * out + out;
    if (l + 1 < shapes.size())
      for (double& v : z) v = std::tanh(v);
    a.swap(z);
  }
  std::memcpy(y, a.data(), a.size() * sizeof(double));
}

void mlp_forward_cached(const Shapes& shapes, const double* params, const double* x,
                        MlpCache& cache) {
  cache.acts.assign(shapes.size() + 1, {});
  cache.acts[0].assign(x, x + shapes.front().first);
  const double* p = params;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const auto [in, out] = shapes[l];
    cache.acts[l + 1].assign(out, 0.0);
    layer_affine(in, out, p, cache.acts[l].data(), cache.acts[l + 1].data());
    p += static_cast<std::size_t>(in) * out + out;
    if (l + 1 < shapes.size())
      for (double& v : cache.acts[l + 1]) v = std::tanh(v);
  }
}

void mlp_backward(const Shapes& shapes, const double* params, const MlpCache& cache,
                  const double* dy, double* dparams, double* dx) {
  // Offsets of each layer's parameter block.
  std::vector<std::size_t> offs(shapes.size());
  std::size_t off = 0;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    offs[l] = off;
    off += static_cast<std::size_t>(shapes[l].first) * shapes[l].second + shapes[l].second;
  }

  std::vector<double> delta(dy, dy + shapes.back().second);
  std::vector<double> prev;
  for (std::size_t li = shapes.size(); li-- > 0;) {
    const auto [in, out] = shapes[li];
    const double* w = params + offs[li];
    double* dw = dparams + offs[li];
    double* db = dw + static_cast<std::size_t>(in) * out;
    const std::vector<double>& a_in = cache.acts[li];

    // Hidden layers cached post-tanh: fold the activation derivative in first.
    if (li + 1 < shapes.size()) {
      const std::vector<double>& a_out = cache.acts[li + 1];
      for (int o = 0; o < out; ++o) delta[o] *= 1.0 - a_out[o] * a_out[o];
    }

    const bool need_dx = li > 0 || dx != nullptr;
    if (need_dx) prev.assign(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      db[o] += d;
      double* dwrow = dw + static_cast<std::size_t>(o) * in;
      const double* wrow = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) {
        dwrow[i] += d * a_in[i];
        if (need_dx) prev[i] += d * wrow[i];
      }
    }
    if (li == 0) {
      if (dx != nullptr) std::memcpy(dx, prev.data(), prev.size() * sizeof(double));
      break;
    }
    delta.swap(prev);
  }
}

void orthogonal_init(const Shapes& shapes, double* params, const std::vector<double>& gains,
                     Rng& rng) {
  if (gains.size() != shapes.size()) throw ShapeMismatchError("orthogonal_init: gains per layer");
  double* p = params;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const auto [in, out] = shapes[l];
    // Orthonormalize along the smaller dimension so the result is
    // semi-orthogonal either way: rows when out <= in, columns otherwise.
    const bool by_rows = out <= in;
    const int nvec = by_rows ? out : in;
    const int dim = by_rows ? in : out;
    std::vector<std::vector<double>> basis(nvec, std::vector<double>(dim));
    for (int v = 0; v < nvec; ++v) {
      for (;;) {
        for (int d = 0; d < dim; ++d) basis[v][d] = rng.normal();
        // Two Gram-Schmidt passes keep the basis orthonormal at these sizes.
        for (int pass = 0; pass < 2; ++pass) {
          for (int u = 0; u < v; ++u) {
            double dot = 0.0;
            for (int d = 0; d < dim; ++d) dot += basis[v][d] * basis[u][d];
            for (int d = 0; d < dim; ++d) basis[v][d] -= dot * basis[u][d];
          }
        }
        double norm2 = 0.0;
        for (int d = 0; d < dim; ++d) norm2 += basis[v][d] * basis[v][d];
        if (norm2 > 1e-12) {
          const double inv = 1.0 / std::sqrt(norm2);
          for (int d = 0; d < dim; ++d) basis[v][d] *= inv;
          break;
        }
      }
    }
    for (int o = 0; o < out; ++o)
      for (int i = 0; i < in; ++i)
        p[static_cast<std::size_t>(o) * in + i] =
            gains[l] * (by_rows ? basis[o][i] : basis[i][o]);
    double* b = p + static_cast<std::size_t>(in) * out;
    for (int o = 0; o < out; ++o) b[o] = 0.0;
    p += static_cast<std::size_t>(in) * out + out;
  }
}

}  // namespace qdplan
