#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "qdplan/errors.hpp"
#include "qdplan/mlp.hpp"
#include "qdplan/rng.hpp"

using namespace qdplan;

TEST_SUITE_BEGIN("mlp");

TEST_CASE("shapes and parameter counts") {
  Shapes s = make_shapes(7, {64, 64}, 2);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == std::pair<int, int>(7, 64));
  CHECK(s[1] == std::pair<int, int>(64, 64));
  CHECK(s[2] == std::pair<int, int>(64, 2));
  CHECK(mlp_param_count(s) == 7 * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2);
  CHECK_NOTHROW(validate_shapes(s));

  Shapes broken = {{7, 64}, {32, 2}};  // 64 -> 32 mismatch
  CHECK_THROWS_AS(validate_shapes(broken), ShapeMismatchError);
  CHECK_THROWS_AS(validate_shapes({}), ShapeMismatchError);
  CHECK_THROWS_AS(validate_shapes({{0, 3}}), ShapeMismatchError);
}

TEST_CASE("zero parameters give zero output") {
  Shapes s = make_shapes(3, {5}, 2);
  std::vector<double> params(mlp_param_count(s), 0.0);
  double x[3] = {1.0, -2.0, 0.5};
  double y[2] = {99.0, 99.0};
  mlp_forward(s, params.data(), x, y);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
}

TEST_CASE("single linear layer is an affine map") {
  Shapes s = {{2, 2}};
  // W = [[1,2],[3,4]], b = (0.5, -0.5)
  std::vector<double> params = {1.0, 2.0, 3.0, 4.0, 0.5, -0.5};
  double x[2] = {1.0, 1.0};
  double y[2];
  mlp_forward(s, params.data(), x, y);
  CHECK(y[0] == 3.5);
  CHECK(y[1] == 6.5);
}

TEST_CASE("hidden layers apply tanh") {
  Shapes s = {{1, 1}, {1, 1}};
  // first layer y = 2x (then tanh), second y = 1*h + 0
  std::vector<double> params = {2.0, 0.0, 1.0, 0.0};
  double x = 0.5, y;
  mlp_forward(s, params.data(), &x, &y);
  CHECK(y == doctest::Approx(std::tanh(1.0)));
}

TEST_CASE("backward matches finite differences for params and input") {
  Shapes s = make_shapes(4, {6, 5}, 3);
  const std::size_t np = mlp_param_count(s);
  Rng rng(31);
  std::vector<double> params(np);
  for (auto& p : params) p = rng.uniform(-0.8, 0.8);
  std::vector<double> x = {0.3, -1.2, 0.7, 0.1};
  std::vector<double> dy = {0.5, -1.0, 2.0};  // arbitrary upstream gradient

  // analytic
  MlpCache cache;
  mlp_forward_cached(s, params.data(), x.data(), cache);
  std::vector<double> dparams(np, 0.0), dx(4, 0.0);
  mlp_backward(s, params.data(), cache, dy.data(), dparams.data(), dx.data());

  auto loss_at = [&](const std::vector<double>& p, const std::vector<double>& in) {
    double y[3];
    mlp_forward(s, p.data(), in.data(), y);
    return y[0] * dy[0] + y[1] * dy[1] + y[2] * dy[2];
  };
  std::vector<double> fd_p = test::finite_difference_grad(
      [&](const std::vector<double>& p) { return loss_at(p, x); }, params);
  for (std::size_t k = 0; k < np; ++k) CHECK(std::abs(dparams[k] - fd_p[k]) < 1e-6);

  std::vector<double> fd_x = test::finite_difference_grad(
      [&](const std::vector<double>& in) { return loss_at(params, in); }, x);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(dx[k] - fd_x[k]) < 1e-6);
}

TEST_CASE("backward accumulates instead of overwriting") {
  Shapes s = {{2, 1}};
  std::vector<double> params = {1.0, 1.0, 0.0};
  double x[2] = {1.0, 2.0};
  MlpCache cache;
  mlp_forward_cached(s, params.data(), x, cache);
  double dy = 1.0;
  std::vector<double> grad(3, 0.0);
  mlp_backward(s, params.data(), cache, &dy, grad.data());
  std::vector<double> once = grad;
  mlp_backward(s, params.data(), cache, &dy, grad.data());
  for (int k = 0; k < 3; ++k) CHECK(grad[k] == 2.0 * once[k]);
}

TEST_CASE("orthogonal init produces gain-scaled orthonormal rows and zero biases") {
  Shapes s = make_shapes(16, {8}, 4);  // out <= in for both layers
  std::vector<double> params(mlp_param_count(s));
  Rng rng(77);
  orthogonal_init(s, params.data(), {2.0, 0.5}, rng);

  std::size_t off = 0;
  std::vector<double> gains = {2.0, 0.5};
  for (std::size_t l = 0; l < s.size(); ++l) {
    const auto [in, out] = s[l];
    const double g2 = gains[l] * gains[l];
    for (int r = 0; r < out; ++r)
      for (int r2 = 0; r2 <= r; ++r2) {
        double d = 0.0;
        for (int c = 0; c < in; ++c)
          d += params[off + r * in + c] * params[off + r2 * in + c];
        CHECK(std::abs(d - (r == r2 ? g2 : 0.0)) < 1e-9);
      }
    off += static_cast<std::size_t>(in) * out;
    for (int b = 0; b < out; ++b) CHECK(params[off + b] == 0.0);
    off += out;
  }
}

TEST_CASE("orthogonal init with out > in gives orthonormal columns") {
  Shapes s = {{3, 9}};
  std::vector<double> params(mlp_param_count(s));
  Rng rng(78);
  orthogonal_init(s, params.data(), {1.0}, rng);
  // columns of the 9x3 matrix are orthonormal
  for (int c = 0; c < 3; ++c)
    for (int c2 = 0; c2 <= c; ++c2) {
      double d = 0.0;
      for (int r = 0; r < 9; ++r) d += params[r * 3 + c] * params[r * 3 + c2];
      CHECK(std::abs(d - (c == c2 ? 1.0 : 0.0)) < 1e-9);
    }
}

TEST_SUITE_END();
