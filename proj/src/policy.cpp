#include "qdplan/policy.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "qdplan/errors.hpp"

namespace qdplan {

Vec2 analytic_controller_law(Vec2 p_rel, Vec2 velocity, AnalyticGains gains) {
  return clamp_unit({gains.kp * p_rel.x - gains.kd * velocity.x,
                     gains.kp * p_rel.y - gains.kd * velocity.y});
}

std::size_t PolicyParams::expected_size() const {
  return mlp_param_count(layer_shapes) + static_cast<std::size_t>(act_dim);
}

void PolicyParams::validate() const {
  validate_shapes(layer_shapes);
  if (act_dim != 2) throw ShapeMismatchError("policy: act_dim must be 2");
  if (layer_shapes.front().first != obs_dim)
    throw ShapeMismatchError("policy: first layer input != obs_dim");
  if (layer_shapes.back().second != act_dim)
    throw ShapeMismatchError("policy: last layer output != act_dim");
  if (flat_weights.size() != expected_size())
    throw ShapeMismatchError("policy: flat_weights length does not match layer_shapes");
}

PolicyParams PolicyParams::zeros(int obs_dim, int act_dim, const std::vector<int>& hidden) {
  PolicyParams p;
  p.obs_dim = obs_dim;
  p.act_dim = act_dim;
  p.layer_shapes = make_shapes(obs_dim, hidden, act_dim);
  p.flat_weights.assign(p.expected_size(), 0.0);
  return p;
}

PolicyHandle PolicyHandle::analytic(AnalyticGains g) {
  PolicyHandle h;
  h.kind = PolicyKind::kAnalytic;
  h.action_mode = ActionMode::kDeterministic;
  h.gains = g;
  return h;
}

PolicyHandle PolicyHandle::neural(PolicyParams p, ActionMode mode) {
  PolicyHandle h;
  h.kind = PolicyKind::kNeural;
  h.action_mode = mode;
  h.params = std::move(p);
  return h;
}

namespace {

double squash_strict(double u) {
  double a = std::tanh(u);
  if (a >= 1.0) a = std::nextafter(1.0, 0.0);
  if (a <= -1.0) a = std::nextafter(-1.0, 0.0);
  return a;
}

}  // namespace

Vec2 act(const PolicyHandle& policy, const GoalObservation& obs, Rng& rng) {
  if (policy.kind == PolicyKind::kAnalytic)
    return analytic_controller_law(obs.p_rel, obs.velocity(), policy.gains);

  if (policy.params.obs_dim != GoalObservation::kDim)
    throw ShapeMismatchError("act: policy obs_dim does not match observation");
  policy.params.validate();

  const auto x = obs.flat();
  double mean[2];
  mlp_forward(policy.params.layer_shapes, policy.params.net(), x.data(), mean);
  if (policy.action_mode == ActionMode::kDeterministic)
    return clamp_unit({std::tanh(mean[0]), std::tanh(mean[1])});

  const double* log_std = policy.params.log_std();
  const double u0 = mean[0] + std::exp(log_std[0]) * rng.normal();
  const double u1 = mean[1] + std::exp(log_std[1]) * rng.normal();
  return {squash_strict(u0), squash_strict(u1)};
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw CorruptFileError("truncated policy file: " + path);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is, const std::string& path) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8))
    throw CorruptFileError("truncated policy file: " + path);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

constexpr char kMagic[6] = {'G', 'C', 'P', 'O', 'L', '1'};
constexpr std::uint32_t kMaxDim = 1u << 20;

}  // namespace

void save_policy(const PolicyHandle& policy, const std::string& path) {
  if (policy.kind != PolicyKind::kNeural)
    throw RuntimeError("save_policy: only neural policies have parameters to save");
  policy.params.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeError("cannot open for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  put_u32(os, static_cast<std::uint32_t>(policy.params.obs_dim));
  put_u32(os, static_cast<std::uint32_t>(policy.params.act_dim));
  put_u32(os, static_cast<std::uint32_t>(policy.params.layer_shapes.size()));
  for (const auto& [in, out] : policy.params.layer_shapes) {
    put_u32(os, static_cast<std::uint32_t>(in));
    put_u32(os, static_cast<std::uint32_t>(out));
  }
  for (double v : policy.params.flat_weights) put_f64(os, v);
  if (!os) throw RuntimeError("write failed: " + path);
}

PolicyHandle load_policy(const std::string& path, int expected_obs_dim) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingPolicyError("cannot open policy file: " + path);

  char magic[6];
  if (!is.read(magic, 6) || std::memcmp(magic, kMagic, 6) != 0)
    throw CorruptFileError("bad magic in policy file: " + path);

  PolicyParams p;
  const std::uint32_t obs_dim = get_u32(is, path);
  const std::uint32_t act_dim = get_u32(is, path);
  const std::uint32_t n_layers = get_u32(is, path);
  if (obs_dim == 0 || obs_dim > kMaxDim || act_dim == 0 || act_dim > kMaxDim || n_layers == 0 ||
      n_layers > 64)
    throw CorruptFileError("implausible header counts in policy file: " + path);
  p.obs_dim = static_cast<int>(obs_dim);
  p.act_dim = static_cast<int>(act_dim);
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const std::uint32_t in = get_u32(is, path);
    const std::uint32_t out = get_u32(is, path);
    if (in == 0 || in > kMaxDim || out == 0 || out > kMaxDim)
      throw CorruptFileError("implausible layer shape in policy file: " + path);
    p.layer_shapes.emplace_back(static_cast<int>(in), static_cast<int>(out));
  }
  p.flat_weights.resize(p.expected_size());
  for (double& v : p.flat_weights) v = get_f64(is, path);
  is.peek();
  if (!is.eof()) throw CorruptFileError("trailing bytes in policy file: " + path);

  if (expected_obs_dim >= 0 && p.obs_dim != expected_obs_dim)
    throw ShapeMismatchError("policy obs_dim " + std::to_string(p.obs_dim) +
                             " does not match expected " + std::to_string(expected_obs_dim));
  try {
    p.validate();
  } catch (const ShapeMismatchError& e) {
    throw CorruptFileError(std::string("inconsistent policy file: ") + e.what());
  }
  return PolicyHandle::neural(std::move(p));
}

}  // namespace qdplan
