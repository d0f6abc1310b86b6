// Acceptance suite. Usage: acceptance [P1 ... P8 | all]
// Prints one PASS/FAIL line per criterion; exit code 0 only if all selected pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lidarnav/harness/experiment.hpp"
#include "lidarnav/sac/agent.hpp"
#include "lidarnav/tinygrad/gradcheck.hpp"
#include "oracles.hpp"

using namespace lidarnav;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_s;
  std::function<Verdict()> run;
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

constexpr IpFamily kParametric[] = {IpFamily::IPAPExp, IpFamily::IPAPLog, IpFamily::IPAPRec, IpFamily::IPAPRecN};

struct Bounds {
  double lo, t, hi;
};

Bounds random_bounds(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lo_d(0.05, 1.0);
  std::uniform_real_distribution<double> span_d(0.5, 30.0);
  std::uniform_real_distribution<double> frac(0.01, 0.99);
  const double lo = lo_d(rng);
  const double hi = lo + span_d(rng);
  return {lo, lo + frac(rng) * (hi - lo), hi};
}

// ---------------------------------------------------------------- P1

Verdict pos_theorem() {
  constexpr int kDraws = 500;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> raw_d(-4.0, 4.0);
  const ScalarMap identity = [](double y) { return y; };
  int violations = 0;
  double worst_margin = INFINITY;
  for (IpFamily f : kParametric) {
    for (int i = 0; i < kDraws; ++i) {
      const Bounds b = random_bounds(rng);
      const auto map = beam_map(f, b.lo, b.hi, raw_d(rng));
      const double mapped = pos_ratio(map, b.lo, b.t, b.hi);
      const double linear = pos_ratio(identity, b.lo, b.t, b.hi);
      worst_margin = std::min(worst_margin, mapped - linear);
      if (!(mapped > linear)) ++violations;
    }
  }
  return {violations == 0, std::to_string(4 * kDraws) + " draws, " + std::to_string(violations) +
                               " violations, min margin " + fmt(worst_margin)};
}

// ---------------------------------------------------------------- P2

Verdict magnification() {
  constexpr int kDraws = 500;
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> raw_d(-4.0, 4.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  int violations = 0;
  for (IpFamily f : kParametric) {
    for (int i = 0; i < kDraws; ++i) {
      const Bounds b = random_bounds(rng);
      const auto map = beam_map(f, b.lo, b.hi, raw_d(rng));
      const double span = b.hi - b.lo;
      const double dy = span * (0.001 + 0.3 * frac(rng));
      // y1 < y2, and both y + dy stay inside the measuring range
      const double y1 = b.lo + frac(rng) * (span - dy) * 0.999;
      const double y2 = y1 + (b.hi - dy - y1) * (0.001 + 0.999 * frac(rng));
      if (!(y1 < y2) || y2 + dy > b.hi) {
        ++violations;  // a bad draw would hide a bug; count it
        continue;
      }
      if (!(std::abs(map(y1 + dy) - map(y1)) > std::abs(map(y2 + dy) - map(y2)))) ++violations;
    }
  }
  return {violations == 0, std::to_string(4 * kDraws) + " draws, " + std::to_string(violations) + " violations"};
}

// ---------------------------------------------------------------- P3

tg::Tensor<double> scan_input(const tg::InputLayout& layout, const std::vector<double>& lo,
                              const std::vector<double>& hi, int rows, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < layout.total(); ++c) {
      if (c < layout.scan_width()) {
        const auto j = static_cast<std::size_t>(c % layout.scan_len);
        x.push_back(lo[j] + (0.05 + 0.9 * u(rng)) * (hi[j] - lo[j]));
      } else {
        x.push_back(2.0 * u(rng) - 1.0);
      }
    }
  }
  return tg::Tensor<double>::from({rows, layout.total()}, x);
}

Verdict gradient_suite() {
  constexpr double kTol = 1e-4;
  std::mt19937_64 rng(303);
  std::vector<std::pair<std::string, double>> results;

  auto check = [&](const std::string& name, tg::NetworkSpec spec, IpFamily family) {
    spec.dropout_rate = 0.0;
    tg::Network<double> net(spec, rng);
    const int m = spec.input.scan_len;
    std::vector<double> lo(static_cast<std::size_t>(m)), hi(static_cast<std::size_t>(m));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int j = 0; j < m; ++j) {
      lo[static_cast<std::size_t>(j)] = 0.1 + 0.3 * u(rng);
      hi[static_cast<std::size_t>(j)] = 3.0 + 10.0 * u(rng);
    }
    if (m > 0) {
      tg::IpLayerConfig ip{family, ParamSharing::PerBeam, lo, hi, spec.input.frames};
      tg::Tensor<double> zeta;
      if (ip.param_count() > 0) {
        std::normal_distribution<double> nd(0.0, 0.7);
        std::vector<double> z(static_cast<std::size_t>(ip.param_count()));
        for (auto& v : z) v = nd(rng);
        zeta = tg::Tensor<double>::from({1, ip.param_count()}, z, true);
      }
      net.attach_ip(ip, zeta);
    }
    const auto res = tg::gradcheck(net, scan_input(spec.input, lo, hi, 3, rng));
    results.push_back({name + " (" + std::to_string(res.checked) + " entries)", res.max_rel_error});
  };

  using tg::Activation;
  using tg::LayerKind;
  for (auto act : {Activation::Identity, Activation::ReLU, Activation::LeakyReLU, Activation::Tanh}) {
    tg::NetworkSpec s;
    s.input = {0, 1, 7};
    s.output_dim = 3;
    s.layers = {{LayerKind::Dense, 9, 1, 1, act}};
    check("dense/" + std::string(tg::to_string(act)), s, IpFamily::Raw);
  }
  {
    tg::NetworkSpec s;
    s.input = {14, 1, 3};
    s.output_dim = 2;
    s.layers = {{LayerKind::Conv1d, 4, 3, 2, Activation::Tanh}, {LayerKind::Conv1d, 3, 2, 1, Activation::LeakyReLU},
                {LayerKind::Dense, 5, 1, 1, Activation::ReLU}};
    check("conv1d", s, IpFamily::Raw);
  }
  for (auto f : {IpFamily::LNorm, IpFamily::IPAPExp, IpFamily::IPAPLog, IpFamily::IPAPRec, IpFamily::IPAPRecN}) {
    tg::NetworkSpec s;
    s.input = {6, 2, 2};
    s.output_dim = 2;
    s.layers = {{LayerKind::Dense, 6, 1, 1, Activation::Tanh}};
    check("ip/" + std::string(to_string(f)), s, f);
  }
  for (auto model : {tg::ModelId::Model0, tg::ModelId::Model1, tg::ModelId::Model2, tg::ModelId::Model3}) {
    const int frames = model == tg::ModelId::Model2 ? 3 : 1;
    check(std::string(tg::to_string(model)) + "+IPAPRec",
          tg::NetworkSpec::preset(model, {30, frames, 4}, 4, model == tg::ModelId::Model2 ? 24 : 16),
          IpFamily::IPAPRec);
  }

  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, err] : results) {
    if (!(err <= worst)) {
      worst = err;
      worst_name = name;
    }
  }
  return {worst < kTol, std::to_string(results.size()) + " graphs, max rel error " + fmt(worst) + " at " + worst_name};
}

// ---------------------------------------------------------------- P4

Verdict oracle_suite() {
  std::vector<std::string> failures;
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);

  // raycast vs ray marching
  int ray_bad = 0;
  double ray_worst = 0.0;
  std::uniform_real_distribution<double> range(0.5, 15.0);
  for (int i = 0; i < 1000; ++i) {
    const OccupancyGrid g = oracle::random_grid(rng, 0.12);
    const Vec2 o = oracle::random_free_point(g, rng);
    const double a = ang(rng);
    const double r = range(rng);
    const double err = std::abs(raycast(g, o, a, r) - oracle::march_ray(g, o, a, r, 1e-3));
    ray_worst = std::max(ray_worst, err / g.resolution());
    if (!(err <= g.resolution() / 2)) ++ray_bad;
  }
  if (ray_bad) failures.push_back(std::to_string(ray_bad) + " raycasts off by > res/2");

  // min-pooling vs brute force
  int pool_bad = 0;
  std::uniform_real_distribution<double> dist(0.2, 30.0);
  for (int i = 0; i < 1000; ++i) {
    const int k = std::uniform_int_distribution<int>(1, 8)(rng);
    const int m = std::uniform_int_distribution<int>(1, 30)(rng);
    LidarFrame f;
    for (int j = 0; j < k * m; ++j) {
      f.ranges.push_back(dist(rng));
      f.d_min.push_back(0.2);
      f.d_max.push_back(30.0);
    }
    if (min_pool(f, k).values != oracle::windowed_min(f.ranges, k)) ++pool_bad;
  }
  if (pool_bad) failures.push_back(std::to_string(pool_bad) + " min_pool mismatches");

  // collision verdicts vs dense sampling
  int col_bad = 0, collisions = 0;
  for (int i = 0; i < 1000; ++i) {
    const OccupancyGrid g = oracle::random_grid(rng, 0.04);
    std::uniform_real_distribution<double> ux(g.origin().x, g.origin().x + g.width_m());
    std::uniform_real_distribution<double> uy(g.origin().y, g.origin().y + g.height_m());
    const Pose pose{ux(rng), uy(rng), ang(rng)};
    const RobotBody body = i % 2 ? RobotBody{Circle{0.2}, {0, 0}} : RobotBody{Rectangle{0.455, 0.381}, {0.1, 0}};
    const bool got = collision_check(g, pose, body);
    collisions += got;
    if (got != oracle::dense_collision(g, pose, body)) ++col_bad;
  }
  if (col_bad) failures.push_back(std::to_string(col_bad) + " collision mismatches");

  // analytic IP parameter gradients vs central differences
  int grad_bad = 0;
  double grad_worst = 0.0;
  std::uniform_real_distribution<double> raw_d(-2.0, 2.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  for (IpFamily f : kParametric) {
    for (int i = 0; i < 250; ++i) {
      const Bounds b = random_bounds(rng);
      PooledScan s;
      s.values = {b.lo + frac(rng) * (b.hi - b.lo)};
      s.y_min = {b.lo};
      s.y_max = {b.hi};
      const double raw = raw_d(rng);
      const double h = 1e-6;
      const double analytic = ip_param_grad(s, IpParams{f, ParamSharing::Shared, {raw}})[0];
      const double numeric = (ip_forward(s, IpParams{f, ParamSharing::Shared, {raw + h}})[0] -
                              ip_forward(s, IpParams{f, ParamSharing::Shared, {raw - h}})[0]) /
                             (2 * h);
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      grad_worst = std::max(grad_worst, rel);
      if (!(rel < 1e-5)) ++grad_bad;
    }
  }
  if (grad_bad) failures.push_back(std::to_string(grad_bad) + " IP gradients off");

  std::string detail = "raycast worst " + fmt(ray_worst) + " res, " + std::to_string(collisions) +
                       "/1000 colliding poses, IP grad worst rel " + fmt(grad_worst);
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------- P5

sac::AgentSpec linear_spec(int obs, int act) {
  sac::AgentSpec s;
  s.policy.input = {0, 1, obs};
  s.policy.output_dim = 2 * act;
  s.critic.input = {0, 1, obs + act};
  s.critic.output_dim = 1;
  s.act_dim = act;
  return s;
}

void assign(tg::Tensor<double> t, const std::vector<double>& v) { std::copy(v.begin(), v.end(), t.data().begin()); }

Verdict sac_fixtures() {
  std::vector<std::string> failures;
  std::mt19937_64 rng(505);
  sac::AgentBundle<double> agent(linear_spec(2, 1), rng);
  sac::Batch<double> batch;
  batch.x_next = tg::Tensor<double>::from({2, 2}, {1.0, -0.5, 0.2, 0.7});
  batch.x = batch.x_next;
  batch.a = tg::Tensor<double>::from({2, 1}, {0.1, -0.3});
  batch.r = tg::Tensor<double>::from({2, 1}, {0.3, -1.2});

  // terminal masking: d = 1 leaves exactly r
  batch.d = tg::Tensor<double>::from({2, 1}, {1.0, 1.0});
  const auto y_term = sac::critic_target(agent, batch, rng);
  if (y_term.at(0, 0) != 0.3 || y_term.at(1, 0) != -1.2) failures.push_back("terminal masking not exact");

  // hand-computed target with frozen weights and fixed noise
  batch.d = tg::Tensor<double>::from({2, 1}, {0.0, 1.0});
  const std::vector<double> W{0.3, -0.2, 0.1, 0.4}, b{0.05, -0.1};
  const std::vector<double> w1{0.5, -0.3, 0.8}, w2{0.2, 0.6, -0.4};
  const double b1 = 0.1, b2 = -0.05;
  auto pp = agent.policy.parameters();
  assign(pp[0].tensor, W);
  assign(pp[1].tensor, b);
  assign(agent.target1.parameters()[0].tensor, w1);
  assign(agent.target1.parameters()[1].tensor, {b1});
  assign(agent.target2.parameters()[0].tensor, w2);
  assign(agent.target2.parameters()[1].tensor, {b2});
  const std::vector<double> noise{0.4, -1.1};
  const auto eps = tg::Tensor<double>::from({2, 1}, noise);
  const auto y = sac::critic_target(agent, batch, rng, &eps);
  const double xs[2][2] = {{1.0, -0.5}, {0.2, 0.7}};
  const double r[2] = {0.3, -1.2}, d[2] = {0.0, 1.0};
  double worst = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double m = xs[i][0] * W[0] + xs[i][1] * W[2] + b[0];
    const double raw = xs[i][0] * W[1] + xs[i][1] * W[3] + b[1];
    const double log_std = -5.0 + 3.5 * (std::tanh(raw) + 1.0);
    const double u = m + std::exp(log_std) * noise[i];
    const double a = std::tanh(u);
    const double logp =
        -0.5 * noise[i] * noise[i] - 0.5 * std::log(2 * std::numbers::pi) - log_std - std::log(1.0 - a * a);
    const double q1 = xs[i][0] * w1[0] + xs[i][1] * w1[1] + a * w1[2] + b1;
    const double q2 = xs[i][0] * w2[0] + xs[i][1] * w2[1] + a * w2[2] + b2;
    const double expected = r[i] + 0.99 * (1 - d[i]) * (std::min(q1, q2) - 0.01 * logp);
    worst = std::max(worst, std::abs(y.at(i, 0) - expected));
  }
  if (!(worst < 1e-6)) failures.push_back("critic target off by " + fmt(worst));

  // parameter partition, bitwise
  tg::IpLayerConfig ip{IpFamily::IPAPRec, ParamSharing::PerBeam, std::vector<double>(6, 0.2),
                       std::vector<double>(6, 6.0), 1};
  sac::AgentBundle<float> full(sac::AgentSpec::make(tg::ModelId::Model0, {6, 1, 4}, 2, 16, ip, {}), rng);
  sac::ReplayBuffer buf(128, full.obs_dim(), 2);
  std::uniform_real_distribution<float> dist(0.2f, 5.5f), unit(-1.0f, 1.0f);
  for (int i = 0; i < 128; ++i) {
    sac::Transition t;
    for (int j = 0; j < full.obs_dim(); ++j) {
      t.x.push_back(j < 6 ? dist(rng) : unit(rng));
      t.x_next.push_back(j < 6 ? dist(rng) : unit(rng));
    }
    t.a = {unit(rng), unit(rng)};
    t.r = unit(rng);
    t.d = i % 5 == 0;
    buf.push(t);
  }
  auto snap = [&] {
    std::map<std::string, std::vector<float>> s;
    for (const auto& p : full.named_tensors()) s[p.name] = {p.tensor.data().begin(), p.tensor.data().end()};
    return s;
  };
  auto starts = [](const std::string& s, const char* p) { return s.rfind(p, 0) == 0; };
  const auto batchf = buf.sample<float>(32, rng);
  const auto s0 = snap();
  sac::critic_update(full, batchf, rng);
  const auto s1 = snap();
  sac::policy_update(full, batchf, rng);
  const auto s2 = snap();
  sac::polyak_update(full, full.config().tau);
  const auto s3 = snap();
  int partition_bad = 0;
  for (const auto& [name, v] : s0) {
    const bool policy = starts(name, "policy.");
    const bool critic = starts(name, "critic");
    const bool target = starts(name, "target") || name == "zeta_target";
    if ((policy || target) && s1.at(name) != v) ++partition_bad;          // critic step
    if (critic && s1.at(name) == v) ++partition_bad;
    if ((critic || target) && s2.at(name) != s1.at(name)) ++partition_bad;  // policy step
    if (policy && s2.at(name) == s1.at(name)) ++partition_bad;
    if (!target && s3.at(name) != s2.at(name)) ++partition_bad;            // polyak
  }
  if (s1.at("zeta") == s0.at("zeta") || s2.at("zeta") == s1.at("zeta")) ++partition_bad;
  if (s3.at("zeta_target") == s2.at("zeta_target")) ++partition_bad;
  if (partition_bad) failures.push_back(std::to_string(partition_bad) + " partition violations");

  std::string detail = "target error " + fmt(worst) + ", " + std::to_string(s0.size()) + " tensors partitioned";
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------- P6

// x' = x + 0.2 a, reward -|x'|, 50-step episodes.
struct PointMass {
  static constexpr int kHorizon = 50;
  static constexpr double kGain = 0.2;
  static double step(double x, double a) { return x + kGain * std::clamp(a, -1.0, 1.0); }
};

double rollout(double x0, const std::function<double(double)>& policy) {
  double x = x0, ret = 0.0;
  for (int t = 0; t < PointMass::kHorizon; ++t) {
    x = PointMass::step(x, policy(x));
    ret -= std::abs(x);
  }
  return ret;
}

Verdict toy_mdp() {
  constexpr long kSteps = 20000;
  constexpr long kEvalPeriod = 1000;
  const std::vector<double> starts{-1.0, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0};
  auto mean_return = [&](const std::function<double(double)>& pi) {
    double s = 0.0;
    for (double x0 : starts) s += rollout(x0, pi);
    return s / static_cast<double>(starts.size());
  };
  const double optimal = mean_return([](double x) { return -std::clamp(x / PointMass::kGain, -1.0, 1.0); });
  std::mt19937_64 base(606);
  std::uniform_real_distribution<double> ua(-1.0, 1.0);
  double random = 0.0;
  for (int k = 0; k < 400; ++k) random += mean_return([&](double) { return ua(base); });
  random /= 400.0;

  auto run_seed = [&](std::uint64_t seed) {
    RngStreams streams(seed);
    Rng init = streams.stream("init"), act_rng = streams.stream("explore"), sample_rng = streams.stream("replay"),
        update_rng = streams.stream("update"), start_rng = streams.stream("tasks");
    sac::SacConfig cfg;
    cfg.lr_policy = 1e-3;
    cfg.lr_critic = 1e-3;
    cfg.batch_size = 64;
    cfg.alpha = 0.01;
    sac::AgentBundle<float> agent(
        sac::AgentSpec::make(tg::ModelId::Model0, {0, 1, 1}, 1, 64, tg::IpLayerConfig{}, cfg), init);
    sac::ReplayBuffer buf(static_cast<std::size_t>(kSteps), 1, 1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> evals;
    auto greedy = [&](double x) { return sac::act(agent, {static_cast<float>(x)}, sac::NoiseMode::Deterministic, act_rng)[0]; };
    evals.push_back(mean_return(greedy));
    long steps = 0;
    int episode = 0;
    while (steps < kSteps) {
      double x = u(start_rng);
      for (int t = 0; t < PointMass::kHorizon && steps < kSteps; ++t) {
        const double a =
            episode < 10 ? u(act_rng) : sac::act(agent, {static_cast<float>(x)}, sac::NoiseMode::Sample, act_rng)[0];
        const double xn = PointMass::step(x, a);
        buf.push({{static_cast<float>(x)}, {static_cast<float>(a)}, -std::abs(xn), {static_cast<float>(xn)}, 0});
        x = xn;
        ++steps;
        if (buf.size() >= static_cast<std::size_t>(cfg.batch_size)) sac::update_block(agent, buf, sample_rng, update_rng);
        if (steps % kEvalPeriod == 0) evals.push_back(mean_return(greedy));
      }
      ++episode;
    }
    return evals;
  };

  std::vector<std::future<std::vector<double>>> jobs;
  for (std::uint64_t seed : {1, 2, 3}) jobs.push_back(std::async(std::launch::async, run_seed, seed));
  std::vector<std::vector<double>> curves;
  for (auto& j : jobs) curves.push_back(j.get());
  double best = -INFINITY;
  long best_step = 0;
  for (std::size_t k = 0; k < curves[0].size(); ++k) {
    double mean = 0.0;
    for (const auto& c : curves) mean += c[k];
    mean /= static_cast<double>(curves.size());
    const double closure = (mean - random) / (optimal - random);
    if (closure > best) {
      best = closure;
      best_step = static_cast<long>(k) * kEvalPeriod;
    }
  }
  return {best >= 0.5, "random " + fmt(random) + ", optimal " + fmt(optimal) + ", best mean gap closure " + fmt(best) +
                           " at step " + std::to_string(best_step)};
}

// ---------------------------------------------------------------- P7

Verdict desk_trend() {
  const fs::path src(LIDARNAV_SOURCE_DIR);
  const fs::path out = fs::path(LIDARNAV_BINARY_DIR) / "acceptance_runs";
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  struct Run {
    harness::TrainResult result;
    harness::ExperimentConfig cfg;
  };
  auto launch = [&](const std::string& config, std::uint64_t seed) {
    auto cfg = harness::load_config((src / "configs" / config).string());
    cfg.seed = seed;
    cfg.out_dir = (out / (cfg.name + "_seed" + std::to_string(seed))).string();
    return std::async(std::launch::async, [cfg] {
      harness::TrainOptions opt;
      return Run{harness::train(cfg, opt), cfg};
    });
  };
  std::vector<std::future<Run>> rec_jobs, raw_jobs;
  for (auto s : seeds) rec_jobs.push_back(launch("desk_ipaprec.json", s));
  for (auto s : seeds) raw_jobs.push_back(launch("desk_raw.json", s));
  std::vector<Run> rec, raw;
  for (auto& j : rec_jobs) rec.push_back(j.get());
  for (auto& j : raw_jobs) raw.push_back(j.get());

  int a_ok = 0, b_ok = 0, c_ok = 0;
  std::ostringstream d;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& rr = rec[i].result.records;
    double msr = 0.0;
    for (const auto& r : rr) msr = std::max(msr, r.find("heldout")->success_rate);
    a_ok += msr >= 0.8;
    const double area_rec = harness::success_area(rr, "heldout");
    const double area_raw = harness::success_area(raw[i].result.records, "heldout");
    b_ok += area_rec > area_raw;

    const auto empty = harness::load_scenario(
        *std::find_if(rec[i].cfg.scenarios.begin(), rec[i].cfg.scenarios.end(), [](const auto& s) { return s.name == "empty"; }));
    const auto res = harness::evaluate_suite(*rec[i].result.agent, rec[i].cfg.nav, empty);
    double ratio = 0.0;
    int ok = 0;
    for (const auto& t : res.tasks) {
      if (t.outcome == Outcome::Success) {
        ratio += t.path_ratio();
        ++ok;
      }
    }
    ratio = ok ? ratio / ok : INFINITY;
    const bool c = res.summary.success_rate >= 0.9 && ratio <= 1.3;
    c_ok += c;
    d << " | seed " << seeds[i] << ": heldout MSR " << fmt(msr) << ", AUC " << fmt(area_rec) << " vs raw "
      << fmt(area_raw) << ", empty " << fmt(res.summary.success_rate) << " @ ratio " << fmt(ratio);
  }
  const bool pass = a_ok >= 2 && b_ok >= 2 && c_ok >= 2;
  return {pass, "(a) " + std::to_string(a_ok) + "/3 (b) " + std::to_string(b_ok) + "/3 (c) " + std::to_string(c_ok) +
                    "/3" + d.str()};
}

// ---------------------------------------------------------------- P8

Verdict metric_arithmetic() {
  using harness::EvalRecord;
  std::vector<std::string> failures;
  if (harness::score(Outcome::Success, 100, 200) != 0.0) failures.push_back("score(success, 100)");
  if (harness::score(Outcome::Success, 0, 200) != 1.0) failures.push_back("score(success, 0)");
  if (harness::score(Outcome::Crash, 57, 200) != -1.0 || harness::score(Outcome::Timeout, 200, 200) != -1.0) {
    failures.push_back("score(failure)");
  }
  auto rec = [](long step, double s, double m) {
    EvalRecord r;
    r.step = step;
    r.scenarios.push_back({"a", s, m, 0.0});
    return r;
  };
  const std::vector<EvalRecord> run1{rec(0, 0.25, -0.5), rec(1, 0.75, 0.125), rec(2, 0.5, 0.25)};
  const std::vector<EvalRecord> run2{rec(0, 0.5, -1.0), rec(1, 1.0, -0.25), rec(2, 0.75, -0.5)};
  const auto m1 = harness::run_metrics(run1);
  if (m1[0].msr != 0.75 || m1[0].mans != 0.25) failures.push_back("max-over-records");
  const auto rows = harness::summarize({run1, run2});
  if (rows[0].msr_mean != 0.875 || rows[0].msr_sd != 0.125 || rows[0].mans_mean != 0.0 || rows[0].mans_sd != 0.25) {
    failures.push_back("summary mean/SD");
  }
  const std::vector<EvalRecord> mono{rec(0, 0.0, -1.0), rec(1, 0.5, 0.0), rec(2, 1.0, 0.5)};
  if (harness::run_metrics(mono)[0].msr != 1.0) failures.push_back("monotone MSR");
  std::string detail = failures.empty() ? "3 score examples, 3 summary fixtures exact" : "";
  for (const auto& f : failures) detail += f + " wrong; ";
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"P1", "PoS theorem suite", 5.0, pos_theorem},
      {"P2", "magnification suite", 5.0, magnification},
      {"P3", "gradient suite", 60.0, gradient_suite},
      {"P4", "oracle suite", 60.0, oracle_suite},
      {"P5", "SAC correctness fixtures", 10.0, sac_fixtures},
      {"P6", "toy MDP learning", 600.0, toy_mdp},
      {"P7", "desk-scale navigation trend", 3600.0, desk_trend},
      {"P8", "score and metric arithmetic", 1.0, metric_arithmetic},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.empty() || (wanted.size() == 1 && wanted[0] == "all")) {
    wanted.clear();
    for (const auto& c : all) wanted.push_back(c.id);
  }
  bool ok = true;
  for (const auto& id : wanted) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const Criterion& c) { return c.id == id; });
    if (it == all.end()) {
      std::cout << id << " FAIL unknown criterion\n";
      ok = false;
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = it->run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < it->budget_s;
    const bool pass = v.pass && in_budget;
    ok = ok && pass;
    std::cout << it->id << ' ' << (pass ? "PASS" : "FAIL") << "  " << it->title << "  [" << fmt(secs, 3) << " s / "
              << fmt(it->budget_s, 4) << " s" << (in_budget ? "" : " OVER BUDGET") << "]  " << v.detail << std::endl;
  }
  return ok ? 0 : 1;
}
