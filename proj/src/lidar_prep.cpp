#include "lidarnav/lidar_prep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace lidarnav {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Inverse softplus for positive arguments.
double softplus_inverse(double v) { return v > 30.0 ? v + std::log(-std::expm1(-v)) : std::log(std::expm1(v)); }

// Shift so that raw = 0 places the pole at 0 for any positive y_min.
double pole_shift(double y_min) {
  const double target = y_min - kMinPoleGap;
  if (!(target > 0.0)) {
    throw std::invalid_argument("y_min must exceed the minimum pole gap");
  }
  return softplus_inverse(target);
}

bool uses_pole(IpFamily f) {
  return f == IpFamily::IPAPLog || f == IpFamily::IPAPRec || f == IpFamily::IPAPRecN;
}

}  // namespace

std::string_view to_string(IpFamily family) {
  switch (family) {
    case IpFamily::Raw: return "Raw";
    case IpFamily::LNorm: return "LNorm";
    case IpFamily::IPAPExp: return "IPAPExp";
    case IpFamily::IPAPLog: return "IPAPLog";
    case IpFamily::IPAPRec: return "IPAPRec";
    case IpFamily::IPAPRecN: return "IPAPRecN";
  }
  return "?";
}

IpFamily parse_ip_family(std::string_view name) {
  for (IpFamily f : {IpFamily::Raw, IpFamily::LNorm, IpFamily::IPAPExp, IpFamily::IPAPLog,
                     IpFamily::IPAPRec, IpFamily::IPAPRecN}) {
    if (to_string(f) == name) return f;
  }
  throw std::invalid_argument("unknown IP family: " + std::string(name));
}

bool has_trainable_parameter(IpFamily family) {
  return family != IpFamily::Raw && family != IpFamily::LNorm;
}

std::string_view to_string(ParamSharing sharing) {
  return sharing == ParamSharing::Shared ? "shared" : "per_beam";
}

ParamSharing parse_param_sharing(std::string_view name) {
  if (name == "shared") return ParamSharing::Shared;
  if (name == "per_beam") return ParamSharing::PerBeam;
  throw std::invalid_argument("unknown parameter sharing mode: " + std::string(name));
}

PooledScan min_pool(const LidarFrame& raw, int k) {
  const std::size_t n = raw.size();
  if (k < 1 || n == 0 || n % static_cast<std::size_t>(k) != 0) {
    throw std::invalid_argument("pool window mismatch");
  }
  if (raw.d_min.size() != n || raw.d_max.size() != n) {
    throw std::invalid_argument("lidar frame bounds do not match beam count");
  }
  const std::size_t m = n / static_cast<std::size_t>(k);
  PooledScan out;
  out.window = k;
  out.values.resize(m);
  out.y_min.resize(m);
  out.y_max.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto first = static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(k));
    const auto last = first + k;
    out.values[i] = *std::min_element(raw.ranges.begin() + first, raw.ranges.begin() + last);
    out.y_min[i] = *std::min_element(raw.d_min.begin() + first, raw.d_min.begin() + last);
    out.y_max[i] = *std::min_element(raw.d_max.begin() + first, raw.d_max.begin() + last);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reparameterization

double constrained_parameter(IpFamily family, double raw, double y_min) {
  if (family == IpFamily::IPAPExp) return kBaseMargin + (1.0 - 2.0 * kBaseMargin) * sigmoid(raw);
  if (uses_pole(family)) return y_min - kMinPoleGap - softplus(raw + pole_shift(y_min));
  throw std::invalid_argument("no trainable parameter");
}

double constrained_derivative(IpFamily family, double raw, double y_min) {
  if (family == IpFamily::IPAPExp) {
    const double s = sigmoid(raw);
    return (1.0 - 2.0 * kBaseMargin) * s * (1.0 - s);
  }
  if (uses_pole(family)) return -sigmoid(raw + pole_shift(y_min));
  throw std::invalid_argument("no trainable parameter");
}

double raw_from_constrained(IpFamily family, double constrained, double y_min) {
  if (family == IpFamily::IPAPExp) {
    const double s = (constrained - kBaseMargin) / (1.0 - 2.0 * kBaseMargin);
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("lambda outside (0, 1)");
    return std::log(s) - std::log1p(-s);
  }
  if (uses_pole(family)) {
    const double sp = y_min - kMinPoleGap - constrained;
    if (!(sp > 0.0)) throw std::invalid_argument("pole parameter must stay below y_min");
    return softplus_inverse(sp) - pole_shift(y_min);
  }
  throw std::invalid_argument("no trainable parameter");
}

// ---------------------------------------------------------------------------
// Forward maps and derivatives

double ip_value(IpFamily family, double y, double y_min, double y_max, double raw) {
  switch (family) {
    case IpFamily::Raw: return y;
    case IpFamily::LNorm: return y / y_max;
    case IpFamily::IPAPExp: {
      const double lambda = constrained_parameter(family, raw, y_min);
      return std::exp(y * std::log(lambda));
    }
    case IpFamily::IPAPLog: return std::log(y - constrained_parameter(family, raw, y_min));
    case IpFamily::IPAPRec: return 1.0 / (y - constrained_parameter(family, raw, y_min));
    case IpFamily::IPAPRecN: {
      const double beta = constrained_parameter(family, raw, y_min);
      return (y_min - beta) / (y - beta);
    }
  }
  return y;
}

double ip_dvalue_draw(IpFamily family, double y, double y_min, double /*y_max*/, double raw) {
  switch (family) {
    case IpFamily::Raw:
    case IpFamily::LNorm: throw std::invalid_argument("no trainable parameter");
    case IpFamily::IPAPExp: {
      // d(lambda^y)/d raw = y lambda^(y-1) * dlambda/draw
      const double lambda = constrained_parameter(family, raw, y_min);
      const double dl = constrained_derivative(family, raw, y_min);
      return y * std::exp((y - 1.0) * std::log(lambda)) * dl;
    }
    case IpFamily::IPAPLog: {
      const double eta = constrained_parameter(family, raw, y_min);
      return -constrained_derivative(family, raw, y_min) / (y - eta);
    }
    case IpFamily::IPAPRec: {
      const double gap = y - constrained_parameter(family, raw, y_min);
      return constrained_derivative(family, raw, y_min) / (gap * gap);
    }
    case IpFamily::IPAPRecN: {
      const double gap = y - constrained_parameter(family, raw, y_min);
      return (y_min - y) / (gap * gap) * constrained_derivative(family, raw, y_min);
    }
  }
  return 0.0;
}

double ip_dvalue_dy(IpFamily family, double y, double y_min, double y_max, double raw) {
  switch (family) {
    case IpFamily::Raw: return 1.0;
    case IpFamily::LNorm: return 1.0 / y_max;
    case IpFamily::IPAPExp: {
      const double log_lambda = std::log(constrained_parameter(family, raw, y_min));
      return log_lambda * std::exp(y * log_lambda);
    }
    case IpFamily::IPAPLog: return 1.0 / (y - constrained_parameter(family, raw, y_min));
    case IpFamily::IPAPRec: {
      const double gap = y - constrained_parameter(family, raw, y_min);
      return -1.0 / (gap * gap);
    }
    case IpFamily::IPAPRecN: {
      const double beta = constrained_parameter(family, raw, y_min);
      const double gap = y - beta;
      return -(y_min - beta) / (gap * gap);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// IpParams

IpParams IpParams::initial(IpFamily family, ParamSharing sharing, std::size_t beams) {
  IpParams p;
  p.family = family;
  p.sharing = sharing;
  if (has_trainable_parameter(family)) {
    p.raw.assign(sharing == ParamSharing::Shared ? 1 : beams, 0.0);
  }
  return p;
}

double IpParams::constrained(std::size_t beam, double y_min) const {
  return constrained_parameter(family, raw_for(beam), y_min);
}

void IpParams::validate(std::size_t beams) const {
  if (!has_trainable_parameter(family)) {
    if (!raw.empty()) throw std::invalid_argument("family has no trainable parameter");
    return;
  }
  const std::size_t expected = sharing == ParamSharing::Shared ? 1 : beams;
  if (raw.size() != expected) throw std::invalid_argument("IP parameter count mismatch");
}

std::vector<double> ip_forward(const PooledScan& scan, const IpParams& params) {
  params.validate(scan.size());
  std::vector<double> p(scan.size());
  for (std::size_t i = 0; i < scan.size(); ++i) {
    p[i] = ip_value(params.family, scan.values[i], scan.y_min[i], scan.y_max[i], params.raw_for(i));
  }
  return p;
}

std::vector<double> ip_param_grad(const PooledScan& scan, const IpParams& params) {
  if (!has_trainable_parameter(params.family)) throw std::invalid_argument("no trainable parameter");
  params.validate(scan.size());
  std::vector<double> g(scan.size());
  for (std::size_t i = 0; i < scan.size(); ++i) {
    g[i] = ip_dvalue_draw(params.family, scan.values[i], scan.y_min[i], scan.y_max[i],
                          params.raw_for(i));
  }
  return g;
}

// ---------------------------------------------------------------------------
// PoS diagnostics

double pos_ratio(const ScalarMap& map_fn, double y_min, double y_t, double y_max) {
  if (!(y_min < y_t && y_t < y_max)) throw std::invalid_argument("require y_min < y_t < y_max");
  const double p_min = map_fn(y_min);
  const double denom = map_fn(y_max) - p_min;
  if (denom == 0.0 || !std::isfinite(denom)) throw std::invalid_argument("degenerate mapping");
  return std::abs((map_fn(y_t) - p_min) / denom);
}

bool check_conditions(const ScalarMap& map_fn, double y_min, double y_max, int n_samples) {
  if (!(y_min < y_max) || n_samples < 1) throw std::invalid_argument("invalid sampling range");
  const double span = y_max - y_min;
  // Central differences need room on both sides, so the samples sit inside
  // the interval by one step.
  const double h = span * 1e-3;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int s = 0; s < n_samples; ++s) {
    const double frac = n_samples == 1 ? 0.5 : static_cast<double>(s) / (n_samples - 1);
    const double y = y_min + h + frac * (span - 2.0 * h);
    const double f0 = map_fn(y);
    const double fp = map_fn(y + h);
    const double fm = map_fn(y - h);
    if (!std::isfinite(f0) || !std::isfinite(fp) || !std::isfinite(fm)) return false;
    const double noise = 64.0 * eps * (std::abs(f0) + std::abs(fp) + std::abs(fm));
    const double d1 = (fp - fm) / (2.0 * h);
    const double second_diff = fp - 2.0 * f0 + fm;
    // First derivative must stand above rounding noise.
    if (!(std::abs(fp - fm) > noise)) return false;
    // Curvature must be resolvable and opposite in sign to the slope.
    if (!(std::abs(second_diff) > noise)) return false;
    const double d2 = second_diff / (h * h);
    if (!(d1 * d2 < 0.0)) return false;
  }
  return true;
}

ScalarMap beam_map(IpFamily family, double y_min, double y_max, double raw) {
  return [=](double y) { return ip_value(family, y, y_min, y_max, raw); };
}

PosReport pos_report(const std::vector<double>& y_min, const std::vector<double>& y_max,
                     const IpParams& params, double threshold_offset, int n_samples) {
  if (y_min.size() != y_max.size()) throw std::invalid_argument("bound vectors differ in length");
  params.validate(y_min.size());
  PosReport report;
  report.family = params.family;
  const ScalarMap identity = [](double y) { return y; };
  for (std::size_t i = 0; i < y_min.size(); ++i) {
    PosBeam b;
    b.beam = i;
    b.y_min = y_min[i];
    b.y_max = y_max[i];
    b.y_t = std::min(y_min[i] + threshold_offset, 0.5 * (y_min[i] + y_max[i]));
    const ScalarMap mapped = beam_map(params.family, b.y_min, b.y_max, params.raw_for(i));
    b.rho_linear = pos_ratio(identity, b.y_min, b.y_t, b.y_max);
    b.rho_mapped = pos_ratio(mapped, b.y_min, b.y_t, b.y_max);
    b.conditions_hold = check_conditions(mapped, b.y_min, b.y_max, n_samples);
    report.beams.push_back(b);
  }
  return report;
}

void write_pos_report_csv(std::ostream& out, const PosReport& report) {
  out << "beam,y_min,y_t,y_max,rho_linear,rho_mapped,conditions_hold\n";
  out.precision(10);
  for (const auto& b : report.beams) {
    out << b.beam << ',' << b.y_min << ',' << b.y_t << ',' << b.y_max << ',' << b.rho_linear << ','
        << b.rho_mapped << ',' << (b.conditions_hold ? 1 : 0) << '\n';
  }
}

}  // namespace lidarnav
