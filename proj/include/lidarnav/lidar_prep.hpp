#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lidarnav/gridworld.hpp"

namespace lidarnav {

/// Min-pooled scan with per-element measuring bounds.
struct PooledScan {
  std::vector<double> values;
  std::vector<double> y_min;
  std::vector<double> y_max;
  int window = 1;

  std::size_t size() const { return values.size(); }
};

/// Windowed minimum over consecutive groups of `k` beams. Bounds pool the same
/// way. Throws std::invalid_argument("pool window mismatch") if the beam count
/// is not a multiple of k.
PooledScan min_pool(const LidarFrame& raw, int k);

enum class IpFamily { Raw, LNorm, IPAPExp, IPAPLog, IPAPRec, IPAPRecN };

std::string_view to_string(IpFamily family);
IpFamily parse_ip_family(std::string_view name);
bool has_trainable_parameter(IpFamily family);

enum class ParamSharing { Shared, PerBeam };

std::string_view to_string(ParamSharing sharing);
ParamSharing parse_param_sharing(std::string_view name);

/// Smallest admissible gap between a distance and the reciprocal/log pole.
inline constexpr double kMinPoleGap = 1e-3;
/// Keeps the exponential base strictly inside (0, 1) in floating point.
inline constexpr double kBaseMargin = 1e-6;

// Scalar kernels. `raw` is the unconstrained trainable value; the constrained
// parameter is recovered by a smooth map:
//   IPAPExp:           lambda = m + (1 - 2m) * sigmoid(raw)
//   IPAPLog/IPAPRec(N): eta, beta = y_min - gap - softplus(raw + s(y_min))
// where s(y_min) makes raw = 0 land on a pole at exactly 0.

double constrained_parameter(IpFamily family, double raw, double y_min);
/// d constrained / d raw.
double constrained_derivative(IpFamily family, double raw, double y_min);
/// Inverse of constrained_parameter (throws if the value is outside the domain).
double raw_from_constrained(IpFamily family, double constrained, double y_min);

double ip_value(IpFamily family, double y, double y_min, double y_max, double raw);
double ip_dvalue_draw(IpFamily family, double y, double y_min, double y_max, double raw);
double ip_dvalue_dy(IpFamily family, double y, double y_min, double y_max, double raw);

/// Trainable raw parameters: one shared value or one per pooled beam.
struct IpParams {
  IpFamily family = IpFamily::Raw;
  ParamSharing sharing = ParamSharing::Shared;
  std::vector<double> raw;

  /// All-zero raw parameters (beta = eta = 0, lambda = 0.5).
  static IpParams initial(IpFamily family, ParamSharing sharing, std::size_t beams);

  std::size_t index_for(std::size_t beam) const {
    return sharing == ParamSharing::Shared ? 0 : beam;
  }
  double raw_for(std::size_t beam) const { return raw.empty() ? 0.0 : raw[index_for(beam)]; }
  double constrained(std::size_t beam, double y_min) const;
  void validate(std::size_t beams) const;
};

std::vector<double> ip_forward(const PooledScan& scan, const IpParams& params);

/// dp_i / d raw[index_for(i)]. Throws std::invalid_argument("no trainable
/// parameter") for Raw and LNorm.
std::vector<double> ip_param_grad(const PooledScan& scan, const IpParams& params);

using ScalarMap = std::function<double(double)>;

/// |(P(Y_T) - P(Y_min)) / (P(Y_max) - P(Y_min))|. Throws
/// std::invalid_argument("degenerate mapping") on a zero denominator.
double pos_ratio(const ScalarMap& map_fn, double y_min, double y_t, double y_max);

/// Numerically checks |P'| > 0 and P'P'' < 0 on `n_samples` evenly spaced
/// points of [y_min, y_max].
bool check_conditions(const ScalarMap& map_fn, double y_min, double y_max, int n_samples);

/// The IP mapping of one beam as a scalar function.
ScalarMap beam_map(IpFamily family, double y_min, double y_max, double raw);

inline constexpr double kDefaultThresholdOffset = 0.8;

struct PosBeam {
  std::size_t beam = 0;
  double y_min = 0.0;
  double y_t = 0.0;
  double y_max = 0.0;
  double rho_linear = 0.0;
  double rho_mapped = 0.0;
  bool conditions_hold = false;
};

struct PosReport {
  IpFamily family = IpFamily::Raw;
  std::vector<PosBeam> beams;
};

PosReport pos_report(const std::vector<double>& y_min, const std::vector<double>& y_max,
                     const IpParams& params, double threshold_offset = kDefaultThresholdOffset,
                     int n_samples = 200);

void write_pos_report_csv(std::ostream& out, const PosReport& report);

}  // namespace lidarnav
