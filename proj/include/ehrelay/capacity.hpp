#pragma once

// Rate formulas for the full-duplex degraded Gaussian relay channel
//
//   Y1 = a X1 + Z1            (relay)
//   Y2 = X1 + b X2 + Z2       (destination)
//
// with Z1, Z2 ~ N(0, noise). Rates are in bits per channel use; C(x) is the
// AWGN capacity 0.5 * log2(1 + x). All functions are pure.

#include <optional>
#include <string_view>

namespace ehrelay {

struct ChannelParams {
  double a = 1.0;      ///< source -> relay amplitude gain
  double b = 1.0;      ///< relay -> destination amplitude gain
  double noise = 1.0;  ///< noise power N at each receiver (W)
};

/// Throws DomainError unless a, b, noise are finite and positive.
void validate(const ChannelParams& ch);

/// True when the relay-assisted branch exists, i.e. a > 1.
bool relay_can_help(const ChannelParams& ch) noexcept;

enum class Branch {
  MultiAccessLimited,  ///< C~1, the cooperative (coherent-combining) rate
  BroadcastLimited,    ///< C~2, limited by the source -> relay link
};

std::string_view to_string(Branch b) noexcept;

struct RateBranch {
  Branch active = Branch::BroadcastLimited;
  /// C~1; empty when its branch condition does not hold.
  std::optional<double> multi_access;
  double broadcast = 0.0;  ///< C~2
  double value = 0.0;      ///< the active rate
};

double c_awgn(double snr);

/// Relay-assisted branch, evaluated as the raw closed form. The inner radicand
/// a^2 p1 - b^2 p2 is clamped at zero, and p1 == 0 yields 0.
double ctilde1(const ChannelParams& ch, double p1, double p2);

double ctilde2(const ChannelParams& ch, double p1);

/// Branch selection: C~1 is eligible when a > 1 and (a^2 - 1) p1 >= p2 (true
/// for p2 == 0). When eligible the active value is min(C~1, C~2).
RateBranch capacity_min(const ChannelParams& ch, double p1, double p2);

/// Relay power beyond which C~1 stops increasing: (a^2 - 1) p1 / b^2.
/// Zero when a <= 1.
double relay_saturation_power(const ChannelParams& ch, double p1) noexcept;

/// C~1 with p2 held at min(p2, relay_saturation_power(p1)). This is the
/// concave, nondecreasing extension of C~1 to the whole quadrant; it equals
/// ctilde1 whenever b^2 p2 <= (a^2 - 1) p1. Requires a > 1.
double ctilde1_saturated(const ChannelParams& ch, double p1, double p2);

/// lam * C~1 + (1 - lam) * C~2, with C~1 in its saturated form.
double weighted_rate(const ChannelParams& ch, double p1, double p2, double lam);

struct RateDerivatives {
  double value = 0.0;
  double d1 = 0.0;  ///< d/dp1
  double d2 = 0.0;  ///< d/dp2 (+inf at p2 == 0 < p1 when lam > 0)
  double d11 = 0.0;
  double d12 = 0.0;
  double d22 = 0.0;
};

/// Value, gradient and Hessian of weighted_rate. At the saturation boundary
/// and at p1 == 0 the one-sided (saturated) derivatives are returned; these
/// are valid supergradients.
RateDerivatives weighted_rate_derivatives(const ChannelParams& ch, double p1,
                                          double p2, double lam);

// Single-variable specialisations.

/// Source fixed at p_fixed, relay varies.
double cap_relay_only(const ChannelParams& ch, double p_fixed, double p2);
/// Relay fixed at p_fixed, source varies.
double cap_source_only(const ChannelParams& ch, double p1, double p_fixed);
/// Relay power tied to the source, p2 = gamma * p1.
double cap_proportional(const ChannelParams& ch, double p1, double gamma);

}  // namespace ehrelay
