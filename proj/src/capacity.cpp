#include "ehrelay/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ehrelay/errors.hpp"

namespace ehrelay {

namespace {

constexpr double kInvTwoLn2 = 0.5 / std::numbers::ln2;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_power(double p, const char* name) {
  if (!(p >= 0.0) || !std::isfinite(p)) {
    throw DomainError(std::string(name) + " must be finite and >= 0");
  }
}

void require_lambda(const ChannelParams& ch, double lam) {
  if (!(lam >= 0.0 && lam <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  if (lam > 0.0 && !relay_can_help(ch)) {
    throw BranchUndefinedError("lambda > 0 requires a > 1");
  }
}

// SNR of the saturated relay-assisted branch with its first and second
// partial derivatives. Below saturation S = (u + beta w)^2 / (a^2 N) with
// u = sqrt(a^2 p1 - b^2 p2), w = sqrt(p2), beta = b sqrt(a^2 - 1).
struct Snr {
  double s, s1, s2, s11, s12, s22;
};

Snr saturated_snr(const ChannelParams& ch, double p1, double p2) {
  const double a2 = ch.a * ch.a;
  const double b2 = ch.b * ch.b;
  const double n = ch.noise;
  if (p1 <= 0.0 || p2 >= relay_saturation_power(ch, p1)) {
    return {a2 * p1 / n, a2 / n, 0.0, 0.0, 0.0, 0.0};
  }
  const double scale = 1.0 / (a2 * n);
  // u^2 >= a^2 p1 - (a^2 - 1) p1 = p1 > 0 below saturation.
  const double u = std::sqrt(a2 * p1 - b2 * p2);
  const double u3 = u * u * u;
  const double q1 = a2 / (2.0 * u);
  const double q11 = -a2 * a2 / (4.0 * u3);
  if (p2 == 0.0) {
    // d/dp2 is unbounded here; the mixed and p2 second derivatives are unused.
    const double q = u;
    return {q * q * scale,      2.0 * q * q1 * scale, kInf, 2.0 * (q1 * q1 + q * q11) * scale,
            0.0,                -kInf};
  }
  const double beta = ch.b * std::sqrt(a2 - 1.0);
  const double w = std::sqrt(p2);
  const double q = u + beta * w;
  const double q2 = -b2 / (2.0 * u) + beta / (2.0 * w);
  const double q12 = a2 * b2 / (4.0 * u3);
  const double q22 = -b2 * b2 / (4.0 * u3) - beta / (4.0 * w * w * w);
  return {q * q * scale,
          2.0 * q * q1 * scale,
          2.0 * q * q2 * scale,
          2.0 * (q1 * q1 + q * q11) * scale,
          2.0 * (q1 * q2 + q * q12) * scale,
          2.0 * (q2 * q2 + q * q22) * scale};
}

RateDerivatives rate_of(const Snr& s) {
  const double d = kInvTwoLn2 / (1.0 + s.s);
  const double dd = -d / (1.0 + s.s);
  RateDerivatives r;
  r.value = kInvTwoLn2 * std::log1p(s.s);
  r.d1 = d * s.s1;
  r.d2 = d * s.s2;
  r.d11 = dd * s.s1 * s.s1 + d * s.s11;
  r.d12 = std::isfinite(s.s2) ? dd * s.s1 * s.s2 + d * s.s12 : 0.0;
  r.d22 = std::isfinite(s.s2) ? dd * s.s2 * s.s2 + d * s.s22 : -kInf;
  return r;
}

// Relay-assisted SNR from the closed form with the clamp, p1 > 0.
double ctilde1_snr(const ChannelParams& ch, double p1, double p2) {
  const double a2 = ch.a * ch.a;
  const double b2 = ch.b * ch.b;
  const double inner = std::max(0.0, p1 * (a2 * p1 - b2 * p2));
  const double root = std::sqrt(inner) + std::sqrt(b2 * (a2 - 1.0) * p1 * p2);
  return root * root / (a2 * p1 * ch.noise);
}

// (sqrt(max(0, a^2 - b^2 g)) + b sqrt(g (a^2 - 1)))^2 / (a^2 N): the
// relay-assisted SNR per unit source power when p2 = g p1.
double ctilde1_slope(const ChannelParams& ch, double g) {
  const double a2 = ch.a * ch.a;
  const double root = std::sqrt(std::max(0.0, a2 - ch.b * ch.b * g)) +
                      ch.b * std::sqrt(g * (a2 - 1.0));
  return root * root / (a2 * ch.noise);
}

}  // namespace

void validate(const ChannelParams& ch) {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!ok(ch.a)) throw DomainError("channel gain a must be finite and > 0");
  if (!ok(ch.b)) throw DomainError("channel gain b must be finite and > 0");
  if (!ok(ch.noise)) throw DomainError("noise power must be finite and > 0");
}

bool relay_can_help(const ChannelParams& ch) noexcept { return ch.a > 1.0; }

std::string_view to_string(Branch b) noexcept {
  return b == Branch::MultiAccessLimited ? "C1" : "C2";
}

double c_awgn(double snr) {
  if (!(snr >= 0.0) || !std::isfinite(snr)) {
    throw DomainError("snr must be finite and >= 0");
  }
  return kInvTwoLn2 * std::log1p(snr);
}

double ctilde1(const ChannelParams& ch, double p1, double p2) {
  require_power(p1, "p1");
  require_power(p2, "p2");
  if (ch.a < 1.0) throw BranchUndefinedError("C~1 is undefined for a < 1");
  if (p1 == 0.0) return 0.0;
  return c_awgn(ctilde1_snr(ch, p1, p2));
}

double ctilde2(const ChannelParams& ch, double p1) {
  require_power(p1, "p1");
  return c_awgn(std::max(1.0, ch.a * ch.a) * p1 / ch.noise);
}

RateBranch capacity_min(const ChannelParams& ch, double p1, double p2) {
  require_power(p1, "p1");
  require_power(p2, "p2");
  RateBranch r;
  r.broadcast = ctilde2(ch, p1);
  r.value = r.broadcast;
  if (relay_can_help(ch) && (ch.a * ch.a - 1.0) * p1 >= p2) {
    r.multi_access = ctilde1(ch, p1, p2);
    if (*r.multi_access <= r.broadcast) {
      r.active = Branch::MultiAccessLimited;
      r.value = *r.multi_access;
    }
  }
  return r;
}

double relay_saturation_power(const ChannelParams& ch, double p1) noexcept {
  if (!relay_can_help(ch)) return 0.0;
  return (ch.a * ch.a - 1.0) * p1 / (ch.b * ch.b);
}

double ctilde1_saturated(const ChannelParams& ch, double p1, double p2) {
  require_power(p1, "p1");
  require_power(p2, "p2");
  if (!relay_can_help(ch)) throw BranchUndefinedError("C~1 requires a > 1");
  return c_awgn(saturated_snr(ch, p1, p2).s);
}

double weighted_rate(const ChannelParams& ch, double p1, double p2, double lam) {
  require_lambda(ch, lam);
  double v = 0.0;
  if (lam > 0.0) v += lam * ctilde1_saturated(ch, p1, p2);
  if (lam < 1.0) v += (1.0 - lam) * ctilde2(ch, p1);
  return v;
}

RateDerivatives weighted_rate_derivatives(const ChannelParams& ch, double p1,
                                          double p2, double lam) {
  require_power(p1, "p1");
  require_power(p2, "p2");
  require_lambda(ch, lam);
  RateDerivatives out;
  if (lam < 1.0) {
    const double m = std::max(1.0, ch.a * ch.a) / ch.noise;
    const RateDerivatives r2 = rate_of({m * p1, m, 0.0, 0.0, 0.0, 0.0});
    const double w = 1.0 - lam;
    out.value += w * r2.value;
    out.d1 += w * r2.d1;
    out.d11 += w * r2.d11;
  }
  if (lam > 0.0) {
    const RateDerivatives r1 = rate_of(saturated_snr(ch, p1, p2));
    out.value += lam * r1.value;
    out.d1 += lam * r1.d1;
    out.d2 += lam * r1.d2;
    out.d11 += lam * r1.d11;
    out.d12 += lam * r1.d12;
    out.d22 += lam * r1.d22;
  }
  return out;
}

double cap_relay_only(const ChannelParams& ch, double p_fixed, double p2) {
  require_power(p_fixed, "p_fixed");
  require_power(p2, "p2");
  const double c2 = ctilde2(ch, p_fixed);
  if (!relay_can_help(ch) || p2 > (ch.a * ch.a - 1.0) * p_fixed) return c2;
  if (p_fixed == 0.0) return 0.0;
  return std::min(c2, c_awgn(ctilde1_snr(ch, p_fixed, p2)));
}

double cap_source_only(const ChannelParams& ch, double p1, double p_fixed) {
  require_power(p1, "p1");
  require_power(p_fixed, "p_fixed");
  const double c2 = ctilde2(ch, p1);
  if (!relay_can_help(ch) || (ch.a * ch.a - 1.0) * p1 < p_fixed) return c2;
  if (p1 == 0.0) return 0.0;
  return std::min(c2, c_awgn(ctilde1_snr(ch, p1, p_fixed)));
}

double cap_proportional(const ChannelParams& ch, double p1, double gamma) {
  require_power(p1, "p1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be > 0");
  const double c2 = ctilde2(ch, p1);
  if (!relay_can_help(ch) || (ch.a * ch.a - 1.0) * p1 < gamma * p1) return c2;
  return std::min(c2, c_awgn(ctilde1_slope(ch, gamma) * p1));
}

}  // namespace ehrelay
