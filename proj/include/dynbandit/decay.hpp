#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "dynbandit/core_model.hpp"

namespace dynbandit {

/// Compensated (Kahan) accumulator; discount products sum up to 1e9 log
/// terms, some as small as 1e-12, so naive summation loses too many digits.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

/**
 * Scalar drift-rate schedule q_t for the parameter random walk
 * Q_t = q_t * Sigma_{t-1}. One type serves both roles it plays in an
 * experiment: the generator's true rate (delta_t) and the inference-side
 * assumption (q_t).
 *
 * Families:
 *   static            q_t = 0
 *   constant          q_t = eta
 *   power             q_t = eta * t^(-p)
 *   exponential       q_t = eta * gamma^t
 */
class DriftSchedule {
 public:
  enum class Family { Static, Constant, Power, Exponential };

  static DriftSchedule statical() { return DriftSchedule(Family::Static, 0.0, 0.0, 0.0); }

  static DriftSchedule constant(double eta) {
    require(eta > 0.0, "DriftSchedule::constant: eta must be > 0");
    return DriftSchedule(Family::Constant, eta, 0.0, 0.0);
  }

  static DriftSchedule power(double eta, double p) {
    require(eta > 0.0, "DriftSchedule::power: eta must be > 0");
    return DriftSchedule(Family::Power, eta, p, 0.0);
  }

  static DriftSchedule exponential(double eta, double gamma) {
    require(eta > 0.0, "DriftSchedule::exponential: eta must be > 0");
    require(gamma > 0.0, "DriftSchedule::exponential: gamma must be > 0");
    return DriftSchedule(Family::Exponential, eta, 0.0, gamma);
  }

  Family family() const { return family_; }
  double eta() const { return eta_; }
  double p() const { return p_; }
  double gamma() const { return gamma_; }
  bool is_static() const { return family_ == Family::Static; }

  /// q_t for t >= 1.
  double q_at(std::int64_t t) const {
    require(t >= 1, "q_at: t must be >= 1");
    switch (family_) {
      case Family::Static: return 0.0;
      case Family::Constant: return eta_;
      case Family::Power: return eta_ * std::pow(static_cast<double>(t), -p_);
      case Family::Exponential: return eta_ * std::pow(gamma_, static_cast<double>(t));
    }
    return 0.0;
  }

  /// Per-step discount lambda_t = 1 / (1 + q_t); 1 exactly iff q_t = 0.
  double lambda_at(std::int64_t t) const { return std::exp(-log_one_plus_q(t)); }

  /// log(1 + q_t), stable for q_t anywhere from 1e-12 up to overflow range.
  double log_one_plus_q(std::int64_t t) const {
    require(t >= 1, "log_one_plus_q: t must be >= 1");
    switch (family_) {
      case Family::Static:
        return 0.0;
      case Family::Constant:
        return std::log1p(eta_);
      case Family::Power: {
        const double log_q = std::log(eta_) - p_ * std::log(static_cast<double>(t));
        if (log_q > 36.0) return log_q;  // log1p(q) - q differs below double precision
        return std::log1p(eta_ * std::pow(static_cast<double>(t), -p_));
      }
      case Family::Exponential: {
        const double log_q = std::log(eta_) + static_cast<double>(t) * std::log(gamma_);
        if (log_q > 36.0) return log_q;
        return std::log1p(std::exp(log_q));
      }
    }
    return 0.0;
  }

 private:
  DriftSchedule(Family f, double eta, double p, double gamma)
      : family_(f), eta_(eta), p_(p), gamma_(gamma) {}

  Family family_;
  double eta_;
  double p_;
  double gamma_;
};

/// Cumulative discount factor lambda_{t:T}, kept in log domain.
struct DiscountFactor {
  double value;
  double log_value;
};

/// lambda_{t:T} = prod_{tau=t+1}^{T} 1/(1 + q_tau); lambda_{T:T} = 1.
inline DiscountFactor discount_factor(const DriftSchedule& schedule, std::int64_t t,
                                      std::int64_t T) {
  require(t >= 1, "discount_factor: t must be >= 1");
  require(t <= T, "discount_factor: t must not exceed T");
  KahanSum acc;
  for (std::int64_t tau = t + 1; tau <= T; ++tau) acc.add(schedule.log_one_plus_q(tau));
  const double log_value = -acc.value();
  return DiscountFactor{std::exp(log_value), log_value};
}

/**
 * Incremental evaluator of lambda_{1:T} over increasing T; lets callers walk
 * a whole table of horizons in one O(T_max) pass instead of one O(T) pass
 * per row.
 */
class CumulativeDiscount {
 public:
  explicit CumulativeDiscount(DriftSchedule schedule)
      : schedule_(std::move(schedule)), horizon_(1) {}

  void advance_to(std::int64_t T) {
    require(T >= horizon_, "CumulativeDiscount: horizon may only advance");
    while (horizon_ < T) {
      ++horizon_;
      acc_.add(schedule_.log_one_plus_q(horizon_));
    }
  }

  std::int64_t horizon() const { return horizon_; }
  double log_value() const { return -acc_.value(); }
  double value() const { return std::exp(log_value()); }

 private:
  DriftSchedule schedule_;
  std::int64_t horizon_;
  KahanSum acc_;
};

enum class RateTag {
  SuperExponential,
  Exponential,
  SubExponential,
  PowerLaw,
  BoundedBelow,
};

inline const char* to_string(RateTag tag) {
  switch (tag) {
    case RateTag::SuperExponential: return "super_exponential";
    case RateTag::Exponential: return "exponential";
    case RateTag::SubExponential: return "sub_exponential";
    case RateTag::PowerLaw: return "power_law";
    case RateTag::BoundedBelow: return "bounded_below";
  }
  return "?";
}

/**
 * Asymptotic behavior of lambda_{1:T} for one schedule: the rate family,
 * an evaluatable closed form for diagnostics, and the limit lower bound
 * when the cumulative discount does not vanish.
 *
 * The closed forms keep every derived term rather than only the leading
 * order, so ratio diagnostics against the exact product stabilize:
 *
 *   p < 0       exp{p T log T - p T - T log eta}
 *   p = 0       (1+eta) exp{-log(1+eta) T}            (exact)
 *   0 < p < 1   exp{-(eta/(1-p)) T^{1-p} + (eta^2/(2(1-2p))) T^{1-2p}}
 *               (p = 1/2: exp{-2 eta sqrt(T) + (eta^2/2) log T})
 *   p = 1       (T + eta)^{-eta}
 *   p > 1       exp{(eta/(p-1)) (T^{1-p} - 1)}  ->  exp{-eta/(p-1)}
 *   gamma < 1   exp{(eta/(1-gamma)) (gamma^{T+1} - 1)} -> exp{-eta/(1-gamma)}
 *   gamma = 1   as p = 0
 *   gamma > 1   exp{-log(gamma) (T-1)(T+2)/2 - (T-1) log eta}
 */
class RateClass {
 public:
  enum class Case {
    PowerNegative,
    PowerZero,
    PowerSub,
    PowerOne,
    PowerBounded,
    ExpBounded,
    ExpSuper,
  };

  RateClass(RateTag tag, Case c, double eta, double p, double gamma,
            std::optional<double> lower_bound, std::string descriptor)
      : tag_(tag),
        case_(c),
        eta_(eta),
        p_(p),
        gamma_(gamma),
        lower_bound_(lower_bound),
        descriptor_(std::move(descriptor)) {}

  RateTag tag() const { return tag_; }
  Case rate_case() const { return case_; }
  const std::optional<double>& lower_bound() const { return lower_bound_; }
  const std::string& descriptor() const { return descriptor_; }

  double log_asymptote(std::int64_t T) const {
    require(T >= 2, "log_asymptote: T must be >= 2");
    const double Td = static_cast<double>(T);
    switch (case_) {
      case Case::PowerNegative:
        return p_ * Td * std::log(Td) - p_ * Td - Td * std::log(eta_);
      case Case::PowerZero:
        return std::log1p(eta_) - Td * std::log1p(eta_);
      case Case::PowerSub:
        if (p_ == 0.5) {
          return -2.0 * eta_ * std::sqrt(Td) + 0.5 * eta_ * eta_ * std::log(Td);
        }
        return -(eta_ / (1.0 - p_)) * std::pow(Td, 1.0 - p_) +
               (eta_ * eta_ / (2.0 * (1.0 - 2.0 * p_))) * std::pow(Td, 1.0 - 2.0 * p_);
      case Case::PowerOne:
        return -eta_ * std::log(Td + eta_);
      case Case::PowerBounded:
        return (eta_ / (p_ - 1.0)) * (std::pow(Td, 1.0 - p_) - 1.0);
      case Case::ExpBounded:
        return (eta_ / (1.0 - gamma_)) * (std::pow(gamma_, Td + 1.0) - 1.0);
      case Case::ExpSuper:
        return -std::log(gamma_) * (Td - 1.0) * (Td + 2.0) / 2.0 - (Td - 1.0) * std::log(eta_);
    }
    return 0.0;
  }

 private:
  RateTag tag_;
  Case case_;
  double eta_;
  double p_;
  double gamma_;
  std::optional<double> lower_bound_;
  std::string descriptor_;
};

/// Classifies a non-static schedule's cumulative discount decay.
inline RateClass classify_rate(const DriftSchedule& s) {
  using Case = RateClass::Case;
  require(!s.is_static(), "classify_rate: static schedule has no decay to classify");
  const double eta = s.eta();
  switch (s.family()) {
    case DriftSchedule::Family::Constant:
      return RateClass(RateTag::Exponential, Case::PowerZero, eta, 0.0, 0.0, std::nullopt,
                       "(1+eta)*exp{-log(1+eta)*T}");
    case DriftSchedule::Family::Power: {
      const double p = s.p();
      if (p < 0.0) {
        return RateClass(RateTag::SuperExponential, Case::PowerNegative, eta, p, 0.0,
                         std::nullopt, "exp{p*T*log(T)}");
      }
      if (p == 0.0) {
        return RateClass(RateTag::Exponential, Case::PowerZero, eta, p, 0.0, std::nullopt,
                         "(1+eta)*exp{-log(1+eta)*T}");
      }
      if (p < 1.0) {
        return RateClass(RateTag::SubExponential, Case::PowerSub, eta, p, 0.0, std::nullopt,
                         "exp{-(eta/(1-p))*T^(1-p)}");
      }
      if (p == 1.0) {
        return RateClass(RateTag::PowerLaw, Case::PowerOne, eta, p, 0.0, std::nullopt,
                         "(T+eta)^(-eta)");
      }
      return RateClass(RateTag::BoundedBelow, Case::PowerBounded, eta, p, 0.0,
                       std::exp(-eta / (p - 1.0)), "exp{-eta/(p-1)} limit");
    }
    case DriftSchedule::Family::Exponential: {
      const double gamma = s.gamma();
      if (gamma < 1.0) {
        return RateClass(RateTag::BoundedBelow, Case::ExpBounded, eta, 0.0, gamma,
                         std::exp(-eta / (1.0 - gamma)), "exp{-eta/(1-gamma)} limit");
      }
      if (gamma == 1.0) {
        return RateClass(RateTag::Exponential, Case::PowerZero, eta, 0.0, gamma, std::nullopt,
                         "(1+eta)*exp{-log(1+eta)*T}");
      }
      return RateClass(RateTag::SuperExponential, Case::ExpSuper, eta, 0.0, gamma, std::nullopt,
                       "exp{-log(gamma)*T^2}");
    }
    case DriftSchedule::Family::Static:
      break;
  }
  throw std::logic_error("classify_rate: unreachable");
}

/// Closed-form asymptote evaluated at horizon T (may underflow to 0 for
/// fast-vanishing families; use log_asymptote for diagnostics at scale).
inline double asymptote_value(const RateClass& rate, std::int64_t T) {
  return std::exp(rate.log_asymptote(T));
}

/// Process noise Q_t = q_t * Sigma_prev for the random-walk propagation.
inline Matrix Q_matrix(const DriftSchedule& schedule, std::int64_t t, const Matrix& sigma_prev) {
  require(is_positive_definite(sigma_prev), "Q_matrix: Sigma_prev not positive definite");
  return schedule.q_at(t) * sigma_prev;
}

}  // namespace dynbandit
