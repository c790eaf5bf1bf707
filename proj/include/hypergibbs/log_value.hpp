#pragma once

#include <cmath>
#include <limits>
#include <string>

namespace hypergibbs {

/// Extended real log-mass: a finite log value, or the tagged −∞ meaning the
/// underlying mass is exactly zero.
class LogValue {
 public:
  static LogValue neg_inf() { return LogValue(); }
  static LogValue from_log(double log_value) {
    LogValue v;
    v.finite_ = true;
    v.log_ = log_value;
    return v;
  }
  static LogValue from_linear(double mass) {
    return mass > 0.0 ? from_log(std::log(mass)) : neg_inf();
  }

  bool is_neg_inf() const { return !finite_; }
  bool is_finite() const { return finite_; }

  /// The log value; −infinity as an IEEE value when the mass is zero.
  double value() const { return finite_ ? log_ : -std::numeric_limits<double>::infinity(); }

  LogValue operator+(const LogValue& other) const {
    if (!finite_ || !other.finite_) return neg_inf();
    return from_log(log_ + other.log_);
  }

  bool operator==(const LogValue& other) const {
    return finite_ == other.finite_ && (!finite_ || log_ == other.log_);
  }

  std::string to_string() const;

 private:
  LogValue() = default;
  bool finite_ = false;
  double log_ = 0.0;
};

/// Streaming log-sum-exp with a running maximum.
class LogSumExp {
 public:
  void add(double log_term) {
    if (!any_) {
      max_ = log_term;
      sum_ = 1.0;
      any_ = true;
    } else if (log_term <= max_) {
      sum_ += std::exp(log_term - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    }
  }

  void merge(const LogSumExp& other) {
    if (!other.any_) return;
    if (!any_) {
      *this = other;
      return;
    }
    if (other.max_ <= max_) {
      sum_ += other.sum_ * std::exp(other.max_ - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - other.max_) + other.sum_;
      max_ = other.max_;
    }
  }

  LogValue result() const {
    return any_ ? LogValue::from_log(max_ + std::log(sum_)) : LogValue::neg_inf();
  }

 private:
  bool any_ = false;
  double max_ = 0.0;
  double sum_ = 0.0;
};

inline std::string LogValue::to_string() const {
  if (!finite_) return "-inf";
  return std::to_string(log_);
}

}  // namespace hypergibbs
