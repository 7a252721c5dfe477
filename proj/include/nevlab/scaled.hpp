#pragma once

#include <cmath>
#include <complex>
#include <limits>

namespace nevlab {

using cplx = std::complex<double>;

/// Complex number stored as mant * exp(log_scale) so that values like
/// e^{2z} at |z| = 500 stay representable. The mantissa is kept in
/// [0.5, 2] in modulus; zero has mantissa 0 and log_scale = -inf.
class ScaledComplex {
 public:
  ScaledComplex() = default;
  explicit ScaledComplex(cplx value) : mant_(value), log_scale_(0.0) { normalize(); }
  ScaledComplex(cplx mant, double log_scale) : mant_(mant), log_scale_(log_scale) { normalize(); }

  /// exp(w) without overflow.
  static ScaledComplex exp(cplx w) {
    return ScaledComplex(std::polar(1.0, w.imag()), w.real());
  }

  bool is_zero() const noexcept { return mant_ == cplx{0.0, 0.0}; }
  cplx mantissa() const noexcept { return mant_; }
  double log_scale() const noexcept { return log_scale_; }

  /// log |value|; -inf for zero.
  double log_abs() const {
    if (is_zero()) return -std::numeric_limits<double>::infinity();
    return log_scale_ + std::log(std::abs(mant_));
  }

  /// Plain complex value; may overflow to inf or underflow to 0.
  cplx value() const {
    if (is_zero()) return {0.0, 0.0};
    return mant_ * std::exp(log_scale_);
  }

  /// value * exp(-shift), used to bring a family of values to a common scale.
  cplx rescaled(double shift) const {
    if (is_zero()) return {0.0, 0.0};
    return mant_ * std::exp(log_scale_ - shift);
  }

  friend ScaledComplex operator*(const ScaledComplex& a, const ScaledComplex& b) {
    if (a.is_zero() || b.is_zero()) return {};
    return {a.mant_ * b.mant_, a.log_scale_ + b.log_scale_};
  }

  friend ScaledComplex operator+(const ScaledComplex& a, const ScaledComplex& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const double top = std::max(a.log_scale_, b.log_scale_);
    return {a.mant_ * std::exp(a.log_scale_ - top) + b.mant_ * std::exp(b.log_scale_ - top), top};
  }

  friend ScaledComplex operator-(const ScaledComplex& a) { return {-a.mant_, a.log_scale_}; }
  friend ScaledComplex operator-(const ScaledComplex& a, const ScaledComplex& b) { return a + (-b); }

  ScaledComplex& operator+=(const ScaledComplex& o) { return *this = *this + o; }
  ScaledComplex& operator*=(const ScaledComplex& o) { return *this = *this * o; }

  /// a / b as an ordinary complex number. Caller guarantees b != 0.
  friend cplx ratio(const ScaledComplex& a, const ScaledComplex& b) {
    if (a.is_zero()) return {0.0, 0.0};
    return (a.mant_ / b.mant_) * std::exp(a.log_scale_ - b.log_scale_);
  }

  friend ScaledComplex pow(const ScaledComplex& a, int k) {
    ScaledComplex out(cplx{1.0, 0.0});
    for (int i = 0; i < k; ++i) out *= a;
    return out;
  }

 private:
  void normalize() {
    const double a = std::abs(mant_);
    if (a == 0.0 || !std::isfinite(log_scale_)) {
      if (a == 0.0 || log_scale_ == -std::numeric_limits<double>::infinity()) {
        mant_ = {0.0, 0.0};
        log_scale_ = -std::numeric_limits<double>::infinity();
      }
      return;
    }
    if (a < 0.5 || a > 2.0) {
      log_scale_ += std::log(a);
      mant_ /= a;
    }
  }

  cplx mant_{0.0, 0.0};
  double log_scale_ = -std::numeric_limits<double>::infinity();
};

}  // namespace nevlab
