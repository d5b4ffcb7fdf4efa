#pragma once

#include <cmath>
#include <type_traits>

#include "rmap/errors.hpp"

namespace rmap {

// Forward-mode dual number. Nesting Dual<Dual<double>> propagates second
// derivatives through one evaluation pass, which is how expression jets get
// exact Hessians.
template <typename T>
struct Dual {
    T value{};
    T deriv{};

    constexpr Dual() = default;
    constexpr Dual(T v) : value(v) {}
    constexpr Dual(T v, T d) : value(v), deriv(d) {}

    // Lets a plain double seed the innermost level of a nested dual.
    template <typename S, typename = std::enable_if_t<std::is_arithmetic_v<S> && !std::is_same_v<S, T>>>
    constexpr Dual(S s) : value(static_cast<T>(s)) {}

    Dual& operator+=(const Dual& r) {
        value += r.value;
        deriv += r.deriv;
        return *this;
    }
    Dual& operator-=(const Dual& r) {
        value -= r.value;
        deriv -= r.deriv;
        return *this;
    }
};

template <typename T>
struct is_dual : std::false_type {};
template <typename T>
struct is_dual<Dual<T>> : std::true_type {};

// Innermost (function) value of a possibly nested dual.
inline double primal(double x) { return x; }
template <typename T>
double primal(const Dual<T>& x) {
    return primal(x.value);
}

template <typename T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
    return {a.value + b.value, a.deriv + b.deriv};
}
template <typename T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
    return {a.value - b.value, a.deriv - b.deriv};
}
template <typename T>
Dual<T> operator-(const Dual<T>& a) {
    return {-a.value, -a.deriv};
}
template <typename T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
    return {a.value * b.value, a.value * b.deriv + a.deriv * b.value};
}
template <typename T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
    if (primal(b.value) == 0.0) throw EvalError("division by zero");
    T q = a.value / b.value;
    return {q, (a.deriv - q * b.deriv) / b.value};
}

using std::cos;
using std::exp;
using std::log;
using std::sin;
using std::sqrt;

template <typename T>
Dual<T> sin(const Dual<T>& x) {
    return {sin(x.value), cos(x.value) * x.deriv};
}
template <typename T>
Dual<T> cos(const Dual<T>& x) {
    return {cos(x.value), -sin(x.value) * x.deriv};
}
template <typename T>
Dual<T> exp(const Dual<T>& x) {
    T e = exp(x.value);
    return {e, e * x.deriv};
}
template <typename T>
Dual<T> log(const Dual<T>& x) {
    if (primal(x.value) <= 0.0) throw EvalError("log of non-positive value");
    return {log(x.value), x.deriv / x.value};
}
template <typename T>
Dual<T> sqrt(const Dual<T>& x) {
    double p = primal(x.value);
    if (p < 0.0) throw EvalError("sqrt of negative value");
    // Derivative blows up at 0; only the plain value is defined there.
    if (p == 0.0) throw EvalError("sqrt derivative singular at zero");
    T r = sqrt(x.value);
    return {r, x.deriv / (T(2.0) * r)};
}

inline double pow_int(double base, long long n) {
    if (n < 0) {
        if (base == 0.0) throw EvalError("zero raised to negative power");
        return 1.0 / pow_int(base, -n);
    }
    double acc = 1.0, b = base;
    for (long long k = n; k > 0; k >>= 1) {
        if (k & 1) acc *= b;
        if (k > 1) b *= b;
    }
    return acc;
}

// Integer powers by repeated squaring so negative bases stay exact.
template <typename T>
Dual<T> pow_int(const Dual<T>& base, long long n) {
    if (n < 0) {
        if (primal(base.value) == 0.0) throw EvalError("zero raised to negative power");
        return Dual<T>(T(1.0)) / pow_int(base, -n);
    }
    Dual<T> acc(T(1.0));
    Dual<T> b = base;
    for (long long k = n; k > 0; k >>= 1) {
        if (k & 1) acc = acc * b;
        if (k > 1) b = b * b;
    }
    return acc;
}

} // namespace rmap
