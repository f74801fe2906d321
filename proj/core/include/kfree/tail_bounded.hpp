#pragma once

#include <cmath>
#include <stdexcept>

namespace kfree {

// A value approximating an infinite sum/product, together with a rigorous
// bound on the truncation error |true - value|.  The bound covers truncation
// only; rounding is kept negligible by computing constants in extended
// precision and everything else with compensated summation.
struct TailBounded {
    double value = 0.0;
    double tail = 0.0;

    TailBounded() = default;
    TailBounded(double v, double t) : value(v), tail(t) {
        if (!(t >= 0.0) || !std::isfinite(t))
            throw std::invalid_argument("TailBounded: tail must be finite and >= 0");
    }

    static TailBounded exact(double v) { return TailBounded(v, 0.0); }

    double upper() const { return value + tail; }
    double lower() const { return value - tail; }

    friend TailBounded operator+(const TailBounded& a, const TailBounded& b) {
        return TailBounded(a.value + b.value, a.tail + b.tail);
    }
    friend TailBounded operator-(const TailBounded& a, const TailBounded& b) {
        return TailBounded(a.value - b.value, a.tail + b.tail);
    }
    // First-order product bound: |ab - AB| <= |a| tb + |b| ta + ta tb.
    friend TailBounded operator*(const TailBounded& a, const TailBounded& b) {
        double t = std::abs(a.value) * b.tail + std::abs(b.value) * a.tail + a.tail * b.tail;
        return TailBounded(a.value * b.value, t);
    }
    TailBounded scaled(double c) const { return TailBounded(c * value, std::abs(c) * tail); }
};

// |a/b - A/B| <= (|b| ta + |a| tb) / (|b| (|b| - tb)), requires |b| > tb.
inline TailBounded divide(const TailBounded& a, const TailBounded& b) {
    double ab = std::abs(b.value);
    if (!(ab > b.tail))
        throw std::domain_error("TailBounded divide: denominator interval contains zero");
    double t = (ab * a.tail + std::abs(a.value) * b.tail) / (ab * (ab - b.tail));
    return TailBounded(a.value / b.value, t);
}

// True iff the two enclosures overlap, i.e. the values agree within the
// combined truncation tails (plus an optional absolute slack).
inline bool consistent(const TailBounded& a, const TailBounded& b, double slack = 0.0) {
    return std::abs(a.value - b.value) <= a.tail + b.tail + slack;
}

}  // namespace kfree
