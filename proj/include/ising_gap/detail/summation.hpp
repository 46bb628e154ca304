#pragma once

#include <cmath>

namespace ising_gap::detail {

/// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
    CompensatedSum& operator+=(double v) noexcept {
        const double t = sum_ + v;
        if (std::fabs(sum_) >= std::fabs(v))
            compensation_ += (sum_ - t) + v;
        else
            compensation_ += (v - t) + sum_;
        sum_ = t;
        return *this;
    }

    CompensatedSum& operator+=(const CompensatedSum& other) noexcept {
        *this += other.sum_;
        *this += other.compensation_;
        return *this;
    }

    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

}  // namespace ising_gap::detail
