#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "esb/errors.hpp"

namespace esb {

/**
Uniformly sampled scalar signal with a bounded look-back.

Sample j sits at time j * dt. Indices below zero read the configured initial
value, so the signal is defined on (-inf, latest]. Between samples the signal
is the linear interpolant, which is also what integral() integrates exactly.
*/
template <std::floating_point S = double>
class SampledHistory
{
public:
    SampledHistory(S dt, S window, S initial_value) : dt_(dt), initial_(initial_value)
    {
        if (!(dt > S(0))) throw ConfigError("SampledHistory: dt must be positive");
        if (!(window >= S(0))) throw ConfigError("SampledHistory: window must be non-negative");
        data_.resize(static_cast<std::size_t>(std::ceil(window / dt)) + 3, initial_value);
    }

    void push(S value)
    {
        data_[static_cast<std::size_t>(count_ % capacity())] = value;
        ++count_;
    }

    S dt() const { return dt_; }
    long long size() const { return count_; }
    S initial_value() const { return initial_; }

    /// Time of the newest sample; -dt when empty.
    S latest_time() const { return static_cast<S>(count_ - 1) * dt_; }

    /// Sample j; pre-history reads the initial value.
    S sample(long long j) const
    {
        if (j < 0) return initial_;
        if (j >= count_ || j < count_ - capacity()) {
            throw std::out_of_range("SampledHistory: sample outside retained window");
        }
        return data_[static_cast<std::size_t>(j % capacity())];
    }

    /// Interpolated value; times past the newest sample hold the newest value.
    S value_at(S t) const
    {
        if (count_ == 0) return initial_;
        const S x = t / dt_;
        const S last = static_cast<S>(count_ - 1);
        if (x >= last) return sample(count_ - 1);
        const S base = std::floor(x);
        const auto j = static_cast<long long>(base);
        const S frac = x - base;
        if (frac == S(0)) return sample(j);
        return (S(1) - frac) * sample(j) + frac * sample(j + 1);
    }

    /// Integral of the linear interpolant over [t0, t1], t0 <= t1 <= latest_time().
    S integral(S t0, S t1) const
    {
        if (t1 < t0) throw std::invalid_argument("SampledHistory: reversed integration bounds");
        const S x0 = t0 / dt_;
        const S x1 = t1 / dt_;
        auto j0 = static_cast<long long>(std::ceil(x0));
        auto j1 = static_cast<long long>(std::floor(x1));
        if (j0 > j1) {
            // both bounds inside one cell
            return (t1 - t0) * S(0.5) * (value_at(t0) + value_at(t1));
        }
        S sum = S(0);
        for (long long j = j0; j < j1; ++j) {
            sum += S(0.5) * (sample(j) + sample(j + 1));
        }
        sum *= dt_;
        const S head = static_cast<S>(j0) * dt_ - t0;
        if (head > S(0)) sum += head * S(0.5) * (value_at(t0) + sample(j0));
        const S tail = t1 - static_cast<S>(j1) * dt_;
        if (tail > S(0)) sum += tail * S(0.5) * (sample(j1) + value_at(t1));
        return sum;
    }

private:
    long long capacity() const { return static_cast<long long>(data_.size()); }

    S dt_;
    S initial_;
    std::vector<S> data_;
    long long count_ = 0;
};

} // namespace esb
