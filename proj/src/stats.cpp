// Copyright 2026 the scratch-ir authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#include "scratchir/stats.hpp"

#include <cmath>

#include "scratchir/common.hpp"

namespace scratchir {

namespace {

// modified Lentz continued fraction for the incomplete beta
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;

    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) {
        d = kTiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) {
            return h;
        }
    }
    throw_numeric("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) {
        throw_numeric("incomplete_beta: a and b must be > 0");
    }
    if (x < 0.0 || x > 1.0) {
        throw_numeric("incomplete_beta: x must be in [0, 1]");
    }
    if (x == 0.0) {
        return 0.0;
    }
    if (x == 1.0) {
        return 1.0;
    }
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (df <= 0.0) {
        throw_numeric("student_t_cdf: df must be > 0");
    }
    if (t == 0.0) {
        return 0.5;
    }
    double x = df / (df + t * t);
    double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

PairedTTest paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw_data("paired_ttest: unequal sample sizes");
    }
    size_t n = a.size();
    if (n < 2) {
        throw_data("paired_ttest: need at least 2 paired observations");
    }
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mean += a[i] - b[i];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double d = (a[i] - b[i]) - mean;
        ss += d * d;
    }
    double sd = std::sqrt(ss / static_cast<double>(n - 1));

    PairedTTest out{0.0, 1.0, mean, false};
    if (sd == 0.0) {
        if (mean == 0.0) {
            return out;  // all differences zero: p = 1
        }
        out.degenerate = true;
        out.p_value = 0.0;
        out.t_statistic = mean > 0.0 ? HUGE_VAL : -HUGE_VAL;
        return out;
    }
    double se = sd / std::sqrt(static_cast<double>(n));
    out.t_statistic = mean / se;
    double df = static_cast<double>(n - 1);
    out.p_value = 2.0 * (1.0 - student_t_cdf(std::fabs(out.t_statistic), df));
    return out;
}

}  // namespace scratchir
