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

#pragma once

#include <vector>

namespace scratchir {

/// Regularized incomplete beta function I_x(a, b), continued-fraction
/// evaluation, |error| < 1e-10 over the tested domain.
double incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with df degrees of freedom.
double student_t_cdf(double t, double df);

struct PairedTTest {
    double t_statistic;
    double p_value;       // two-sided
    double mean_diff;
    bool degenerate;      // zero variance with nonzero mean
};

/// Two-sided paired t-test on per-item differences a[i] - b[i].
/// Zero variance: all-zero differences give p = 1; otherwise the
/// degenerate flag is set and p = 0.
PairedTTest paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace scratchir
