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

#include "doctest.h"
#include "scratchir/common.hpp"

using namespace scratchir;

TEST_CASE("incomplete beta against a high-precision table") {
    // reference values computed with 30-digit arbitrary precision
    struct Row {
        double a, b, x, expected;
    };
    const Row rows[] = {
        {0.5, 0.5, 0.5, 0.5},
        {2, 3, 0.4, 0.52480000000000004},
        {5, 0.5, 0.9, 0.31664291502001231},
        {0.5, 5, 0.1, 0.68335708497998776},
        {10, 10, 0.5, 0.5},
        {4.5, 0.5, 0.999, 0.92646138336885117},
        {1, 1, 0.3, 0.29999999999999999},
        {9.5, 0.5, 0.99, 0.66626413769865827},
        {0.5, 0.5, 0.01, 0.063768560858519849},
        {30, 30, 0.6, 0.9404479957321775},
        {2.5, 2.5, 0.2, 0.077188625242206706},
        {100, 100, 0.5, 0.5},
        {0.5, 9.5, 0.0001, 0.034314845714317434},
        {50, 2, 0.99, 0.90750910070630484},
        {3, 7, 0.35, 0.66272672112499995},
    };
    for (const auto& r : rows) {
        INFO("I_", r.x, "(", r.a, ", ", r.b, ")");
        CHECK(std::fabs(incomplete_beta(r.a, r.b, r.x) - r.expected) < 1e-10);
    }
    CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    CHECK_THROWS_AS(incomplete_beta(0.0, 1.0, 0.5), Error);
    CHECK_THROWS_AS(incomplete_beta(1.0, 1.0, 1.5), Error);
}

TEST_CASE("student t CDF basics") {
    CHECK(student_t_cdf(0.0, 9.0) == 0.5);
    // symmetry
    for (double t : {0.3, 1.0, 2.5, 7.0}) {
        CHECK(student_t_cdf(t, 5.0) + student_t_cdf(-t, 5.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    // monotone in t
    CHECK(student_t_cdf(1.0, 9.0) < student_t_cdf(2.0, 9.0));
    // df=1 is Cauchy: CDF(1) = 0.75
    CHECK(student_t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-10));
}

TEST_CASE("paired t-test against the reference implementation") {
    // diffs fixed by the spec; expected values from an independent
    // reference implementation (scipy.stats.ttest_rel)
    std::vector<double> a = {0.1, 0.12, 0.09, 0.11, 0.1, 0.13, 0.08, 0.1, 0.11, 0.1};
    std::vector<double> b(a.size(), 0.0);
    PairedTTest tt = paired_ttest(a, b);
    CHECK(std::fabs(tt.t_statistic - 23.000945160164) < 1e-6);
    CHECK(std::fabs(tt.p_value - 2.63746143988818e-09) < 1e-6);
    CHECK(tt.p_value == doctest::Approx(2.63746143988818e-09).epsilon(1e-6));
    CHECK(tt.mean_diff == doctest::Approx(0.104).epsilon(1e-12));
    CHECK_FALSE(tt.degenerate);
}

TEST_CASE("paired t-test degenerate branches") {
    SUBCASE("identical samples: p = 1") {
        std::vector<double> a = {0.5, 0.25, 0.75};
        PairedTTest tt = paired_ttest(a, a);
        CHECK(tt.p_value == 1.0);
        CHECK_FALSE(tt.degenerate);
    }
    SUBCASE("constant nonzero difference is flagged degenerate") {
        std::vector<double> a = {1.0, 1.0, 1.0};
        std::vector<double> b = {0.5, 0.5, 0.5};
        PairedTTest tt = paired_ttest(a, b);
        CHECK(tt.degenerate);
        CHECK(tt.p_value == 0.0);
        CHECK(tt.mean_diff == doctest::Approx(0.5));
    }
    SUBCASE("too few observations") {
        CHECK_THROWS_AS(paired_ttest({1.0}, {2.0}), Error);
        CHECK_THROWS_AS(paired_ttest({1.0, 2.0}, {1.0}), Error);
    }
}

TEST_CASE("two-sided p is symmetric in the sign of the difference") {
    std::vector<double> a = {0.3, 0.5, 0.45, 0.6, 0.2};
    std::vector<double> b = {0.25, 0.4, 0.5, 0.5, 0.15};
    PairedTTest ab = paired_ttest(a, b);
    PairedTTest ba = paired_ttest(b, a);
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
    CHECK(ab.t_statistic == doctest::Approx(-ba.t_statistic).epsilon(1e-12));
}
