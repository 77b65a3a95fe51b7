// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <cmath>
#include <numbers>

#include <catch_amalgamated.hpp>

#include <cris/quadrature.hpp>

using namespace cris;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("adaptive Gauss-Kronrod on smooth integrands") {
    auto r = quad::integrate([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-13, 0.0);
    CHECK(r.converged);
    CHECK_THAT(r.value, WithinRel(std::numbers::e - 1.0, 1e-14));

    r = quad::integrate([](double x) { return std::cos(40.0 * x); }, 0.0, 3.0, 1e-12, 1e-15);
    CHECK(r.converged);
    CHECK_THAT(r.value, WithinAbs(std::sin(120.0) / 40.0, 1e-13));
}

TEST_CASE("adaptive Gauss-Kronrod on endpoint singularities") {
    auto r = quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10, 0.0, 5000);
    CHECK(r.converged);
    CHECK_THAT(r.value, WithinRel(2.0, 1e-9));

    r = quad::integrate([](double x) { return std::log(x); }, 0.0, 1.0, 1e-12, 0.0, 5000);
    CHECK(r.converged);
    CHECK_THAT(r.value, WithinRel(-1.0, 1e-11));
}

TEST_CASE("adaptive Gauss-Kronrod edge cases") {
    auto r = quad::integrate([](double) { return 1.0; }, 2.0, 2.0, 1e-10, 0.0);
    CHECK(r.converged);
    CHECK(r.value == 0.0);

    r = quad::integrate([](double x) { return x; }, 1.0, 0.0, 1e-12, 0.0);
    CHECK_THAT(r.value, WithinRel(-0.5, 1e-14));

    // A jump cannot be resolved with one interval; the result must say so.
    r = quad::integrate([](double x) { return x < 0.3 ? 0.0 : 1.0; }, 0.0, 1.0, 1e-14, 0.0, 1);
    CHECK_FALSE(r.converged);
    CHECK(r.evaluations == 15);
}

TEST_CASE("Gauss-Legendre rules are exact to degree 2n-1") {
    for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 16u, 33u}) {
        const auto rule = quad::gauss_legendre(n);
        REQUIRE(rule.nodes.size() == n);
        double wsum = 0.0;
        for (double w : rule.weights) {
            CHECK(w > 0.0);
            wsum += w;
        }
        CHECK_THAT(wsum, WithinRel(2.0, 1e-14));
        for (std::size_t deg = 0; deg <= 2 * n - 1; ++deg) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                s += rule.weights[i] * std::pow(rule.nodes[i], double(deg));
            const double exact = deg % 2 ? 0.0 : 2.0 / double(deg + 1);
            CHECK_THAT(s, WithinAbs(exact, 1e-13));
        }
        for (std::size_t i = 1; i < n; ++i)
            CHECK(rule.nodes[i] > rule.nodes[i - 1]);
    }
}

TEST_CASE("composite Gauss-Legendre") {
    const auto rule = quad::composite_gauss_legendre(0.0, 2.0, 7, 8);
    REQUIRE(rule.nodes.size() == 56);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        s += rule.weights[i] * std::sin(5.0 * rule.nodes[i]);
    CHECK_THAT(s, WithinAbs((1.0 - std::cos(10.0)) / 5.0, 1e-14));
}
