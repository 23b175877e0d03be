#pragma once

#include <optional>
#include <string>
#include <vector>

#include <boost/rational.hpp>

namespace schrolab::bourgain {

using Rational = boost::rational<long long>;

std::string to_string(const Rational& r);
double to_double(const Rational& r);

struct CriticalExponents {
    Rational s_alpha_n;
    Rational s_b;
    Rational s_c;
};

// Regularity thresholds for u^{alpha1} conj(u)^{alpha2} with alpha1 + alpha2 = alpha + 1.
CriticalExponents critical_exponents(int alpha, int n);

struct ConstraintCheck {
    std::string name;
    bool holds = false;
};

struct ExponentPlan {
    int alpha = 0;
    int n = 0;
    Rational s_alpha_n, s_b, s_c;
    Rational p1, q1;
    std::optional<Rational> p2, q2;  // absent when alpha = 1
    Rational r1;
    std::optional<Rational> r2;
    Rational sigma1, sigma2;
    Rational b_lower;  // b must exceed this (and stay below 1/2)
    Rational b_hint;
    bool fallback = false;  // alpha = 2, n = 2: p = q = 4 for every factor
    std::vector<ConstraintCheck> checks;

    bool all_hold() const;
};

// Throws std::logic_error if a constraint fails (cannot happen for valid input).
ExponentPlan exponent_plan(int alpha, int n);

struct Table1Row {
    int alpha = 0;
    int n = 0;
    CriticalExponents e;
};

std::vector<Table1Row> table1();
std::string format_table1();

}  // namespace schrolab::bourgain
