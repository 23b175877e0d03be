#include "schrolab/exponents.hpp"

#include <sstream>
#include <stdexcept>

#include "schrolab/errors.hpp"

namespace schrolab::bourgain {

namespace {

Rational R(long long a, long long b = 1) { return Rational(a, b); }

Rational rmax(const Rational& a, const Rational& b) { return a < b ? b : a; }

void add(ExponentPlan& p, std::string name, bool holds) { p.checks.push_back({std::move(name), holds}); }

}  // namespace

std::string to_string(const Rational& r) {
    std::ostringstream os;
    os << r.numerator();
    if (r.denominator() != 1) os << '/' << r.denominator();
    return os.str();
}

double to_double(const Rational& r) { return boost::rational_cast<double>(r); }

CriticalExponents critical_exponents(int alpha, int n) {
    if (alpha < 1 || n < 1) throw ConfigError("critical_exponents: need alpha >= 1 and n >= 1");
    CriticalExponents e;
    e.s_c = R(n, 2) - R(2, alpha);
    if (alpha == 1) {
        e.s_alpha_n = R(n, 2) - 1;
    } else if (alpha == 2) {
        e.s_alpha_n = n == 1 ? R(0) : R(n, 2) - R(3, 4) - R(1, 4 * (n - 1));
    } else {
        e.s_alpha_n = e.s_c;
    }
    if (n <= 2)
        e.s_b = e.s_c;
    else if (n == 3)
        e.s_b = rmax(e.s_c, R(3, 4));
    else
        e.s_b = rmax(e.s_c, R(3 * n, n + 4));
    return e;
}

bool ExponentPlan::all_hold() const {
    for (const auto& c : checks)
        if (!c.holds) return false;
    return true;
}

ExponentPlan exponent_plan(int alpha, int n) {
    if (alpha < 1 || n < 2) throw ConfigError("exponent_plan: need alpha >= 1 and n >= 2");
    ExponentPlan p;
    p.alpha = alpha;
    p.n = n;
    const auto e = critical_exponents(alpha, n);
    p.s_alpha_n = e.s_alpha_n;
    p.s_b = e.s_b;
    p.s_c = e.s_c;
    const Rational half = R(1, 2);
    const Rational nn = R(n);
    const Rational am1 = R(alpha - 1);

    auto holder_checks = [&] {
        const Rational ip1 = 1 / p.p1, iq1 = 1 / p.q1, ip2 = 1 / *p.p2, iq2 = 1 / *p.q2;
        add(p, "4 <= p1", p.p1 >= R(4));
        add(p, "0 < 1/q1 <= 1/2 - 1/p1", iq1 > R(0) && iq1 <= half - ip1);
        add(p, "4 <= p2", *p.p2 >= R(4));
        add(p, "0 < 1/q2 <= 1/2 - 1/p2", iq2 > R(0) && iq2 <= half - ip2);
        add(p, "3/p1 + (alpha-1)/p2 = 1", 3 * ip1 + am1 * ip2 == R(1));
        add(p, "3/q1 + (alpha-1)/q2 = 1", 3 * iq1 + am1 * iq2 == R(1));
    };

    if (alpha >= 3) {
        p.p1 = R(6);
        p.p2 = R(2 * (alpha - 1));
        p.q1 = 1 / (R(1, 3) + (R(2, alpha) - 1) / (3 * nn));
        p.q2 = R(n * alpha * (alpha - 1), alpha - 2);
        p.r1 = 3 / (nn + R(2, alpha));
        p.r2 = R(alpha, 2);
        p.sigma1 = p.s_c / 3;
        p.sigma2 = p.s_c;
        p.b_lower = R(0);
        p.b_hint = R(5, 12);
        holder_checks();
        add(p, "1/r1 = 2/p1 + n/q1", 1 / p.r1 == 2 / p.p1 + nn / p.q1);
        add(p, "1/r2 = 2/p2 + n/q2", 1 / *p.r2 == 2 / *p.p2 + nn / *p.q2);
        add(p, "sigma1 = n/2 - (2/p1 + n/q1)", p.sigma1 == nn / 2 - (2 / p.p1 + nn / p.q1));
        add(p, "sigma2 = n/2 - (2/p2 + n/q2)", p.sigma2 == nn / 2 - (2 / *p.p2 + nn / *p.q2));
    } else if (alpha == 2 && n >= 3) {
        p.p1 = R(4);
        p.q1 = 3 * (1 + R(1, 4 * n - 5));
        p.p2 = R(4);
        p.q2 = R(4 * (n - 1));
        p.r1 = 1 / (2 / p.p1 + nn / p.q1);
        p.r2 = 1 / (2 / *p.p2 + nn / *p.q2);
        p.sigma1 = (nn - 2) * (half - 1 / p.q1);
        p.sigma2 = nn / 2 - 2 / *p.p2 - nn / *p.q2;
        p.b_lower = 1 - 1 / p.p1 - 1 / p.q1;
        p.b_hint = (p.b_lower + half) / 2;
        const Rational ip1 = 1 / p.p1, iq1 = 1 / p.q1, ip2 = 1 / *p.p2, iq2 = 1 / *p.q2;
        add(p, "0 < 1/p1 <= 1/q1 <= 1/2 <= 1/p1 + 1/q1 <= 1",
            ip1 > R(0) && ip1 <= iq1 && iq1 <= half && half <= ip1 + iq1 && ip1 + iq1 <= R(1));
        add(p, "b lower bound below 1/2", p.b_lower < half);
        add(p, "0 < 1/p2 <= 1/4, 0 <= 1/q2 <= 1/2 - 1/p2",
            ip2 > R(0) && ip2 <= R(1, 4) && iq2 >= R(0) && iq2 <= half - ip2);
        add(p, "3/p1 + 1/p2 = 1", 3 * ip1 + ip2 == R(1));
        add(p, "3/q1 + 1/q2 = 1", 3 * iq1 + iq2 == R(1));
    } else if (alpha == 2) {
        p.fallback = true;
        p.p1 = p.q1 = R(4);
        p.p2 = p.q2 = R(4);
        p.r1 = 1 / (2 / p.p1 + nn / p.q1);
        p.r2 = 1 / (2 / *p.p2 + nn / *p.q2);
        p.sigma1 = nn / 2 - (2 / p.p1 + nn / p.q1);
        p.sigma2 = nn / 2 - (2 / *p.p2 + nn / *p.q2);
        p.b_lower = R(1, 3);
        p.b_hint = R(5, 12);
        holder_checks();
    } else {
        p.p1 = p.q1 = R(3);
        p.r1 = 1 / (2 / p.p1 + nn / p.q1);
        p.sigma1 = (nn - 2) / 6;
        p.sigma2 = 3 * p.sigma1;  // regularity demanded of the second factor
        p.b_lower = 1 - 1 / p.p1 - 1 / p.q1;
        p.b_hint = R(5, 12);
        const Rational ip1 = 1 / p.p1, iq1 = 1 / p.q1;
        add(p, "0 < 1/p1 <= 1/q1 <= 1/2 <= 1/p1 + 1/q1 <= 1",
            ip1 > R(0) && ip1 <= iq1 && iq1 <= half && half <= ip1 + iq1 && ip1 + iq1 <= R(1));
        add(p, "sigma1 = (n-2)(1/2 - 1/q1)", p.sigma1 == (nn - 2) * (half - iq1));
        add(p, "3/p1 = 1", 3 * ip1 == R(1));
        add(p, "3/q1 = 1", 3 * iq1 == R(1));
    }

    const Rational time_sum = p.r2 ? 3 / p.r1 + am1 / *p.r2 : 3 / p.r1;
    add(p, "3/r1 + (alpha-1)/r2 = n + 2", time_sum == nn + 2);
    add(p, "3 sigma1 = sigma2 = s_alpha_n", 3 * p.sigma1 == p.sigma2 && p.sigma2 == p.s_alpha_n);
    add(p, "b_lower < b_hint < 1/2", p.b_lower < p.b_hint && p.b_hint < half && p.b_hint > R(0));

    for (const auto& c : p.checks)
        if (!c.holds) throw std::logic_error("exponent_plan: constraint violated: " + c.name);
    return p;
}

std::vector<Table1Row> table1() {
    std::vector<Table1Row> rows;
    for (auto [a, n] : {std::pair{2, 3}, {2, 4}, {2, 5}, {3, 4}}) rows.push_back({a, n, critical_exponents(a, n)});
    return rows;
}

std::string format_table1() {
    std::ostringstream os;
    os << "(alpha,n)  s_b    s_alpha_n  s_c\n";
    for (const auto& r : table1()) {
        std::ostringstream key;
        key << '(' << r.alpha << ',' << r.n << ')';
        os << key.str();
        for (std::size_t i = key.str().size(); i < 11; ++i) os << ' ';
        const std::string sb = to_string(r.e.s_b), sa = to_string(r.e.s_alpha_n);
        os << sb << std::string(7 - sb.size(), ' ') << sa << std::string(11 - sa.size(), ' ') << to_string(r.e.s_c)
           << '\n';
    }
    return os.str();
}

}  // namespace schrolab::bourgain
