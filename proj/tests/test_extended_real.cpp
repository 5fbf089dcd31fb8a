#include <doctest.h>

#include <cmath>
#include <random>

#include "escmeasure/extended_real.hpp"

using escm::XReal;

TEST_CASE("round trip through doubles") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-40.0, 40.0);
    for (int i = 0; i < 2000; ++i) {
        const double v = std::copysign(std::exp(U(rng)), U(rng));
        const XReal x = XReal::from_double(v);
        CHECK(x.to_double() == doctest::Approx(v).epsilon(1e-15));
    }
    CHECK(XReal::from_double(0.0).is_zero());
    CHECK(XReal::from_double(-3.5).sign() == -1);
}

TEST_CASE("field ops agree with doubles in range") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> U(-30.0, 30.0);
    for (int i = 0; i < 2000; ++i) {
        const double a = std::copysign(std::exp(U(rng) * 0.1), U(rng));
        const double b = std::copysign(std::exp(U(rng) * 0.1), U(rng));
        const XReal xa = XReal::from_double(a), xb = XReal::from_double(b);
        CHECK((xa * xb).to_double() == doctest::Approx(a * b).epsilon(1e-13));
        CHECK((xa / xb).to_double() == doctest::Approx(a / b).epsilon(1e-13));
        if (std::fabs(a + b) > 1e-12 * (std::fabs(a) + std::fabs(b)))
            CHECK((xa + xb).to_double() == doctest::Approx(a + b).epsilon(1e-11));
    }
}

TEST_CASE("comparisons across tower heights") {
    const XReal small = XReal::from_ln(-1e10);          // exp(-1e10)
    const XReal smaller = XReal::from_log_tower(-1, 1, 300.0);  // exp(-exp(300))
    const XReal tiny = XReal::from_log_tower(-1, 2, 300.0);     // exp(-exp(exp(300)))
    CHECK(smaller < small);
    CHECK(tiny < smaller);
    CHECK(tiny > XReal::zero());
    CHECK(small < XReal::one());

    const XReal big = XReal::from_ln(1e10);
    const XReal bigger = XReal::from_log_tower(+1, 1, 300.0);
    CHECK(big < bigger);
    CHECK(XReal::one() < big);
    CHECK(-bigger < tiny);
}

TEST_CASE("exp and log are inverse representation shifts") {
    const XReal x = XReal::from_double(-1234.5);
    const XReal e = XReal::exp_of(x);
    CHECK(e.ln_double() == doctest::Approx(-1234.5));
    const XReal back = XReal::log_of(e);
    CHECK(back.to_double() == doctest::Approx(-1234.5));

    // exp of a huge negative value has a deep log tower
    const XReal deep = XReal::exp_of(-XReal::from_ln(800.0));
    CHECK(deep > XReal::zero());
    CHECK(deep < XReal::from_ln(-1e300));
    CHECK(deep.log_height() >= 1);
    const XReal lg = XReal::log_of(deep);
    CHECK(lg.sign() == -1);
    CHECK(lg.ln_double() == doctest::Approx(800.0));
}

TEST_CASE("powers in log space") {
    const XReal v = XReal::from_ln(-5000.0);
    const XReal p = v.pow(3.0);
    CHECK(p.ln_double() == doctest::Approx(-15000.0));
    CHECK(v.pow(0.0) == XReal::one());
    const XReal inv = v.pow(-1.0);
    CHECK(inv.ln_double() == doctest::Approx(5000.0));
}

TEST_CASE("absorbing addition at depth") {
    const XReal a = XReal::from_log_tower(+1, 1, 400.0);  // exp(exp(400))
    const XReal b = XReal::from_ln(1e8);
    const XReal s = a + b;  // b is absorbed
    CHECK(s == a);
    // but ordering is still strict against larger towers
    CHECK(s < XReal::from_log_tower(+1, 1, 401.0));
}

TEST_CASE("subtraction and signed sums") {
    const XReal a = XReal::from_double(10.0);
    const XReal b = XReal::from_double(10.0 - 1e-9);
    const XReal d = a - b;
    CHECK(d.to_double() == doctest::Approx(1e-9).epsilon(1e-6));
    CHECK((a - a).is_zero());
    CHECK((b - a).sign() == -1);
}

TEST_CASE("iterated exponentials climb one level per step") {
    XReal v = XReal::from_double(3.0);
    for (int i = 0; i < 50; ++i) v = XReal::exp_of(v);
    CHECK(v.log_height() >= 45);
    XReal w = XReal::from_double(3.0000001);
    for (int i = 0; i < 50; ++i) w = XReal::exp_of(w);
    CHECK(v < w);
}

TEST_CASE("to_string is stable and readable") {
    CHECK(XReal::from_double(0.25).to_string() == "0.25");
    CHECK(XReal::zero().to_string() == "0");
    const std::string s = XReal::from_ln(-1e120).to_string();
    CHECK(s.find("exp(") != std::string::npos);
}

TEST_CASE("division by zero and inf-inf are rejected") {
    CHECK_THROWS(XReal::one() / XReal::zero());
    CHECK_THROWS(XReal::infinity() - XReal::infinity());
    CHECK_THROWS(XReal::log_of(XReal::zero()));
    CHECK_THROWS(XReal::from_double(-1.0).pow(0.5));
}
