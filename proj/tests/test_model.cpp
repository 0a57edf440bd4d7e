#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "trancheloss/model.hpp"

using namespace trancheloss;

TEST_SUITE_BEGIN("model");

namespace {

Loan loan(std::string id, double f, double p, double r, std::vector<double> w) {
    return Loan{std::move(id), f, p, r, std::move(w)};
}

} // namespace

TEST_CASE("validate_portfolio accepts and rejects") {
    SUBCASE("single full-notional loan") {
        const auto pf = validate_portfolio({loan("a", 1.0, 0.5, 0.0, {0.0})}, 1);
        CHECK(pf.size() == 1);
        CHECK(pf.factors == 1);
    }

    SUBCASE("loading norm at or above one") {
        CHECK_THROWS_AS((void)validate_portfolio({loan("a", 1.0, 0.5, 0.0, {0.8, 0.7})}, 2),
                        LoadingNormTooLarge);
        CHECK_THROWS_AS((void)validate_portfolio({loan("a", 1.0, 0.5, 0.0, {1.0})}, 1),
                        LoadingNormTooLarge);
    }

    SUBCASE("empty") {
        CHECK_THROWS_AS((void)validate_portfolio({}, 1), EmptyPortfolio);
    }

    SUBCASE("fraction sum off by more than the tolerance") {
        CHECK_THROWS_AS((void)validate_portfolio({loan("a", 0.6, 0.1, 0.0, {0.0}),
                                                  loan("b", 0.399, 0.1, 0.0, {0.0})},
                                                 1),
                        FractionSumMismatch);
        // tolerance-level slack passes
        CHECK_NOTHROW((void)validate_portfolio(
            {loan("a", 0.6, 0.1, 0.0, {0.0}), loan("b", 0.4 - 5e-10, 0.1, 0.0, {0.0})}, 1));
    }

    SUBCASE("partial notional only with the flag") {
        ValidateOptions allow;
        allow.allow_partial_notional = true;
        CHECK_NOTHROW((void)validate_portfolio({loan("a", 0.5, 0.1, 0.0, {0.0})}, 1, allow));
        CHECK_THROWS_AS((void)validate_portfolio({loan("a", 0.5, 0.1, 0.0, {0.0})}, 1),
                        FractionSumMismatch);
        CHECK_THROWS_AS(
            (void)validate_portfolio(
                {loan("a", 0.7, 0.1, 0.0, {0.0}), loan("b", 0.5, 0.1, 0.0, {0.0})}, 1, allow),
            FractionSumMismatch);
    }

    SUBCASE("field bounds") {
        CHECK_THROWS_AS((void)validate_portfolio({loan("a", 0.0, 0.1, 0.0, {0.0})}, 1),
                        FieldOutOfRange);
        CHECK_THROWS_AS((void)validate_portfolio({loan("a", 1.0, 0.0, 0.0, {0.0})}, 1),
                        FieldOutOfRange);
        CHECK_THROWS_AS((void)validate_portfolio({loan("a", 1.0, 1.0, 0.0, {0.0})}, 1),
                        FieldOutOfRange);
        CHECK_THROWS_AS((void)validate_portfolio({loan("a", 1.0, 0.1, 1.0, {0.0})}, 1),
                        FieldOutOfRange);
        CHECK_THROWS_AS((void)validate_portfolio({loan("a", 1.0, 0.1, -0.1, {0.0})}, 1),
                        FieldOutOfRange);
        CHECK_THROWS_AS((void)validate_portfolio({loan("a", 1.0, 0.1, 0.0, {0.0, 0.0})}, 1),
                        FieldOutOfRange);
    }

    SUBCASE("negative loadings are allowed") {
        CHECK_NOTHROW((void)validate_portfolio({loan("a", 1.0, 0.1, 0.0, {-0.6, 0.5})}, 2));
    }
}

TEST_CASE("effective exposure") {
    CHECK(effective_exposure(loan("a", 0.008, 0.015, 0.5, {0.5})) == 0.004);
    CHECK(effective_exposure(loan("a", 0.5, 0.1, 0.0, {0.0})) == 0.5);
    CHECK(effective_exposure(loan("a", 0.5, 0.1, 1.0 - 1e-9, {0.0})) ==
          doctest::Approx(5e-10).epsilon(1e-6));

    SUBCASE("monotone in f and r") {
        const double base = effective_exposure(loan("a", 0.4, 0.1, 0.3, {0.0}));
        CHECK(effective_exposure(loan("a", 0.5, 0.1, 0.3, {0.0})) > base);
        CHECK(effective_exposure(loan("a", 0.4, 0.1, 0.4, {0.0})) < base);
    }

    SUBCASE("portfolio exposure never exceeds the notional") {
        for (const auto name : preset_names()) {
            const auto pf = preset_portfolio(name);
            double total = 0.0;
            for (const Loan& l : pf.loans)
                total += effective_exposure(l);
            CHECK(total <= 1.0);
        }
    }
}

TEST_CASE("presets") {
    SUBCASE("paper125 endpoints") {
        const auto pf = preset_portfolio("paper125");
        REQUIRE(pf.size() == 125);
        const Loan& first = pf.loans.front();
        CHECK(first.fraction == 1.0 / 125.0);
        CHECK(first.default_prob == 0.015);
        CHECK(first.recovery == 0.5);
        CHECK(first.loadings[0] == 0.5);
        const Loan& last = pf.loans.back();
        CHECK(last.fraction == 1.0 / 125.0);
        CHECK(last.default_prob == 0.015 + 0.05);
        CHECK(last.recovery == 0.5 - 0.1);
        CHECK(last.loadings[0] == 0.5 - 0.1);
        CHECK(first.id == "loan_1");
        CHECK(last.id == "loan_125");
    }

    SUBCASE("paper25 endpoint") {
        const auto pf = preset_portfolio("paper25");
        REQUIRE(pf.size() == 25);
        const Loan& last = pf.loans.back();
        CHECK(last.fraction == 1.0 / 25.0);
        CHECK(last.default_prob == 0.015 + 0.05);
        CHECK(last.recovery == 0.5 - 0.1);
        CHECK(last.loadings[0] == 0.5 - 0.1);
    }

    SUBCASE("every preset validates its own output") {
        for (const auto name : preset_names()) {
            auto pf = preset_portfolio(name);
            CHECK_NOTHROW((void)validate_portfolio(std::move(pf.loans), pf.factors));
        }
    }

    CHECK_THROWS_AS((void)preset_portfolio("paper7"), UnknownPreset);
}

TEST_CASE("truncate_portfolio rescales the notionals") {
    const auto pf = truncate_portfolio(preset_portfolio("paper25"), 10);
    REQUIRE(pf.size() == 10);
    double sum = 0.0;
    for (const Loan& l : pf.loans)
        sum += l.fraction;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    // everything except f carries over
    const auto full = preset_portfolio("paper25");
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(pf.loans[i].default_prob == full.loans[i].default_prob);
        CHECK(pf.loans[i].recovery == full.loans[i].recovery);
        CHECK(pf.loans[i].loadings == full.loans[i].loadings);
    }
    CHECK_THROWS_AS((void)truncate_portfolio(full, 0), FieldOutOfRange);
    CHECK_THROWS_AS((void)truncate_portfolio(full, 26), FieldOutOfRange);
}

TEST_CASE("tranche bounds") {
    CHECK_NOTHROW(Tranche(0.0, 1.0));
    CHECK_NOTHROW(Tranche(0.03, 0.07));
    CHECK_THROWS_AS(Tranche(0.03, 0.03), FieldOutOfRange);
    CHECK_THROWS_AS(Tranche(0.07, 0.03), FieldOutOfRange);
    CHECK_THROWS_AS(Tranche(-0.01, 0.5), FieldOutOfRange);
    CHECK_THROWS_AS(Tranche(0.5, 1.01), FieldOutOfRange);
    const Tranche t(0.03, 0.07);
    CHECK(t.width() == doctest::Approx(0.04));
}

TEST_SUITE_END();
