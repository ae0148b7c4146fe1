#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "stcsta/core.hpp"

using namespace stcsta;

namespace {

std::vector<StreamId> two_streams() { return {{0, Feature::AmbientTemp}, {1, Feature::AmbientTemp}}; }

}  // namespace

TEST_CASE("feature names round-trip")
{
    for (Feature f : kAllFeatures)
        CHECK(parse_feature(to_string(f)) == f);
    CHECK_THROWS_AS(parse_feature("wind_direction"), std::invalid_argument);
    CHECK(to_string(StreamId{3, Feature::RelHumidity}) == "3:rel_humidity");
}

TEST_CASE("reading matrix shape and access")
{
    ReadingMatrix m(two_streams(), regular_timestamps(0, 120, 3), {1, 2, 3, 4, kMissing, 6});
    CHECK(m.n_streams() == 2);
    CHECK(m.n_slots() == 3);
    CHECK(m.at(1, 2) == 6);
    CHECK(m.count_missing() == 1);
    CHECK(m.row(1)[0] == 4);

    const auto s = m.slice(1, 2);
    CHECK(s.n_slots() == 2);
    CHECK(s.timestamps()[0] == 120);
    CHECK(s.at(0, 1) == 3);

    const std::size_t rows[] = {1};
    CHECK(m.select_rows(rows).at(0, 0) == 4);

    CHECK_THROWS_AS(ReadingMatrix(two_streams(), {0, 1}, {1, 2, 3}), std::invalid_argument);

    // NaN compares equal to NaN for matrix equality.
    ReadingMatrix copy = m;
    CHECK(copy == m);
    copy.at(0, 0) = 9;
    CHECK_FALSE(copy == m);
}

TEST_CASE("validate_matrix")
{
    const RoundConfig cfg{100.0, 2, 2};
    SUBCASE("valid")
    {
        ReadingMatrix m(two_streams(), regular_timestamps(0, 50, 4), {1, kMissing, 3, 4, 5, 6, 7, kMissing});
        CHECK(validate_matrix(m, cfg).ok());
    }
    SUBCASE("T not a multiple of m")
    {
        ReadingMatrix m(two_streams(), regular_timestamps(0, 50, 3), {1, 2, 3, 4, 5, 6});
        const auto v = validate_matrix(m, cfg);
        REQUIRE_FALSE(v.ok());
        CHECK(v.violations[0].kind == Violation::Kind::Dimension);
        CHECK(v.violations[0].message.find("T not a multiple of m") != std::string::npos);
    }
    SUBCASE("first slot of a round missing")
    {
        ReadingMatrix m(two_streams(), regular_timestamps(0, 50, 4), {1, 2, kMissing, 4, 5, 6, 7, 8});
        const auto v = validate_matrix(m, cfg);
        REQUIRE(v.violations.size() == 1);
        CHECK(v.violations[0].kind == Violation::Kind::MissingFirstOfRound);
        CHECK(v.violations[0].stream == 0u);
        CHECK(v.violations[0].slot == 2u);
    }
    SUBCASE("timestamps")
    {
        ReadingMatrix bad(two_streams(), {0, 50, 50, 150}, std::vector<double>(8, 1.0));
        CHECK_FALSE(validate_matrix(bad, cfg).ok());
        ReadingMatrix irregular(two_streams(), {0, 50, 110, 150}, std::vector<double>(8, 1.0));
        const auto v = validate_matrix(irregular, cfg);
        REQUIRE_FALSE(v.ok());
        CHECK(v.violations[0].kind == Violation::Kind::IrregularStep);
    }
    SUBCASE("duplicate stream")
    {
        ReadingMatrix m({{0, Feature::WindSpeed}, {0, Feature::WindSpeed}}, regular_timestamps(0, 50, 2),
                        std::vector<double>(4, 1.0));
        const auto v = validate_matrix(m, cfg);
        REQUIRE_FALSE(v.ok());
        CHECK(v.violations[0].kind == Violation::Kind::DuplicateStream);
    }
}

TEST_CASE("reduction fixed point")
{
    CHECK(ReductionPct::from_correlation(0.78).units() == 78'000'000);
    CHECK(ReductionPct::from_correlation(0.78).complement().units() == 22'000'000);
    CHECK(ReductionPct::from_correlation(-0.4).units() == 0);
    CHECK(ReductionPct::from_correlation(1.5).units() == ReductionPct::kFull);
    CHECK(ReductionPct::from_percent(12.5).units() == 12'500'000);
    CHECK_THROWS_AS(ReductionPct::from_percent(100.5), std::domain_error);
    CHECK_THROWS_AS(ReductionPct::from_percent(-1), std::domain_error);
    CHECK(format_percent(ReductionPct::from_percent(17)) == "17");
    CHECK(format_percent(ReductionPct::from_percent(12.5)) == "12.5");
    CHECK(format_percent(ReductionPct::from_units(1)) == "0.000001");
}

TEST_CASE("slots_for_reduction")
{
    // floor(50 * 0.75) = 37 samples, gap 1.
    auto p = slots_for_reduction(25.0, 50);
    CHECK(p.samples == 37);
    CHECK(p.gap == 1);

    p = slots_for_reduction(0.0, 50);
    CHECK(p.samples == 50);
    CHECK(p.gap == 1);

    // Full reduction still takes the round's first sample.
    p = slots_for_reduction(100.0, 50);
    CHECK(p.samples == 1);
    CHECK(p.gap == 50);

    p = slots_for_reduction(80.0, 50);
    CHECK(p.samples == 10);
    CHECK(p.gap == 5);

    p = slots_for_reduction(83.0, 50);  // floor(8.5) = 8, gap 6
    CHECK(p.samples == 8);
    CHECK(p.gap == 6);
    CHECK((p.samples - 1) * p.gap < 50);

    CHECK_THROWS_AS(slots_for_reduction(101.0, 50), std::domain_error);
    CHECK_THROWS_AS(slots_for_reduction(10.0, 0), std::domain_error);

    for (int sr = 1; sr <= 60; ++sr)
        for (int pct = 0; pct <= 100; ++pct) {
            const auto q = slots_for_reduction(static_cast<double>(pct), sr);
            CHECK(q.samples >= 1);
            CHECK(q.samples <= sr);
            CHECK((q.samples - 1) * q.gap < sr);
        }
}

TEST_CASE("sampling schedule")
{
    const SamplingSchedule s({ReductionPct::from_percent(0), ReductionPct::from_percent(90)}, 50);
    CHECK(s.size() == 2);
    CHECK(s.samples_next_round == std::vector<int>{50, 5});
    CHECK(SamplingSchedule::full_rate(3, 10).samples_next_round == std::vector<int>{10, 10, 10});
}
