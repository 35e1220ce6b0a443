#include <doctest.h>

#include <sstream>

#include "coxhawkes/csv.hpp"
#include "coxhawkes/domain.hpp"
#include "coxhawkes/rng.hpp"

using namespace coxhawkes;

namespace {
Domain unit_domain(double t_max = 50.0) {
    return Domain{t_max, {0.0, 1.0}, {0.0, 1.0}};
}
}  // namespace

TEST_CASE("validate_events sorts and keeps in-window events") {
    std::vector<Event> ev{{3.0, 0.5, 0.5}, {1.0, 0.2, 0.2}, {2.0, 0.9, 0.1}};
    EventSet out = validate_events(ev, unit_domain());
    REQUIRE(out.size() == 3);
    CHECK(out[0].t == 1.0);
    CHECK(out[1].t == 2.0);
    CHECK(out[2].t == 3.0);

    // Idempotent on an already validated set.
    EventSet again = validate_events(out, unit_domain());
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(again[i].t == out[i].t);
        CHECK(again[i].x == out[i].x);
    }
}

TEST_CASE("validate_events on the empty set") {
    EventSet out = validate_events(std::vector<Event>{}, unit_domain());
    CHECK(out.empty());
}

TEST_CASE("out-of-window and non-finite events are rejected with context") {
    CHECK_THROWS_WITH_AS(validate_events({{51.0, 0.5, 0.5}}, unit_domain()),
                         doctest::Contains("outside time window"), DataError);
    CHECK_THROWS_WITH_AS(validate_events({{1.0, 1.5, 0.5}}, unit_domain()),
                         doctest::Contains("outside spatial region"), DataError);
    CHECK_THROWS_WITH_AS(
        validate_events({{1.0, 0.5, 0.5}, {std::nan(""), 0.5, 0.5}}, unit_domain()),
        doctest::Contains("event 1"), DataError);
}

TEST_CASE("tied times keep insertion order") {
    std::vector<Event> ev{{2.0, 0.1, 0.1}, {2.0, 0.2, 0.2}, {1.0, 0.3, 0.3}};
    EventSet out = EventSet::from_unsorted(ev);
    CHECK(out[0].t == 1.0);
    CHECK(out[1].x == 0.1);
    CHECK(out[2].x == 0.2);
}

TEST_CASE("branching ratio is alpha in closed form") {
    CHECK(branching_ratio({0.5, 0.7, 0.5, 0.5}) == 0.5);
    CHECK(branching_ratio({0.0, 0.7, 0.5, 0.5}) == 0.0);  // pure Cox boundary
    CHECK(branching_ratio({0.73, 0.18, 1e-4, 1e-4}) == 0.73);
    CHECK_THROWS_AS(branching_ratio({1.0, 0.7, 0.5, 0.5}), ConfigError);
    CHECK_THROWS_AS(branching_ratio({0.5, -1.0, 0.5, 0.5}), ConfigError);
}

TEST_CASE("domain validation") {
    CHECK_THROWS_AS((Domain{0.0, {0, 1}, {0, 1}}.validate()), ConfigError);
    CHECK_THROWS_AS((Domain{1.0, {1, 1}, {0, 1}}.validate()), ConfigError);
    CHECK_NOTHROW(unit_domain().validate());
}

TEST_CASE("event csv round-trips at 17 digits") {
    RngStream rng(77);
    std::vector<Event> ev;
    for (int i = 0; i < 50; ++i) {
        Event e;
        e.t = rng.uniform() * 50.0;
        e.x = rng.uniform();
        e.y = rng.uniform();
        if (i % 3 == 0) e.gen = static_cast<int>(rng.uniform_index(4));
        ev.push_back(e);
    }
    EventSet set = EventSet::from_unsorted(ev);
    std::ostringstream os;
    write_events_csv(os, set, CsvMetadata{123, 456});
    std::istringstream is(os.str());
    auto back = read_events_csv(is);
    REQUIRE(back.size() == set.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].t == set[i].t);
        CHECK(back[i].x == set[i].x);
        CHECK(back[i].y == set[i].y);
        CHECK(back[i].gen == set[i].gen);
    }
}

TEST_CASE("event csv reports malformed rows by line number") {
    std::istringstream bad("t,x,y\n1.0,0.5,0.5\n2.0,oops,0.5\n");
    CHECK_THROWS_WITH_AS(read_events_csv(bad), doctest::Contains("line 3"), DataError);

    std::istringstream bad_header("time,x,y\n");
    CHECK_THROWS_AS(read_events_csv(bad_header), DataError);

    std::istringstream short_row("t,x,y,gen\n1.0,0.5\n");
    CHECK_THROWS_WITH_AS(read_events_csv(short_row), doctest::Contains("line 2"), DataError);
}

TEST_CASE("event csv accepts files without gen and with comments") {
    std::istringstream in("# produced elsewhere\nt,x,y\n0.5,0.1,0.9\n");
    auto ev = read_events_csv(in);
    REQUIRE(ev.size() == 1);
    CHECK(!ev[0].gen.has_value());
}
