#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "clusterwalk/environment.hpp"
#include "clusterwalk/errors.hpp"

using namespace clusterwalk;

TEST_CASE("default margin grows logarithmically and never drops below 2") {
  CHECK(default_margin(1) == 2);
  CHECK(default_margin(2) == 4);
  CHECK(default_margin(3) == 8);
  CHECK(default_margin(16) == 12);
  CHECK(default_margin(1024) == 28);
}

TEST_CASE("eager samples cover the box plus margin") {
  const BoxSpec box(8, 2);
  const Environment env = Environment::sample(0.3, box, 11);
  REQUIRE(env.grid_backed());
  REQUIRE(env.box() != nullptr);
  CHECK(*env.box() == box);
  CHECK(env.region().n == 8 + 2 * env.margin());
  CHECK(env.margin() == default_margin(8));
  CHECK(static_cast<std::int64_t>(env.grid().size()) == env.region().volume());
  CHECK(env.known_count() == env.region().volume());

  // outside the sampled region the status is simply unknown
  const LatticePoint outside{env.region().axis_hi() + 1, 0};
  CHECK_THROWS_AS(env.open(outside), OutOfRegionError);
  CHECK_FALSE(env.recorded(outside).has_value());
}

TEST_CASE("lazy and eager environments materialize the same field") {
  for (const int d : {1, 2, 3}) {
    const BoxSpec box(6, d);
    // an escalated sample re-keys itself, so keep escalation out of the way:
    // the field values are a pure function of the key either way
    const Environment eager = Environment::sample(
        0.3, box, 7, {.margin = 2, .escalate_on_shell_contact = false});
    REQUIRE(eager.escalations() == 0);
    const Environment lazy = Environment::lazy(0.3, d, 7);
    CHECK(lazy.is_lazy());
    CHECK(eager.env_key() == lazy.env_key());
    for_each_site(eager.region(), [&](const LatticePoint& x) {
      CHECK(eager.open(x) == lazy.open(x));
    });
  }
}

TEST_CASE("lazy environments record statuses only when asked") {
  const Environment env = Environment::lazy(0.4, 2, 21);
  const LatticePoint x{3, -2};
  CHECK_FALSE(env.recorded(x).has_value());
  CHECK(env.known_count() == 0);
  const bool status = env.open(x);
  REQUIRE(env.recorded(x).has_value());
  CHECK(*env.recorded(x) == status);
  CHECK(env.known_count() == 1);
  CHECK(env.open(x) == status);
  CHECK(env.known_count() == 1);

  CHECK_THROWS_AS(env.region(), ParameterError);
  CHECK_THROWS_AS(env.grid(), ParameterError);
}

TEST_CASE("explicit grids round-trip their statuses") {
  const BoxSpec region(3, 2);
  std::vector<std::uint8_t> statuses = {1, 0, 1, 0, 1, 0, 0, 0, 1};
  const Environment env = Environment::from_grid(region, statuses, 0.5);
  CHECK(env.grid_backed());
  CHECK(env.box() == nullptr);
  CHECK(env.region() == region);
  for (std::int64_t i = 0; i < region.volume(); ++i)
    CHECK(env.open(region.site_at(i)) == (statuses[static_cast<std::size_t>(i)] != 0));

  CHECK_THROWS_AS(Environment::from_grid(region, {1, 0}), ParameterError);
}

TEST_CASE("sampling validates p and the memory budget") {
  const BoxSpec box(4, 2);
  CHECK_THROWS_AS(Environment::sample(0.0, box, 1), ParameterError);
  CHECK_THROWS_AS(Environment::sample(1.0, box, 1), ParameterError);
  CHECK_THROWS_AS(Environment::sample(0.3, box, 1, {.max_sites = 10}), CapacityError);
}

TEST_CASE("shell contact escalates the margin") {
  // Dense fields keep reaching the shell, so escalation must eventually
  // give up with a capacity error rather than loop forever.
  CHECK_THROWS_AS(
      Environment::sample(0.95, BoxSpec(4, 2), 1, {.margin = 1, .max_escalations = 2}),
      CapacityError);

  // Near criticality a moderate seed scan finds a field that escalates at
  // least once and then settles.
  bool found = false;
  for (std::uint64_t seed = 1; seed <= 200 && !found; ++seed) {
    const Environment env =
        Environment::sample(0.5, BoxSpec(4, 2), seed, {.margin = 1});
    if (env.escalations() > 0) {
      found = true;
      CHECK(env.margin() > 1);
      CHECK(env.region().n == 4 + 2 * env.margin());
    }
  }
  CHECK(found);
}

TEST_CASE("escalated fields are keyed off sub-seeds, not the base stream") {
  // Two samples that escalate a different number of times must disagree as
  // fields, not silently reuse the attempt-0 randomness.
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const Environment env =
        Environment::sample(0.5, BoxSpec(4, 2), seed, {.margin = 1});
    if (env.escalations() == 0) continue;
    const Environment plain =
        Environment::sample(0.5, BoxSpec(4, 2), seed,
                            {.margin = env.margin(), .escalate_on_shell_contact = false});
    CHECK(env.env_key() != plain.env_key());
    return;
  }
  FAIL("no escalating seed found in the scan");
}
