#include <random>

#include "doctest.h"
#include "fairstream/generator.hpp"
#include "fairstream/monitor.hpp"
#include "fairstream/oracle.hpp"
#include "support.hpp"

using namespace fairstream;

TEST_SUITE("monitor") {

TEST_CASE("worked window under both constraints") {
  const auto items = support::items_of(support::kWindow, support::cah());
  const auto spec = WindowSpec::make(15, 5);
  const auto sketch = ForwardSketch::build(items, 3);

  CHECK(monitor_bfair(sketch, support::constraint1(), spec) == Verdict::pass());

  const Verdict v = monitor_bfair(sketch, support::constraint2(), spec);
  REQUIRE_FALSE(v.fair);
  REQUIRE(v.violation);
  CHECK(v.violation->block == 3);
  CHECK(v.violation->value == 0);  // C
  CHECK(v.violation->observed == 1);
  CHECK(v.violation->required == CountRange{2, 3});
}

TEST_CASE("the first violating block is reported, values in schema order") {
  // Block 1 fair, block 2 has no C and three H.
  const auto schema = support::cah();
  const auto items = support::items_of({"C", "C", "A", "H", "H", "A", "H", "H", "H", "C"}, schema);
  const auto sketch = ForwardSketch::build(items, 3);
  const Verdict v = monitor_bfair(sketch, support::constraint2(), WindowSpec::make(10, 5));
  REQUIRE(v.violation);
  CHECK(v.violation->block == 2);
  CHECK(v.violation->value == 0);
  CHECK(v.violation->observed == 1);
}

TEST_CASE("the unstored last value is checked through its inferred count") {
  const auto schema = support::cah();
  const auto spec = WindowSpec::make(5, 5);
  // C2 A2 H1 under constraint 1: C and A are in range, H needs exactly 2.
  const auto items = support::items_of({"C", "C", "A", "A", "H"}, schema);
  const Verdict v = monitor_bfair(ForwardSketch::build(items, 3), support::constraint1(), spec);
  REQUIRE(v.violation);
  CHECK(v.violation->value == 2);
  CHECK(v.violation->observed == 1);
  CHECK(v.violation->required == CountRange{2, 2});

  // C3 A2 under constraint 1: C is reported before A and H.
  const auto two = support::items_of({"C", "C", "C", "A", "A"}, schema);
  const Verdict v2 = monitor_bfair(ForwardSketch::build(two, 3), support::constraint1(), spec);
  REQUIRE(v2.violation);
  CHECK(v2.violation->value == 0);
}

TEST_CASE("geometry mismatch is rejected") {
  const auto items = support::items_of(support::kWindow, support::cah());
  const auto sketch = ForwardSketch::build(std::span(items).first(10), 3);
  CHECK_THROWS_AS(monitor_bfair(sketch, support::constraint1(), WindowSpec::make(15, 5)),
                  ValidationError);
}

TEST_CASE("feasibility of the worked window") {
  const auto spec = WindowSpec::make(15, 5);
  const CountVector totals{5, 4, 6};
  // Constraint 2 needs at least 3 * 2 = 6 C items; the window has 5.
  CHECK_FALSE(feasible_within_window(totals, support::constraint2(), spec));
  CHECK(feasible_within_window(totals, support::constraint1(), spec));
}

TEST_CASE("feasibility also bounds values from above") {
  const auto spec = WindowSpec::make(15, 5);
  // Each lower bound is met, but nine H cannot fit into three blocks of at most two.
  CHECK_FALSE(feasible_within_window(CountVector{3, 3, 9}, support::constraint1(), spec));
}

TEST_CASE("feasible totals admit an all-fair arrangement, infeasible ones do not") {
  // Two blocks of three: feasible iff the totals split into two valid combinations.
  const auto spec = WindowSpec::make(6, 3);
  const FairnessConstraint c(AttributeSchema({"x", "y", "z"}),
                             {Proportion::ratio(1, 2), Proportion::ratio(1, 3), Proportion::ratio(1, 6)});
  const auto rules = BlockRules::make(c, spec);
  const auto combos = valid_combinations(rules);
  for (Count x = 0; x <= 6; ++x) {
    for (Count y = 0; x + y <= 6; ++y) {
      const CountVector totals{x, y, 6 - x - y};
      bool arrangeable = false;
      for (const auto& a : combos)
        for (const auto& b : combos)
          if (a[0] + b[0] == totals[0] && a[1] + b[1] == totals[1] && a[2] + b[2] == totals[2])
            arrangeable = true;
      CAPTURE(x);
      CAPTURE(y);
      CHECK(feasible_within_window(totals, rules) == arrangeable);
    }
  }
}

TEST_CASE("monitor agrees with direct recounting on random windows") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t l = 2 + rng() % 3;
    const std::size_t s = 1 + rng() % 5;
    const std::size_t k = 1 + rng() % 4;
    std::vector<Proportion> f(l, Proportion::ratio(1, static_cast<std::int64_t>(l)));
    std::vector<std::string> labels;
    for (std::size_t p = 0; p < l; ++p) labels.push_back(std::string(1, static_cast<char>('a' + p)));
    const FairnessConstraint c(AttributeSchema(labels), f);
    const auto spec = WindowSpec::make(s * k, s);
    GeneratorParams g;
    g.cardinality = l;
    g.n = s * k;
    g.seed = rng();
    const auto items = generate_stream(g);
    const auto rules = BlockRules::make(c, spec);
    CHECK(monitor_bfair(ForwardSketch::build(items, l), rules) == oracle::naive_monitor(items, rules));
    CHECK(oracle::monitor_backward(oracle::BackwardSketch::build(items, l), rules) ==
          oracle::naive_monitor(items, rules));
  }
}

}
