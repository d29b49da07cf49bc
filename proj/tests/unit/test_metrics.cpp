#include <doctest.h>

#include <sstream>

#include "nlflow/errors.hpp"
#include "nlflow/metrics.hpp"
#include "nlflow/phantom.hpp"
#include "support.hpp"

using namespace nlflow;

namespace {

SegmentationMask mask_of(std::vector<std::uint8_t> v) {
  const std::size_t n = v.size();
  return SegmentationMask(Shape(1, n), std::move(v));
}

SegmentationMask random_mask(const Shape& shape, std::uint64_t seed) {
  const GridField r = testing::random_field(shape, seed);
  SegmentationMask m(shape);
  for (std::size_t k = 0; k < r.size(); ++k) m.set(k, r[k] > 0.6);
  return m;
}

}  // namespace

TEST_CASE("confusion counts") {
  const SegmentationMask pred = mask_of({1, 1, 0, 0, 1, 0});
  const SegmentationMask truth = mask_of({1, 0, 1, 0, 1, 1});
  const MetricsReport r = confusion(pred, truth);
  CHECK(r.tp == 2);
  CHECK(r.fp == 1);
  CHECK(r.fn == 2);
  CHECK(r.tn == 1);
  CHECK(*r.precision == doctest::Approx(2.0 / 3.0));
  CHECK(*r.recall == doctest::Approx(0.5));
  CHECK(*r.dice == doctest::Approx(4.0 / 7.0));
  CHECK_THROWS_AS(confusion(pred, mask_of({1, 0})), Error);
}

TEST_CASE("undefined ratios stay empty") {
  const MetricsReport none = confusion(mask_of({0, 0}), mask_of({0, 0}));
  CHECK(!none.precision);
  CHECK(!none.recall);
  CHECK(!none.dice);
  const MetricsReport miss = confusion(mask_of({0, 0}), mask_of({1, 0}));
  CHECK(!miss.precision);
  CHECK(*miss.recall == 0.0);
  CHECK(*miss.dice == 0.0);
}

TEST_CASE("metric properties") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SegmentationMask a = random_mask(Shape(9, 9), seed), b = random_mask(Shape(9, 9), seed + 100);
    const MetricsReport ab = confusion(a, b), ba = confusion(b, a);
    CHECK(ab.total() == 81);
    CHECK(ab.dice == ba.dice);
    CHECK(ab.precision == ba.recall);
    if (a.count()) CHECK(*confusion(a, a).dice == 1.0);
    if (ab.dice) CHECK((*ab.dice >= 0.0 && *ab.dice <= 1.0));
    if (ab.precision && ab.recall && *ab.precision + *ab.recall > 0)
      CHECK(*ab.dice == doctest::Approx(2 * *ab.precision * *ab.recall / (*ab.precision + *ab.recall)));
  }
}

TEST_CASE("aggregation") {
  const std::vector<MetricsReport> reports = {metrics_from_counts(2, 1, 2, 1), metrics_from_counts(0, 0, 0, 5),
                                              metrics_from_counts(3, 0, 1, 0)};
  const AggregateMetrics agg = aggregate(reports);
  CHECK(agg.images == 3);
  CHECK(agg.micro.tp == 5);
  CHECK(agg.micro.fp == 1);
  CHECK(agg.micro.fn == 3);
  CHECK(agg.micro.tn == 6);
  CHECK(*agg.micro.dice == doctest::Approx(10.0 / 14.0));
  CHECK(agg.macro.dice_count == 2);
  CHECK(*agg.macro.dice == doctest::Approx((4.0 / 7.0 + 6.0 / 7.0) / 2.0));
  CHECK(*agg.macro.precision == doctest::Approx((2.0 / 3.0 + 1.0) / 2.0));
  const AggregateMetrics empty = aggregate({});
  CHECK(empty.images == 0);
  CHECK(!empty.macro.dice);
  CHECK(!empty.micro.dice);
}

TEST_CASE("bench csv and sweep ordering") {
  PhantomSpec spec;
  spec.shape = Shape(24, 24);
  const GridField f = make_phantom(spec).image;
  FlowParams p;
  p.n_steps = 2;
  const auto rows = timing_sweep(f, p, {1.0, 2.0}, {8, 16}, {Scheme::quantized, Scheme::explicit_truncated});
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].scheme == Scheme::quantized);
  CHECK(rows[0].rho == 1.0);
  CHECK(rows[0].Q == 8);
  CHECK(rows[1].Q == 16);
  CHECK(rows[2].rho == 2.0);
  CHECK(rows[4].scheme == Scheme::explicit_truncated);
  for (const auto& r : rows) {
    CHECK(r.pixels == 576);
    CHECK(r.steps == 2);
    CHECK(r.seconds >= 0.0);
  }
  std::ostringstream os;
  write_bench_csv(os, {rows[0]});
  const std::string csv = os.str();
  CHECK(csv.rfind("scheme,rho,Q,pixels,steps,seconds\n", 0) == 0);
  CHECK(csv.find("\nquantized,1,8,576,2,") != std::string::npos);
  CHECK_THROWS_AS(timing_sweep(f, p, {}, {8}, {Scheme::quantized}), Error);
}

TEST_CASE("scheme comparison") {
  PhantomSpec spec;
  spec.shape = Shape(20, 20);
  const GridField f = make_phantom(spec).image;
  FlowParams p;
  p.rho = 1.5;
  p.n_steps = 3;
  p.J = 3;
  p.tau = 0.05 / p.reaction_slope();
  const SchemeComparison c = compare_schemes(f, p);
  CHECK(c.inner.size() == 9);
  CHECK(c.inner[4].step == 1);
  CHECK(c.inner[4].inner == 1);
  REQUIRE(c.final_relative);
  CHECK(*c.final_relative < 0.1);
  CHECK(c.explicit_stats.steps == 3);
  CHECK(c.yosida_stats.steps == 3);
  CHECK(c.foreground == finalize_mask(run_explicit(f, p)).count());
}
