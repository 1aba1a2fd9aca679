#include <cmath>
#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "sofsyn/errors.hpp"
#include "sofsyn/evolve.hpp"
#include "sofsyn/oracle.hpp"

using namespace sofsyn;
using namespace sofsyn::testing;

namespace {

GainMatrix scalar(double k) { return GainMatrix(Matrix{{k}}); }

GainMatrix row(std::initializer_list<double> v) {
  return GainMatrix::from_flat(1, v.size(), std::vector<double>(v));
}

Particle particle(GainMatrix x, std::vector<double> v, GainMatrix best) {
  Particle p;
  p.position = std::move(x);
  p.velocity = std::move(v);
  p.cognitive_best = std::move(best);
  return p;
}

// Convex bowl with an infeasible half-space, cheap enough for many runs.
double bowl(const GainMatrix& k) {
  if (k[0] > 0.0) return kInfeasible;
  double s = 0.0;
  for (std::size_t j = 0; j < k.dimension(); ++j) s += (k[j] + 1.0) * (k[j] + 1.0);
  return s;
}

EvolveConfig small_config(std::uint64_t seed, std::size_t generations) {
  EvolveConfig cfg;
  cfg.seed = seed;
  cfg.max_generations = generations;
  return cfg;
}

}  // namespace

TEST_CASE("fitness on example 1") {
  const PolytopicPlant plant = example1_plant();
  CHECK(fitness(scalar(-1.0), plant, LmiSpec{}).value == doctest::Approx(2.5).epsilon(1e-5));
  const FitnessResult unstable = fitness(scalar(1.0), plant, LmiSpec{});
  CHECK_FALSE(unstable.feasible());
  CHECK(unstable.status == SdpStatus::Infeasible);
  CHECK(std::abs(fitness(scalar(-std::sqrt(2.0 / 3.0)), plant, LmiSpec{}).value - 2.44949) <= 1e-3);
}

TEST_CASE("pso_update") {
  const EvolveConfig cfg;
  const std::vector<double> zero{0.0}, one{1.0};

  const Particle a = pso_update(particle(scalar(0.0), {1.0}, scalar(2.0)), scalar(3.0), cfg, one, one);
  CHECK(a.velocity[0] == doctest::Approx(8.2107).epsilon(1e-5));
  CHECK(a.position[0] == doctest::Approx(8.2107).epsilon(1e-5));

  const Particle b = pso_update(particle(scalar(0.5), {2.0}, scalar(7.0)), scalar(-4.0), cfg, zero, zero);
  CHECK(b.velocity[0] == doctest::Approx(cfg.chi * 2.0));
  CHECK(b.position[0] == doctest::Approx(0.5 + cfg.chi * 2.0));

  const Particle c = pso_update(particle(scalar(1.5), {0.0}, scalar(1.5)), scalar(1.5), cfg, one, one);
  CHECK(c.velocity[0] == 0.0);
  CHECK(c.position[0] == 1.5);

  CHECK_THROWS_AS(pso_update(particle(row({1, 2}), {0.0, 0.0}, row({1, 2})), scalar(1.0), cfg, one, one),
                  ShapeError);
}

TEST_CASE("pso_step draws r1 and r2 per component in [0, 1)") {
  // With X = 0, V = 0, P_i = e, P_best = 0 the step is χ c1 r1 per component.
  const EvolveConfig cfg;
  Rng rng(9);
  double lo = 1.0, hi = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Particle p = pso_step(particle(row({0, 0, 0}), {0, 0, 0}, row({1, 1, 1})), row({0, 0, 0}), cfg, rng);
    for (std::size_t j = 0; j < 3; ++j) {
      const double r1 = p.velocity[j] / (cfg.chi * cfg.c1);
      lo = std::min(lo, r1);
      hi = std::max(hi, r1);
    }
    CHECK(p.velocity[0] != p.velocity[1]);
  }
  CHECK(lo >= 0.0);
  CHECK(lo < 0.05);
  CHECK(hi < 1.0);
  CHECK(hi > 0.95);
}

TEST_CASE("clamp_to_box zeroes the clamped velocity components") {
  GainMatrix k = row({-12.0, 3.0, 11.0});
  std::vector<double> v{-4.0, 2.0, 5.0};
  const std::vector<Interval> box(3, Interval{});
  clamp_to_box(k, box, &v);
  CHECK(k == row({-10.0, 3.0, 10.0}));
  CHECK(v == std::vector<double>{0.0, 2.0, 0.0});
}

TEST_CASE("feasibility_resample") {
  int calls = 0;
  const FitnessFunction counted = [&](const GainMatrix& k) {
    ++calls;
    return bowl(k);
  };
  int regenerated = 0;
  const auto regen = [&] {
    ++regenerated;
    return scalar(1.0);
  };

  const Resampled first = feasibility_resample(scalar(-2.0), regen, counted, 5);
  REQUIRE(first.gain);
  CHECK(*first.gain == scalar(-2.0));
  CHECK(first.fitness == 1.0);
  CHECK(calls == 1);
  CHECK(regenerated == 0);

  calls = 0;
  const Resampled give_up = feasibility_resample(scalar(2.0), regen, counted, 3);
  CHECK_FALSE(give_up.gain);
  CHECK(calls == 3);
  CHECK(give_up.attempts == 3);
  CHECK(regenerated == 2);

  // Feasible after two regenerations.
  calls = 0;
  int n = 0;
  const Resampled third =
      feasibility_resample(scalar(2.0), [&] { return scalar(++n == 2 ? -1.0 : 1.0); }, counted, 5);
  REQUIRE(third.gain);
  CHECK(*third.gain == scalar(-1.0));
  CHECK(calls == 3);
}

TEST_CASE("feasibility_resample: example 1 acceptance rate matches the stabilizing measure") {
  // Monte Carlo in [−5, 5]: the LMI accepts a draw iff it stabilizes (K < 0),
  // apart from gains so close to 0 that the strictness margin rejects them.
  const PolytopicPlant plant = example1_plant();
  Rng rng(31);
  int accepted = 0, disagreements = 0;
  const int draws = 300;
  for (int t = 0; t < draws; ++t) {
    const GainMatrix k = scalar(rng.uniform(-5.0, 5.0));
    const Resampled r = feasibility_resample(
        k, [] { return scalar(0.0); }, [&](const GainMatrix& g) { return fitness(g, plant, LmiSpec{}).value; }, 1);
    const bool stable = is_stable(close_loop(plant.vertices[0], plant.C, k).Acl);
    accepted += r.gain.has_value();
    if (r.gain.has_value() != stable && std::abs(k[0]) > 1e-3) ++disagreements;
  }
  CHECK(disagreements == 0);
  CHECK(std::abs(accepted / double(draws) - 0.5) < 0.1);
}

TEST_CASE("de_mutate") {
  const std::vector<GainMatrix> sp{scalar(9.0), scalar(1.0), scalar(2.0), scalar(0.5)};
  CHECK(de_mutate_with(sp, 0, 1, 2, 3, 0.5)[0] == doctest::Approx(1.75));
  CHECK(de_mutate_with(sp, 0, 1, 2, 3, 0.0) == sp[1]);
  CHECK_THROWS_AS(de_mutate_with(sp, 0, 1, 1, 3, 0.5), ContractError);
  CHECK_THROWS_AS(de_mutate_with(sp, 1, 1, 2, 3, 0.5), ContractError);

  const std::vector<GainMatrix> three{scalar(0), scalar(1), scalar(2)};
  Rng rng(1);
  CHECK_THROWS_AS(de_mutate(three, 0, 0.5, rng), ContractError);
}

TEST_CASE("property: de_mutate draws distinct indices other than the target, each uniformly") {
  // Values are powers of ten so the indices can be decoded from the result
  // with F = 0.5: v = 10^r1 + (10^r2 − 10^r3)/2.
  std::vector<GainMatrix> sp;
  for (int i = 0; i < 6; ++i) sp.push_back(scalar(std::pow(10.0, i)));
  Rng rng(5);
  std::map<std::size_t, int> base_counts;
  for (int t = 0; t < 3000; ++t) {
    const double v = de_mutate(sp, 2, 0.5, rng)[0];
    std::size_t r1 = 0, r2 = 0, r3 = 0;
    int matches = 0;
    for (std::size_t a = 0; a < 6; ++a)
      for (std::size_t b = 0; b < 6; ++b)
        for (std::size_t c = 0; c < 6; ++c) {
          if (a == b || a == c || b == c || a == 2 || b == 2 || c == 2) continue;
          if (sp[a][0] + 0.5 * (sp[b][0] - sp[c][0]) == v) {
            r1 = a, r2 = b, r3 = c;
            ++matches;
          }
        }
    REQUIRE(matches == 1);
    ++base_counts[r1];
    CHECK(r2 != r3);
  }
  CHECK(base_counts.size() == 5);
  for (const auto& [idx, count] : base_counts) CHECK(std::abs(count - 600) < 120);
}

TEST_CASE("de_crossover") {
  const GainMatrix target = row({1, 2, 3, 4});
  const GainMatrix donor = row({-1, -2, -3, -4});
  const std::vector<double> draws{0.3, 0.7, 0.2, 0.9};
  CHECK(de_crossover_with(target, donor, 0.5, draws, 1) == row({-1, -2, -3, 4}));
  CHECK(de_crossover_with(target, donor, 1.0, draws, 3) == donor);
  CHECK(de_crossover_with(target, donor, 0.0, draws, 2) == row({1, 2, -3, 4}));
  CHECK_THROWS_AS(de_crossover_with(target, donor, 0.5, draws, 4), ContractError);

  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const GainMatrix u = de_crossover(target, donor, 0.0, rng);
    int differing = 0;
    for (std::size_t j = 0; j < 4; ++j) differing += u[j] != target[j];
    CHECK(differing == 1);
    CHECK(de_crossover(target, donor, 1.0, rng) == donor);
  }
}

TEST_CASE("de_select uses strict improvement") {
  Particle p = particle(scalar(-1), {0.0}, scalar(-1));
  p.cognitive_best_fitness = 2.0;
  CHECK(de_select(p, scalar(-2), 1.5));
  CHECK(p.cognitive_best == scalar(-2));
  CHECK(p.cognitive_best_fitness == 1.5);
  CHECK_FALSE(de_select(p, scalar(-3), 1.5));
  CHECK(p.cognitive_best == scalar(-2));
  CHECK_FALSE(de_select(p, scalar(-3), 9.0));
  CHECK(p.cognitive_best_fitness == 1.5);
}

TEST_CASE("config validation names the field") {
  auto field_of = [](const EvolveConfig& cfg, std::size_t d) {
    try {
      validate_evolve_config(cfg, d);
    } catch (const ValidationError& e) {
      return e.field();
    }
    return std::string();
  };
  EvolveConfig cfg;
  CHECK(field_of(cfg, 2).empty());
  cfg.NP = 3;
  CHECK(field_of(cfg, 2) == "NP");
  cfg = {};
  cfg.CR = 1.5;
  CHECK(field_of(cfg, 2) == "CR");
  cfg = {};
  cfg.F = 0.0;
  CHECK(field_of(cfg, 2) == "F");
  cfg = {};
  cfg.c1 = -1.0;
  CHECK(field_of(cfg, 2) == "c1");
  cfg = {};
  cfg.search_box = {{0, 1}, {0, 1}, {0, 1}};
  CHECK(field_of(cfg, 2) == "search_box");
  cfg.search_box = {{1, 0}};
  CHECK(field_of(cfg, 2) == "search_box");
  cfg = {};
  cfg.resample_cap = 0;
  CHECK(field_of(cfg, 2) == "resample_cap");

  cfg = {};
  CHECK(resolve_box(cfg, 2) == std::vector<Interval>(2, Interval{-10, 10}));
  cfg.search_box = {{-5, 5}};
  CHECK(resolve_box(cfg, 3) == std::vector<Interval>(3, Interval{-5, 5}));
}

TEST_CASE("run: zero generations keeps the initialization only") {
  const RunResult r = run(bowl, 1, 2, small_config(4, 0));
  REQUIRE(r.trace.records.size() == 1);
  CHECK(r.trace.records[0].generation == 0);
  CHECK(r.trace.records[0].best_fitness == r.best_fitness);
  CHECK(r.trace.records[0].best == r.best);
  CHECK(r.trace.records[0].fitness_calls >= 5);
}

TEST_CASE("run: initialization failure is reported") {
  EvolveConfig cfg = small_config(1, 3);
  cfg.search_box = {{1.0, 2.0}};
  CHECK_THROWS_AS(run(bowl, 1, 1, cfg), InitializationError);
  int calls = 0;
  cfg.resample_cap = 7;
  CHECK_THROWS_AS(run(
                      [&](const GainMatrix& k) {
                        ++calls;
                        return bowl(k);
                      },
                      1, 1, cfg),
                  InitializationError);
  CHECK(calls == 7);
}

TEST_CASE("property: run invariants on a synthetic landscape") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EvolveConfig cfg = small_config(seed, 15);
    cfg.NP = 4 + seed % 4;
    cfg.search_box = {{-3.0, 2.0}};
    std::size_t improvements_seen = 0;
    std::vector<std::vector<double>> stored_best;
    Callbacks cb;
    cb.on_store = [&](StoredKind kind, const GainMatrix& k, double f) {
      CHECK(f < kInfeasible);
      CHECK(f == bowl(k));
      for (std::size_t j = 0; j < k.dimension(); ++j) {
        CHECK(k[j] >= -3.0);
        CHECK(k[j] <= 2.0);
      }
      if (kind == StoredKind::CognitiveBest) ++improvements_seen;
    };
    std::size_t generations_seen = 0;
    cb.on_generation = [&](const GenerationRecord& rec) { CHECK(rec.generation == generations_seen++); };

    const RunResult r = run(bowl, 1, 3, cfg, cb);
    REQUIRE(r.trace.records.size() == 16);
    std::size_t improvements = 0, successes = 0;
    for (std::size_t g = 0; g < r.trace.records.size(); ++g) {
      const GenerationRecord& rec = r.trace.records[g];
      CHECK(rec.generation == g);
      CHECK(rec.de_rounds == rec.improvements);
      CHECK(rec.de_successes <= rec.de_rounds);
      CHECK(rec.best_fitness == bowl(rec.best));
      if (g > 0) {
        CHECK(rec.best_fitness <= r.trace.records[g - 1].best_fitness);
        CHECK(rec.fitness_calls >= r.trace.records[g - 1].fitness_calls + cfg.NP);
      }
      improvements += rec.improvements;
      successes += rec.de_successes;
    }
    CHECK(improvements_seen == cfg.NP + improvements + successes);
    CHECK(r.best_fitness == r.trace.records.back().best_fitness);
    CHECK(r.best_fitness < 1.0);
  }
}

TEST_CASE("property: a fixed seed reproduces the trace exactly") {
  for (std::uint64_t seed : {0ull, 17ull, 123456789ull}) {
    const RunResult a = run(bowl, 2, 2, small_config(seed, 8));
    const RunResult b = run(bowl, 2, 2, small_config(seed, 8));
    REQUIRE(a.trace.records.size() == b.trace.records.size());
    for (std::size_t g = 0; g < a.trace.records.size(); ++g) {
      CHECK(a.trace.records[g].best_fitness == b.trace.records[g].best_fitness);
      CHECK(a.trace.records[g].best == b.trace.records[g].best);
      CHECK(a.trace.records[g].fitness_calls == b.trace.records[g].fitness_calls);
    }
  }
  const RunResult x = run(bowl, 2, 2, small_config(1, 8));
  const RunResult y = run(bowl, 2, 2, small_config(2, 8));
  CHECK_FALSE(x.trace.records[0].best == y.trace.records[0].best);
}

TEST_CASE("run on example 1 approaches the analytic optimum") {
  EvolveConfig cfg = small_config(2026, 10);
  const RunResult r = run(example1_plant(), LmiSpec{}, cfg);
  CHECK(r.best_fitness <= 2.4595);
  CHECK(r.best[0] < 0.0);
  for (std::size_t g = 1; g < r.trace.records.size(); ++g)
    CHECK(r.trace.records[g].best_fitness <= r.trace.records[g - 1].best_fitness);
}
