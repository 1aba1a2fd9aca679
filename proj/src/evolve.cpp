#include "sofsyn/evolve.hpp"

#include <algorithm>
#include <cmath>

#include "sofsyn/errors.hpp"

namespace sofsyn {
namespace {

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) throw ValidationError(field, "must be finite");
}

}  // namespace

void validate_evolve_config(const EvolveConfig& cfg, std::size_t dimension) {
  require_finite(cfg.chi, "chi");
  require_finite(cfg.c1, "c1");
  require_finite(cfg.c2, "c2");
  require_finite(cfg.F, "F");
  require_finite(cfg.CR, "CR");
  if (!(cfg.chi > 0.0)) throw ValidationError("chi", "must be positive");
  if (cfg.c1 < 0.0) throw ValidationError("c1", "must be nonnegative");
  if (cfg.c2 < 0.0) throw ValidationError("c2", "must be nonnegative");
  if (!(cfg.F > 0.0 && cfg.F <= 2.0)) throw ValidationError("F", "must lie in (0, 2]");
  if (!(cfg.CR >= 0.0 && cfg.CR <= 1.0)) throw ValidationError("CR", "must lie in [0, 1]");
  if (cfg.NP < 4) throw ValidationError("NP", "DE/rand/1 needs at least 4 particles");
  if (cfg.resample_cap < 1) throw ValidationError("resample_cap", "must be at least 1");
  if (dimension == 0) throw ValidationError("gain", "must have at least one entry");
  if (cfg.search_box.size() > 1 && cfg.search_box.size() != dimension) {
    throw ValidationError("search_box", "needs 1 or " + std::to_string(dimension) + " intervals, got " +
                                            std::to_string(cfg.search_box.size()));
  }
  for (const auto& iv : cfg.search_box) {
    if (!std::isfinite(iv.lower) || !std::isfinite(iv.upper) || !(iv.lower < iv.upper)) {
      throw ValidationError("search_box", "intervals must be finite with lower < upper");
    }
  }
}

std::vector<Interval> resolve_box(const EvolveConfig& cfg, std::size_t dimension) {
  if (cfg.search_box.empty()) return std::vector<Interval>(dimension, Interval{});
  if (cfg.search_box.size() == 1) return std::vector<Interval>(dimension, cfg.search_box.front());
  return cfg.search_box;
}

FitnessResult fitness(const GainMatrix& K, const PolytopicPlant& plant, const LmiSpec& spec,
                      const SdpSettings& settings) {
  FitnessResult r;
  const SdpSolution s = solve(assemble(plant, K, spec), settings);
  r.status = s.status;
  if (s.status == SdpStatus::Optimal) {
    r.value = s.objective_value;
  } else {
    r.diagnostic = s.diagnostic;
  }
  return r;
}

std::size_t Rng::index(std::size_t n) {
  const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return std::min(k, n - 1);
}

Particle pso_update(Particle p, const GainMatrix& best, const EvolveConfig& cfg, std::span<const double> r1,
                    std::span<const double> r2) {
  const std::size_t d = p.position.dimension();
  if (best.dimension() != d || p.cognitive_best.dimension() != d || p.velocity.size() != d || r1.size() != d ||
      r2.size() != d) {
    throw ShapeError("pso_update: dimensions disagree");
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double x = p.position[j];
    p.velocity[j] = cfg.chi * (p.velocity[j] + cfg.c1 * r1[j] * (p.cognitive_best[j] - x) +
                               cfg.c2 * r2[j] * (best[j] - x));
    p.position[j] = x + p.velocity[j];
  }
  return p;
}

Particle pso_step(Particle p, const GainMatrix& best, const EvolveConfig& cfg, Rng& rng) {
  const std::size_t d = p.position.dimension();
  std::vector<double> r1(d), r2(d);
  for (double& v : r1) v = rng.uniform();
  for (double& v : r2) v = rng.uniform();
  return pso_update(std::move(p), best, cfg, r1, r2);
}

void clamp_to_box(GainMatrix& k, std::span<const Interval> box, std::vector<double>* velocity) {
  if (box.size() != k.dimension()) throw ShapeError("clamp_to_box: box size differs from gain dimension");
  for (std::size_t j = 0; j < box.size(); ++j) {
    const double c = std::clamp(k[j], box[j].lower, box[j].upper);
    if (c != k[j]) {
      k[j] = c;
      if (velocity) (*velocity)[j] = 0.0;
    }
  }
}

Resampled feasibility_resample(GainMatrix candidate, const std::function<GainMatrix()>& regenerate,
                               const FitnessFunction& evaluate, std::size_t cap) {
  Resampled r;
  while (r.attempts < cap) {
    if (r.attempts > 0) candidate = regenerate();
    ++r.attempts;
    const double f = evaluate(candidate);
    if (f < kInfeasible) {
      r.gain = std::move(candidate);
      r.fitness = f;
      return r;
    }
  }
  return r;
}

GainMatrix de_mutate_with(std::span<const GainMatrix> sp, std::size_t i, std::size_t r1, std::size_t r2,
                          std::size_t r3, double F) {
  const std::size_t n = sp.size();
  if (r1 >= n || r2 >= n || r3 >= n || i >= n) throw ContractError("de_mutate: index out of range");
  if (r1 == i || r2 == i || r3 == i || r1 == r2 || r1 == r3 || r2 == r3) {
    throw ContractError("de_mutate: indices must be distinct and differ from the target");
  }
  GainMatrix v = sp[r1];
  for (std::size_t j = 0; j < v.dimension(); ++j) v[j] += F * (sp[r2][j] - sp[r3][j]);
  return v;
}

GainMatrix de_mutate(std::span<const GainMatrix> sp, std::size_t i, double F, Rng& rng) {
  const std::size_t n = sp.size();
  if (n < 4) throw ContractError("de_mutate: needs at least 4 cognitive bests");
  // Draw among the n−1 indices other than i, then skip over those taken.
  auto draw = [&](std::initializer_list<std::size_t> taken) {
    std::vector<std::size_t> excluded(taken);
    std::sort(excluded.begin(), excluded.end());
    std::size_t k = rng.index(n - excluded.size());
    for (std::size_t e : excluded)
      if (k >= e) ++k;
    return k;
  };
  const std::size_t r1 = draw({i});
  const std::size_t r2 = draw({i, r1});
  const std::size_t r3 = draw({i, r1, r2});
  return de_mutate_with(sp, i, r1, r2, r3, F);
}

GainMatrix de_crossover_with(const GainMatrix& target, const GainMatrix& donor, double CR,
                             std::span<const double> draws, std::size_t forced) {
  const std::size_t d = target.dimension();
  if (donor.dimension() != d || draws.size() != d) throw ShapeError("de_crossover: dimensions disagree");
  if (forced >= d) throw ContractError("de_crossover: forced index out of range");
  GainMatrix u = target;
  for (std::size_t j = 0; j < d; ++j)
    if (draws[j] < CR || j == forced) u[j] = donor[j];
  return u;
}

GainMatrix de_crossover(const GainMatrix& target, const GainMatrix& donor, double CR, Rng& rng) {
  const std::size_t d = target.dimension();
  const std::size_t forced = rng.index(d);
  std::vector<double> draws(d);
  for (double& v : draws) v = rng.uniform();
  return de_crossover_with(target, donor, CR, draws, forced);
}

bool de_select(Particle& p, const GainMatrix& trial, double trial_fitness) {
  if (!(trial_fitness < p.cognitive_best_fitness)) return false;
  p.cognitive_best = trial;
  p.cognitive_best_fitness = trial_fitness;
  return true;
}

void Swarm::offer(std::size_t i) {
  const Particle& p = particles.at(i);
  if (p.cognitive_best_fitness < population_best_fitness) {
    population_best = p.cognitive_best;
    population_best_fitness = p.cognitive_best_fitness;
  }
}

RunResult run(const FitnessFunction& evaluate, std::size_t inputs, std::size_t outputs, const EvolveConfig& cfg,
              const Callbacks& callbacks) {
  const std::size_t d = inputs * outputs;
  validate_evolve_config(cfg, d);
  const std::vector<Interval> box = resolve_box(cfg, d);
  Rng rng(cfg.seed);

  std::size_t calls = 0;
  const FitnessFunction counted = [&](const GainMatrix& k) {
    ++calls;
    return evaluate(k);
  };
  auto store = [&](StoredKind kind, const GainMatrix& k, double f) {
    if (callbacks.on_store) callbacks.on_store(kind, k, f);
  };
  auto uniform_gain = [&] {
    GainMatrix k = GainMatrix::zeros(inputs, outputs);
    for (std::size_t j = 0; j < d; ++j) k[j] = rng.uniform(box[j].lower, box[j].upper);
    return k;
  };

  // Feasible initialization, zero velocities.
  Swarm swarm;
  for (std::size_t i = 0; i < cfg.NP; ++i) {
    Resampled r = feasibility_resample(uniform_gain(), uniform_gain, counted, cfg.resample_cap);
    if (!r.gain) {
      throw InitializationError("no feasible gain found for particle " + std::to_string(i) + " after " +
                                std::to_string(cfg.resample_cap) + " uniform draws in the search box");
    }
    Particle p;
    p.position = *r.gain;
    p.velocity.assign(d, 0.0);
    p.fitness = r.fitness;
    p.cognitive_best = *r.gain;
    p.cognitive_best_fitness = r.fitness;
    store(StoredKind::Position, p.position, p.fitness);
    store(StoredKind::CognitiveBest, p.cognitive_best, p.cognitive_best_fitness);
    swarm.particles.push_back(std::move(p));
    swarm.offer(i);
  }

  RunResult result;
  auto record = [&](GenerationRecord rec) {
    rec.best_fitness = swarm.population_best_fitness;
    rec.best = swarm.population_best;
    rec.fitness_calls = calls;
    result.trace.records.push_back(rec);
    if (callbacks.on_generation) callbacks.on_generation(result.trace.records.back());
  };
  record(GenerationRecord{});

  for (std::size_t gen = 1; gen <= cfg.max_generations; ++gen) {
    GenerationRecord rec;
    rec.generation = gen;
    for (std::size_t i = 0; i < cfg.NP; ++i) {
      Particle& p = swarm.particles[i];

      // PSO update, redrawing r1, r2 while infeasible.
      bool placed = false;
      for (std::size_t attempt = 0; attempt < cfg.resample_cap && !placed; ++attempt) {
        Particle moved = pso_step(p, swarm.population_best, cfg, rng);
        clamp_to_box(moved.position, box, &moved.velocity);
        const double f = counted(moved.position);
        if (f < kInfeasible) {
          moved.fitness = f;
          p = std::move(moved);
          placed = true;
        }
      }
      if (!placed) {
        std::fill(p.velocity.begin(), p.velocity.end(), 0.0);
        ++rec.pso_give_ups;
      }
      store(StoredKind::Position, p.position, p.fitness);

      // Cognitive and population best.
      if (!(p.fitness < p.cognitive_best_fitness)) continue;
      p.cognitive_best = p.position;
      p.cognitive_best_fitness = p.fitness;
      store(StoredKind::CognitiveBest, p.cognitive_best, p.cognitive_best_fitness);
      swarm.offer(i);
      ++rec.improvements;

      // One DE round with P_i as target.
      ++rec.de_rounds;
      std::vector<GainMatrix> sp;
      sp.reserve(cfg.NP);
      for (const auto& q : swarm.particles) sp.push_back(q.cognitive_best);
      for (std::size_t attempt = 0; attempt < cfg.resample_cap; ++attempt) {
        const GainMatrix donor = de_mutate(sp, i, cfg.F, rng);
        GainMatrix trial = de_crossover(p.cognitive_best, donor, cfg.CR, rng);
        clamp_to_box(trial, box);
        const double f = counted(trial);
        if (!(f < kInfeasible)) continue;
        if (de_select(p, trial, f)) {
          store(StoredKind::CognitiveBest, p.cognitive_best, p.cognitive_best_fitness);
          swarm.offer(i);
          ++rec.de_successes;
        }
        break;
      }
    }
    record(rec);
  }

  result.best = swarm.population_best;
  result.best_fitness = swarm.population_best_fitness;
  return result;
}

RunResult run(const PolytopicPlant& plant, const LmiSpec& spec, const EvolveConfig& cfg, const Callbacks& callbacks,
              const SdpSettings& settings) {
  const PlantDims dims = plant.dims();
  const FitnessFunction f = [&](const GainMatrix& k) { return fitness(k, plant, spec, settings).value; };
  return run(f, dims.m, dims.p, cfg, callbacks);
}

}  // namespace sofsyn
