#pragma once

// Hybrid PSO-DE search over static output feedback gains. Each particle is a
// gain K flattened row-major; its fitness is the minimized δ of the LMI
// problem at K, or +∞ when the LMIs are infeasible. Per generation every
// particle takes a constriction-factor PSO step
//
//   V ← χ (V + c₁ r₁ ∘ (P_i − X) + c₂ r₂ ∘ (P_best − X)),   X ← X + V,
//
// and whenever its cognitive best P_i improves, one DE/rand/1/bin round is
// run on the set of cognitive bests with P_i as the target.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sofsyn/lmi.hpp"
#include "sofsyn/plant.hpp"
#include "sofsyn/sdp.hpp"

namespace sofsyn {

inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

struct Interval {
  double lower = -10.0;
  double upper = 10.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

struct EvolveConfig {
  double chi = 0.72984;
  double c1 = 2.05;
  double c2 = 2.05;
  double F = 0.5;
  double CR = 0.9;
  std::size_t NP = 5;
  std::size_t max_generations = 10;
  // Either one interval shared by every gain entry or one per entry
  // (row-major). Empty means [−10, 10] for every entry.
  std::vector<Interval> search_box;
  std::size_t resample_cap = 50;
  std::uint64_t seed = 0;

  friend bool operator==(const EvolveConfig&, const EvolveConfig&) = default;
};

// Throws ValidationError naming the offending field.
void validate_evolve_config(const EvolveConfig& cfg, std::size_t dimension);

// Per-entry intervals for a gain with `dimension` entries.
std::vector<Interval> resolve_box(const EvolveConfig& cfg, std::size_t dimension);

// Search started but could not place a particle at a feasible gain.
class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitnessResult {
  double value = kInfeasible;
  SdpStatus status = SdpStatus::Infeasible;
  std::string diagnostic;

  bool feasible() const { return value < kInfeasible; }
};

// Minimized δ at K, or kInfeasible (with the solver status) otherwise.
FitnessResult fitness(const GainMatrix& K, const PolytopicPlant& plant, const LmiSpec& spec,
                      const SdpSettings& settings = {});

// kInfeasible marks an infeasible gain.
using FitnessFunction = std::function<double(const GainMatrix&)>;

// Uniform draws on [0, 1) from the top 53 bits of the generator, so runs are
// reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform index in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

struct Particle {
  GainMatrix position;
  std::vector<double> velocity;
  double fitness = kInfeasible;
  GainMatrix cognitive_best;
  double cognitive_best_fitness = kInfeasible;
};

// Velocity and position update with explicit per-component draws r1, r2.
Particle pso_update(Particle p, const GainMatrix& best, const EvolveConfig& cfg, std::span<const double> r1,
                    std::span<const double> r2);
// Same, drawing r1 then r2 (one per component each) from rng.
Particle pso_step(Particle p, const GainMatrix& best, const EvolveConfig& cfg, Rng& rng);

// Clamps every entry into its interval. With a velocity, zeroes the
// components whose clamp was active.
void clamp_to_box(GainMatrix& k, std::span<const Interval> box, std::vector<double>* velocity = nullptr);

struct Resampled {
  std::optional<GainMatrix> gain;  // empty on give-up
  double fitness = kInfeasible;
  std::size_t attempts = 0;  // fitness calls made
};

// Evaluates candidate, then regenerate() results, until one is feasible or
// cap fitness calls have been made.
Resampled feasibility_resample(GainMatrix candidate, const std::function<GainMatrix()>& regenerate,
                               const FitnessFunction& evaluate, std::size_t cap);

// v = sp[r1] + F (sp[r2] − sp[r3]); the indices must be distinct and differ
// from i.
GainMatrix de_mutate_with(std::span<const GainMatrix> sp, std::size_t i, std::size_t r1, std::size_t r2,
                          std::size_t r3, double F);
// Draws r1, r2, r3 uniformly among the admissible indices. Needs sp.size() ≥ 4.
GainMatrix de_mutate(std::span<const GainMatrix> sp, std::size_t i, double F, Rng& rng);

// Component j comes from the donor when draws[j] < CR or j == forced.
GainMatrix de_crossover_with(const GainMatrix& target, const GainMatrix& donor, double CR,
                             std::span<const double> draws, std::size_t forced);
// Draws the forced index, then one uniform per component.
GainMatrix de_crossover(const GainMatrix& target, const GainMatrix& donor, double CR, Rng& rng);

// Replaces the cognitive best iff trial_fitness is strictly lower. Returns
// whether it did.
bool de_select(Particle& p, const GainMatrix& trial, double trial_fitness);

struct Swarm {
  std::vector<Particle> particles;
  GainMatrix population_best;
  double population_best_fitness = kInfeasible;

  // Adopts particle i's cognitive best as population best if strictly better.
  void offer(std::size_t i);
};

struct GenerationRecord {
  std::size_t generation = 0;
  double best_fitness = kInfeasible;
  GainMatrix best;
  // Particles whose cognitive best improved in the PSO step this generation.
  std::size_t improvements = 0;
  std::size_t de_rounds = 0;
  // DE rounds whose trial replaced a cognitive best.
  std::size_t de_successes = 0;
  // PSO updates that exhausted resample_cap.
  std::size_t pso_give_ups = 0;
  std::size_t fitness_calls = 0;  // cumulative
};

struct RunTrace {
  std::vector<GenerationRecord> records;
};

struct RunResult {
  GainMatrix best;
  double best_fitness = kInfeasible;
  RunTrace trace;
};

enum class StoredKind { Position, CognitiveBest };

struct Callbacks {
  std::function<void(const GenerationRecord&)> on_generation;
  // Every gain written into a particle, with the fitness it was stored under.
  std::function<void(StoredKind, const GainMatrix&, double)> on_store;
};

// Search over inputs×outputs gains. Throws ValidationError for a bad config
// and InitializationError when a particle cannot be placed feasibly.
RunResult run(const FitnessFunction& evaluate, std::size_t inputs, std::size_t outputs, const EvolveConfig& cfg,
              const Callbacks& callbacks = {});

// Search with the LMI fitness of plant and spec.
RunResult run(const PolytopicPlant& plant, const LmiSpec& spec, const EvolveConfig& cfg,
              const Callbacks& callbacks = {}, const SdpSettings& settings = {});

}  // namespace sofsyn
