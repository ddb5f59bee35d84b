#pragma once
// Seeded synthetic generators. Each task is a parametrized generator; the
// "real" data is the same generator at its nominal parameters.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "adiv/core.hpp"
#include "adiv/ledger.hpp"
#include "adiv/rng.hpp"

namespace adiv {

using Sampler = std::function<Dataset(std::size_t n, Rng& rng, BudgetLedger& ledger)>;

struct ParamBox {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> psi) const;
  std::vector<double> clamp(std::span<const double> psi) const;
  double width(std::size_t k) const { return hi[k] - lo[k]; }
};

class Task {
 public:
  virtual ~Task() = default;

  virtual std::string name() const = 0;
  virtual std::size_t feature_dim() const = 0;
  virtual std::vector<double> nominal() const = 0;
  virtual ParamBox bounds() const = 0;
  // Distance from psi to the nominal parameters, respecting any symmetry of
  // the parametrization (rotation tasks are periodic).
  virtual double error(std::span<const double> psi) const = 0;

  // n i.i.d. rows at psi; charges n to the ledger. Throws std::out_of_range
  // when psi lies outside bounds().
  Dataset sample(std::span<const double> psi, std::size_t n, Rng& rng, BudgetLedger& ledger) const;
  Dataset ground_truth(std::size_t n, Rng& rng, BudgetLedger& ledger) const;

  Sampler sampler(std::vector<double> psi) const;
  Sampler ground_truth_sampler() const;

 protected:
  virtual void draw(std::span<const double> psi, std::size_t n, Rng& rng, Dataset& out) const = 0;
};

// Equal mixture of two isotropic Gaussians centred at +-(1, 1)/sqrt(2), rotated
// by the single parameter theta. The mixture is symmetric under rotation by pi.
class XorTask final : public Task {
 public:
  static constexpr double kComponentStd = 0.35;

  std::string name() const override { return "xor"; }
  std::size_t feature_dim() const override { return 2; }
  std::vector<double> nominal() const override { return {0.0}; }
  ParamBox bounds() const override;
  double error(std::span<const double> psi) const override;

 protected:
  void draw(std::span<const double> psi, std::size_t n, Rng& rng, Dataset& out) const override;
};

// Two-turn Archimedean spiral r = u, angle = 4 pi u, u ~ U(0, 1), with radial
// Gaussian noise, rotated by theta.
class RollTask final : public Task {
 public:
  static constexpr double kRadialNoise = 0.05;

  std::string name() const override { return "roll"; }
  std::size_t feature_dim() const override { return 2; }
  std::vector<double> nominal() const override { return {0.0}; }
  ParamBox bounds() const override;
  double error(std::span<const double> psi) const override;

 protected:
  void draw(std::span<const double> psi, std::size_t n, Rng& rng, Dataset& out) const override;
};

// Toy detector alignment. Particles leave the origin along random directions;
// a spherical detector of radius kRadius centred at the offset (x, y, z)
// records where they cross its surface on a 32 x 32 grid in pseudorapidity
// [-5, 5] and azimuth [-pi, pi]. Each event is the 1024-cell energy map.
class DetectorTask final : public Task {
 public:
  static constexpr std::size_t kGrid = 32;
  static constexpr std::size_t kRays = 16;
  static constexpr double kRadius = 2.0;
  static constexpr double kEtaMax = 5.0;
  static constexpr double kSourceEtaStd = 1.5;

  std::string name() const override { return "detector"; }
  std::size_t feature_dim() const override { return kGrid * kGrid; }
  std::vector<double> nominal() const override { return {0.0, 0.0, 0.0}; }
  ParamBox bounds() const override;
  double error(std::span<const double> psi) const override;

  static std::vector<double> initial_guess() { return {0.75, 0.75, 0.75}; }

 protected:
  void draw(std::span<const double> psi, std::size_t n, Rng& rng, Dataset& out) const override;
};

std::unique_ptr<Task> make_task(const std::string& name);

// Rotates every 2-D row of `xs` by `angle` in place.
void rotate_rows(Dataset& xs, double angle);

}  // namespace adiv
