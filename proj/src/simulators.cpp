#include "adiv/simulators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace adiv {

namespace {

constexpr double kPi = std::numbers::pi;

double periodic_distance(double a, double b, double period) {
  double d = std::fmod(std::abs(a - b), period);
  return std::min(d, period - d);
}

}  // namespace

bool ParamBox::contains(std::span<const double> psi) const {
  if (psi.size() != lo.size()) return false;
  for (std::size_t k = 0; k < psi.size(); ++k) {
    if (!(psi[k] >= lo[k] && psi[k] <= hi[k])) return false;
  }
  return true;
}

std::vector<double> ParamBox::clamp(std::span<const double> psi) const {
  std::vector<double> out(psi.begin(), psi.end());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::clamp(out[k], lo[k], hi[k]);
  return out;
}

void rotate_rows(Dataset& xs, double angle) {
  if (xs.cols() != 2) throw std::invalid_argument("rotate_rows: expects 2-D rows");
  if (angle == 0.0) return;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    const double x = xs(i, 0);
    const double y = xs(i, 1);
    xs(i, 0) = c * x - s * y;
    xs(i, 1) = s * x + c * y;
  }
}

Dataset Task::sample(std::span<const double> psi, std::size_t n, Rng& rng,
                     BudgetLedger& ledger) const {
  if (n == 0) throw std::invalid_argument("sample: n must be >= 1");
  if (!bounds().contains(psi)) throw std::out_of_range(name() + ": parameters out of bounds");
  Dataset out(n, feature_dim());
  draw(psi, n, rng, out);
  ledger.record(name(), n);
  return out;
}

Dataset Task::ground_truth(std::size_t n, Rng& rng, BudgetLedger& ledger) const {
  const auto psi = nominal();
  return sample(psi, n, rng, ledger);
}

Sampler Task::sampler(std::vector<double> psi) const {
  return [this, psi = std::move(psi)](std::size_t n, Rng& rng, BudgetLedger& ledger) {
    return sample(psi, n, rng, ledger);
  };
}

Sampler Task::ground_truth_sampler() const { return sampler(nominal()); }

// --- xor ---------------------------------------------------------------------

ParamBox XorTask::bounds() const { return {{0.0}, {kPi}}; }

double XorTask::error(std::span<const double> psi) const {
  return periodic_distance(psi[0], 0.0, kPi);
}

void XorTask::draw(std::span<const double> psi, std::size_t n, Rng& rng, Dataset& out) const {
  const double m = 1.0 / std::numbers::sqrt2;
  for (std::size_t i = 0; i < n; ++i) {
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const double x = sign * m + kComponentStd * rng.normal();
    const double y = sign * m + kComponentStd * rng.normal();
    out(i, 0) = x;
    out(i, 1) = y;
  }
  rotate_rows(out, psi[0]);
}

// --- roll --------------------------------------------------------------------

ParamBox RollTask::bounds() const { return {{-kPi}, {kPi}}; }

double RollTask::error(std::span<const double> psi) const {
  return periodic_distance(psi[0], 0.0, 2.0 * kPi);
}

void RollTask::draw(std::span<const double> psi, std::size_t n, Rng& rng, Dataset& out) const {
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const double r = u + kRadialNoise * rng.normal();
    const double a = 4.0 * kPi * u;
    out(i, 0) = r * std::cos(a);
    out(i, 1) = r * std::sin(a);
  }
  rotate_rows(out, psi[0]);
}

// --- detector ----------------------------------------------------------------

ParamBox DetectorTask::bounds() const { return {{-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}}; }

double DetectorTask::error(std::span<const double> psi) const {
  return std::sqrt(psi[0] * psi[0] + psi[1] * psi[1] + psi[2] * psi[2]);
}

void DetectorTask::draw(std::span<const double> psi, std::size_t n, Rng& rng, Dataset& out) const {
  const double ox = psi[0];
  const double oy = psi[1];
  const double oz = psi[2];
  const double oo = ox * ox + oy * oy + oz * oz;
  const double eta_cell = 2.0 * kEtaMax / static_cast<double>(kGrid);
  const double phi_cell = 2.0 * kPi / static_cast<double>(kGrid);
  for (std::size_t i = 0; i < n; ++i) {
    auto cells = out.row(i);
    for (std::size_t r = 0; r < kRays; ++r) {
      const double eta = kSourceEtaStd * rng.normal();
      const double phi = rng.uniform(-kPi, kPi);
      const double energy = rng.exponential(1.0);
      // Unit direction from pseudorapidity and azimuth.
      const double st = 1.0 / std::cosh(eta);
      const double ux = st * std::cos(phi);
      const double uy = st * std::sin(phi);
      const double uz = std::tanh(eta);
      // Crossing of the ray t*u (t > 0) with |p - o| = R; the origin is inside
      // the sphere because |o| <= sqrt(3) < R.
      const double uo = ux * ox + uy * oy + uz * oz;
      const double t = uo + std::sqrt(uo * uo - oo + kRadius * kRadius);
      const double hx = t * ux - ox;
      const double hy = t * uy - oy;
      const double hz = t * uz - oz;
      const double rho = std::sqrt(hx * hx + hy * hy);
      const double heta = std::asinh(hz / rho);
      if (!(std::abs(heta) < kEtaMax)) continue;
      const double hphi = std::atan2(hy, hx);
      auto ie = static_cast<std::size_t>((heta + kEtaMax) / eta_cell);
      auto ip = static_cast<std::size_t>((hphi + kPi) / phi_cell);
      ie = std::min(ie, kGrid - 1);
      ip = std::min(ip, kGrid - 1);
      cells[ie * kGrid + ip] += energy;
    }
  }
}

std::unique_ptr<Task> make_task(const std::string& name) {
  if (name == "xor") return std::make_unique<XorTask>();
  if (name == "roll") return std::make_unique<RollTask>();
  if (name == "detector") return std::make_unique<DetectorTask>();
  throw std::invalid_argument("unknown task: " + name);
}

}  // namespace adiv
