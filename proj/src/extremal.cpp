#include "snrb/extremal.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "snrb/error.hpp"

namespace snrb {

namespace {

constexpr double kMassTol = 1e-12;
constexpr int kMaxAttempts = 1000;

// Moves x onto a threshold it was meant to sit on when rounding left it a hair short.
double snap(double x, double threshold) {
  const double tol = 1e-12 * std::max(1.0, std::abs(threshold));
  return std::abs(x - threshold) <= tol ? threshold : x;
}

}  // namespace

DiscreteDist::DiscreteDist(std::vector<Atom> atoms) {
  if (atoms.empty()) fail(Errc::input, "discrete distribution needs at least one atom");
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.x) || !std::isfinite(a.p)) fail(Errc::input, "atom location and mass must be finite");
    if (a.p < 0.0) fail(Errc::input, "atom mass must be non-negative");
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.x < r.x; });
  for (const Atom& a : atoms) {
    if (!atoms_.empty() && atoms_.back().x == a.x)
      atoms_.back().p += a.p;
    else
      atoms_.push_back(a);
  }
  double total = 0.0;
  for (const Atom& a : atoms_) total += a.p;
  if (std::abs(total - 1.0) > kMassTol) {
    std::ostringstream os;
    os.precision(17);
    os << "atom masses sum to " << total << ", expected 1";
    fail(Errc::input, os.str());
  }
}

double DiscreteDist::prob(const std::function<bool(double)>& event) const {
  double p = 0.0;
  for (const Atom& a : atoms_)
    if (event(a.x)) p += a.p;
  return p;
}

RawMoments moments_of(const DiscreteDist& d) {
  double mean = 0.0;
  for (const Atom& a : d.atoms()) mean += a.p * a.x;
  double var = 0.0;
  for (const Atom& a : d.atoms()) var += a.p * (a.x - mean) * (a.x - mean);
  return {mean, var};
}

DiscreteDist construct_tail_extremal(const Moments& m, double eta) {
  if (!std::isfinite(eta)) fail(Errc::input, "threshold must be finite");
  if (eta < m.mu()) fail(Errc::input, "tail extremal law requires eta >= mu");
  if (eta == m.mu()) fail(Errc::degenerate, "tail bound at eta = mu is approached but not attained");
  const double d = eta - m.mu();
  const double denom = m.var() + d * d;
  // Standardized atoms t and -1/t; -sigma/t in original units is -var/d.
  return DiscreteDist({{eta, m.var() / denom}, {m.mu() - m.var() / d, d * d / denom}});
}

DiscreteDist construct_spike(const Moments& m, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) fail(Errc::input, "spike weight eps must lie in (0, 1)");
  const double offset = m.sigma() / std::sqrt(eps);
  return DiscreteDist({{m.mu() - offset, 0.5 * eps}, {m.mu(), 1.0 - eps}, {m.mu() + offset, 0.5 * eps}});
}

DiscreteDist construct_outside_extremal(const Moments& m, const Interval& iv) {
  if (!(iv.lo() < m.mu() && m.mu() < iv.hi()))
    fail(Errc::infeasible, "outside extremal law requires lo < mu < hi");
  const double t1 = m.standardize(iv.lo());
  const double t2 = m.standardize(iv.hi());
  if (std::abs(t1) * t2 >= 1.0)
    fail(Errc::infeasible, "outside extremal law requires standardized |lo| * hi < 1");

  const double k = (std::abs(t1) > t2 && std::abs(t1) > 1.0) ? -1.0 : 1.0;
  const double lambda = k * std::max({std::abs(t1), t2, 1.0});
  const double l2 = lambda * lambda;
  double x_far = m.mu() + m.sigma() * lambda;
  double x_near = m.mu() - m.sigma() / lambda;
  // With lambda > 0 the far atom lands at or above hi; with lambda < 0 at or below lo.
  if (lambda > 0.0) {
    x_far = snap(x_far, iv.hi());
    x_near = snap(x_near, iv.lo());
  } else {
    x_far = snap(x_far, iv.lo());
    x_near = snap(x_near, iv.hi());
  }
  return DiscreteDist({{x_near, l2 / (l2 + 1.0)}, {x_far, 1.0 / (l2 + 1.0)}});
}

bool event_contains(const Event& e, double x) noexcept {
  return std::visit(
      [x](const auto& ev) -> bool {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, TailEvent>)
          return x >= ev.eta;
        else if constexpr (std::is_same_v<T, OutsideEvent>)
          return x <= ev.iv.lo() || x >= ev.iv.hi();
        else
          return x >= ev.iv.lo() && x <= ev.iv.hi();
      },
      e);
}

Grid default_grid(const Moments& m) {
  const double s = m.sigma();
  return {m.mu() - 6.0 * s, m.mu() + 6.0 * s, s / 100.0};
}

namespace {

Event clamp_event(const Event& e, const Grid& g) {
  auto c = [&](double v) { return std::clamp(v, g.x_min, g.x_max); };
  return std::visit(
      [&](const auto& ev) -> Event {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, TailEvent>)
          return TailEvent{c(ev.eta)};
        else
          return T{Interval(c(ev.iv.lo()), c(ev.iv.hi()))};
      },
      e);
}

struct Candidate {
  double value = -1.0;
  std::size_t idx[3] = {0, 0, 0};
  double mass[3] = {0.0, 0.0, 0.0};
  int atoms = 0;
};

}  // namespace

OracleResult oracle_max_event(const Moments& m, const Event& event, const Grid& grid) {
  if (!(grid.step > 0.0) || !std::isfinite(grid.step)) fail(Errc::input, "grid step must be positive");
  const double s = m.sigma();
  const double slack = 1e-9 * std::max(1.0, s);
  if (grid.x_min > m.mu() - 6.0 * s + slack || grid.x_max < m.mu() + 6.0 * s - slack)
    fail(Errc::input, "grid must cover [mu - 6 sigma, mu + 6 sigma]");
  const double span = (grid.x_max - grid.x_min) / grid.step;
  if (span > 1e5) fail(Errc::input, "grid has too many points");

  const auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
  const Event ev = clamp_event(event, grid);
  std::vector<double> x(n), z(n);
  std::vector<unsigned char> in(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = grid.x_min + static_cast<double>(k) * grid.step;
    z[k] = (x[k] - m.mu()) / s;
    in[k] = event_contains(ev, x[k]) ? 1 : 0;
  }

  // Index of the first grid point whose standardized location is >= t.
  auto first_at_least = [&](double t) -> std::size_t {
    return static_cast<std::size_t>(std::lower_bound(z.begin(), z.end(), t) - z.begin());
  };

  // In standardized units the moment system {1, z, z^2} = {1, 0, 1} has, for
  // atoms z1 < z2 < z3, masses p_i = (1 + z_j z_k) / prod_{j != i} (z_i - z_j).
  // Feasibility needs z1 z3 <= -1, z2 >= -1/z3 and z2 <= -1/z1.
  Candidate best;
  const std::size_t first_pos = first_at_least(std::nextafter(0.0, 1.0));
  for (std::size_t i = 0; i < n && z[i] < 0.0; ++i) {
    const double zi = z[i];
    const std::size_t j0 = std::max(first_pos, first_at_least(-1.0 / zi - 1e-12));
    for (std::size_t j = j0; j < n; ++j) {
      const double zj = z[j];
      const double c13 = 1.0 + zi * zj;
      if (c13 > kMassTol) continue;

      if (std::abs(c13) <= kMassTol) {
        const double pi = zj / (zj - zi);
        const double pj = -zi / (zj - zi);
        const double v = in[i] * pi + in[j] * pj;
        if (v > best.value) best = Candidate{v, {i, j, 0}, {pi, pj, 0.0}, 2};
      }

      const std::size_t lo_idx = std::max(i + 1, first_at_least(-1.0 / zj - 1e-12));
      const std::size_t hi_idx = std::min(j, first_at_least(-1.0 / zi + 1e-12));
      const double dij = zi - zj;
      for (std::size_t k = lo_idx; k < hi_idx; ++k) {
        const double zk = z[k];
        const double p1 = (1.0 + zk * zj) / ((zi - zk) * dij);
        const double p2 = c13 / ((zk - zi) * (zk - zj));
        const double p3 = (1.0 + zi * zk) / ((zj - zi) * (zj - zk));
        if (p1 < -kMassTol || p2 < -kMassTol || p3 < -kMassTol) continue;
        const double v = in[i] * p1 + in[k] * p2 + in[j] * p3;
        if (v > best.value) best = Candidate{v, {i, k, j}, {p1, p2, p3}, 3};
      }
    }
  }
  if (best.atoms == 0) fail(Errc::infeasible, "no feasible law on the grid");

  std::vector<Atom> atoms;
  for (int a = 0; a < best.atoms; ++a) {
    const double p = std::max(0.0, best.mass[a]);
    if (p > 0.0) atoms.push_back({x[best.idx[a]], p});
  }
  DiscreteDist witness(std::move(atoms));
  const double sup = witness.prob([&](double v) { return event_contains(ev, v); });
  return OracleResult{sup, std::move(witness), grid.step};
}

DiscreteDist random_moment_dist(const Moments& m, int k, std::uint64_t seed) {
  if (k < 2) fail(Errc::input, "random moment distribution needs k >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const int free_atoms = k - 2;
    // Mass left for the two solved atoms.
    const double rest = free_atoms == 0 ? 1.0 : 0.05 + 0.9 * unit(rng);
    const double spread = 0.3 + 1.7 * unit(rng);

    std::vector<double> w(free_atoms);
    double wsum = 0.0;
    for (double& v : w) {
      v = 0.05 + unit(rng);
      wsum += v;
    }
    std::vector<Atom> z;
    z.reserve(k);
    double m1 = 0.0, m2 = 0.0;
    for (int a = 0; a < free_atoms; ++a) {
      const double p = (1.0 - rest) * w[a] / wsum;
      const double loc = spread * normal(rng);
      z.push_back({loc, p});
      m1 += p * loc;
      m2 += p * loc * loc;
    }
    // The two remaining atoms carry mass `rest` with conditional mean c and variance v.
    const double c = -m1 / rest;
    const double v = (1.0 - m2) / rest - c * c;
    if (!(v > 1e-9)) continue;
    const double share = 0.05 + 0.9 * unit(rng);
    const double q1 = rest * share;
    const double q2 = rest - q1;
    z.push_back({c - std::sqrt(v * q2 / q1), q1});
    z.push_back({c + std::sqrt(v * q1 / q2), q2});

    for (Atom& a : z) a.x = m.mu() + m.sigma() * a.x;
    return DiscreteDist(std::move(z));
  }
  fail(Errc::generation, "could not draw a distribution with the requested moments");
}

}  // namespace snrb
