#pragma once

// Finite delta-mixture laws used as witnesses of the moment bounds, and an
// exhaustive grid oracle that solves the underlying moment problems
// independently of the closed forms.

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "snrb/bounds.hpp"

namespace snrb {

struct Atom {
  double x;
  double p;
};

/// Finite discrete law. Atoms are kept sorted by location with distinct
/// locations; masses are non-negative and sum to one within 1e-12.
class DiscreteDist {
 public:
  explicit DiscreteDist(std::vector<Atom> atoms);

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  /// Total mass of the atoms whose location satisfies `event`.
  double prob(const std::function<bool(double)>& event) const;

 private:
  std::vector<Atom> atoms_;
};

/// Mean and variance of a discrete law; the variance may be zero.
struct RawMoments {
  double mu;
  double var;
};

RawMoments moments_of(const DiscreteDist& d);

/// Two-atom law with moments m and mass upper_tail_bound(m, eta) at eta.
DiscreteDist construct_tail_extremal(const Moments& m, double eta);

/// Three-atom law with mass 1 - eps at mu and eps/2 at mu -/+ sigma/sqrt(eps).
DiscreteDist construct_spike(const Moments& m, double eps);

/// Two-atom law with moments m and all mass outside (lo, hi). Requires
/// straddling thresholds with standardized product below one.
DiscreteDist construct_outside_extremal(const Moments& m, const Interval& iv);

// Events are closed: tail is x >= eta, outside is x <= lo or x >= hi,
// inside is lo <= x <= hi.
struct TailEvent {
  double eta;
};
struct OutsideEvent {
  Interval iv;
};
struct InsideEvent {
  Interval iv;
};
using Event = std::variant<TailEvent, OutsideEvent, InsideEvent>;

bool event_contains(const Event& e, double x) noexcept;

struct Grid {
  double x_min;
  double x_max;
  double step;
};

/// [mu - 6 sigma, mu + 6 sigma] with step sigma / 100.
Grid default_grid(const Moments& m);

struct OracleResult {
  double sup_prob;
  DiscreteDist witness;
  double grid_step;
};

/// Maximizes the event probability over every two- and three-atom law
/// supported on the grid with exact moments m. Ties keep the candidate
/// with the smallest atom locations (enumeration order).
OracleResult oracle_max_event(const Moments& m, const Event& event, const Grid& grid);

/// k-atom law with moments exactly m, deterministic in seed.
DiscreteDist random_moment_dist(const Moments& m, int k, std::uint64_t seed);

}  // namespace snrb
