#pragma once

#include <cmath>
#include <vector>

#include "coopdetect/rng.hpp"
#include "coopdetect/types.hpp"

namespace coopdetect {

struct Position {
  double x = 0.0;
  double y = 0.0;

  friend constexpr bool operator==(const Position&, const Position&) = default;
};

inline double distance(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

enum class MobilityModel { kRandomWaypoint, kStatic };

struct MobilityParams {
  MobilityModel model = MobilityModel::kRandomWaypoint;
  double width = 1000.0;
  double height = 1000.0;
  double min_speed = 0.1;  // exclusive lower bound of the speed draw
  double max_speed = 8.0;
  SimTime pause = 5.0;
};

/// Piecewise-linear random-waypoint trajectory. `pause_until` is in the past
/// while the node is travelling.
struct MobilityState {
  Position current;
  Position leg_origin;
  Position waypoint;
  double speed = 0.0;
  SimTime leg_start = 0.0;
  SimTime arrival = 0.0;
  SimTime pause_until = 0.0;

  bool stationary_at(SimTime now) const { return now < pause_until || speed == 0.0; }
};

/// Starts a leg from `from` at time `start` toward a fresh uniform waypoint.
void begin_leg(MobilityState& state, Position from, SimTime start, const MobilityParams& params, Rng& rng);

/// Starts a leg toward an explicit waypoint. A zero-length leg pauses at once.
void begin_leg_to(MobilityState& state, Position from, SimTime start, Position to, double speed,
                  SimTime pause);

/// Initial state: uniform position, first leg drawn immediately (no pause at t = 0).
MobilityState initial_mobility(const MobilityParams& params, Rng& rng);

/// Advances `state` to `now` (legs and pauses drawn from `rng` as they are
/// crossed) and returns the position. `now` must not go backwards.
Position advance_mobility(MobilityState& state, SimTime now, const MobilityParams& params, Rng& rng);

}  // namespace coopdetect
