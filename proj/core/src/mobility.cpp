#include "coopdetect/mobility.hpp"

#include <algorithm>

namespace coopdetect {

namespace {

Position uniform_point(const MobilityParams& params, Rng& rng) {
  return Position{rng.uniform(0.0, params.width), rng.uniform(0.0, params.height)};
}

}  // namespace

void begin_leg_to(MobilityState& state, Position from, SimTime start, Position to, double speed,
                  SimTime pause) {
  state.leg_origin = from;
  state.current = from;
  state.leg_start = start;
  state.waypoint = to;
  state.speed = speed;
  const double len = distance(from, to);
  state.arrival = start + len / speed;
  // While travelling pause_until lies at or before the leg start.
  state.pause_until = len == 0.0 ? start + pause : start;
}

void begin_leg(MobilityState& state, Position from, SimTime start, const MobilityParams& params, Rng& rng) {
  const Position to = uniform_point(params, rng);
  const double speed = rng.uniform_left_open(params.min_speed, params.max_speed);
  begin_leg_to(state, from, start, to, speed, params.pause);
}

MobilityState initial_mobility(const MobilityParams& params, Rng& rng) {
  MobilityState state;
  const Position start = uniform_point(params, rng);
  if (params.model == MobilityModel::kStatic) {
    state.current = state.leg_origin = state.waypoint = start;
    state.pause_until = kNever;
    return state;
  }
  begin_leg(state, start, 0.0, params, rng);
  return state;
}

Position advance_mobility(MobilityState& state, SimTime now, const MobilityParams& params, Rng& rng) {
  if (params.model == MobilityModel::kStatic || state.speed == 0.0) return state.current;
  for (;;) {
    if (now < state.arrival) {
      const double len = distance(state.leg_origin, state.waypoint);
      const double frac = std::clamp((now - state.leg_start) * state.speed / len, 0.0, 1.0);
      state.current = Position{state.leg_origin.x + (state.waypoint.x - state.leg_origin.x) * frac,
                               state.leg_origin.y + (state.waypoint.y - state.leg_origin.y) * frac};
      return state.current;
    }
    // Arrived: pause begins at arrival.
    state.current = state.waypoint;
    const SimTime pause_end = state.arrival + params.pause;
    state.pause_until = pause_end;
    if (now < pause_end) return state.current;
    begin_leg(state, state.waypoint, pause_end, params, rng);
  }
}

}  // namespace coopdetect
