#pragma once

#include <optional>

#include "maveric/sim/trace.hpp"

namespace maveric::metrics {

/// Objective per-trace measures. Event-based fields are means over events and
/// absent when no event occurred. Definitions:
///  - overtake initiation: rising lane_change_flag edge while in lane 0 with a
///    lead present; headway time there is d_x / v_ev;
///  - merge-back: lane index transition 1 -> 0 with a rear vehicle present at
///    the transition record; distance = ego_x - rear_x, time = distance / v_ev
///    (mean of per-event ratios);
///  - min_headway_distance: minimum lead gap within segments that end in a
///    reaction event (any lane transition, or a slowdown of more than 0.5 m/s
///    over 1 s), minimized across segments; only lead-present steps count.
struct MetricSet {
  double mean_velocity = 0.0;
  std::optional<double> mean_headway_time;
  std::optional<double> distance_headway_merge_back;
  std::optional<double> time_headway_merge_back;
  int lane_change_count = 0;
  std::optional<double> min_headway_distance;
  double left_lane_fraction = 0.0;
};

MetricSet compute_metrics(const sim::Trace& trace);

/// Relative-error complements, max(0, 1 - |av - user| / user). A field is
/// absent when the reference is zero/absent (or, for event metrics, when
/// either side recorded no event).
struct MimicAccuracy {
  std::optional<double> mean_velocity;
  std::optional<double> mean_headway_time;
  std::optional<double> distance_headway_merge_back;
  std::optional<double> time_headway_merge_back;
  std::optional<double> lane_change_count;
  std::optional<double> min_headway_distance;
  std::optional<double> left_lane_fraction;
};

MimicAccuracy mimic_accuracy(const MetricSet& av, const MetricSet& user);

}  // namespace maveric::metrics
