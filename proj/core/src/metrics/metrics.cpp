#include "maveric/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "maveric/errors.hpp"

namespace maveric::metrics {

MetricSet compute_metrics(const sim::Trace& trace) {
  const auto& recs = trace.records;
  if (recs.empty()) throw ParseError("compute_metrics: empty trace");

  MetricSet m;

  double v_sum = 0.0;
  long long left = 0;
  for (const auto& r : recs) {
    v_sum += r.ego_v;
    if (r.ego_lane == 1) ++left;
  }
  m.mean_velocity = v_sum / static_cast<double>(recs.size());
  m.left_lane_fraction = static_cast<double>(left) / static_cast<double>(recs.size());

  for (std::size_t i = 1; i < recs.size(); ++i)
    if (recs[i].ego_lane != recs[i - 1].ego_lane) ++m.lane_change_count;

  // Overtake initiations: flag rising edges in lane 0 with a lead.
  double headway_sum = 0.0;
  int headway_n = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const bool rising =
        recs[i].lane_change_flag && (i == 0 || !recs[i - 1].lane_change_flag);
    if (rising && recs[i].ego_lane == 0 && recs[i].lead) {
      headway_sum += recs[i].d_x / recs[i].ego_v;
      ++headway_n;
    }
  }
  if (headway_n > 0) m.mean_headway_time = headway_sum / headway_n;

  // Merge-backs: lane 1 -> 0 transitions with a rear vehicle present.
  double mb_dist_sum = 0.0, mb_time_sum = 0.0;
  int mb_n = 0;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    if (recs[i - 1].ego_lane == 1 && recs[i].ego_lane == 0 && recs[i].rear) {
      const double gap = recs[i].ego_x - recs[i].rear->x;
      mb_dist_sum += gap;
      mb_time_sum += gap / recs[i].ego_v;
      ++mb_n;
    }
  }
  if (mb_n > 0) {
    m.distance_headway_merge_back = mb_dist_sum / mb_n;
    m.time_headway_merge_back = mb_time_sum / mb_n;
  }

  // Minimum lead gap within segments ending in a reaction event.
  double min_gap = std::numeric_limits<double>::infinity();
  bool saw_gap = false;
  double seg_min = std::numeric_limits<double>::infinity();
  bool seg_has_gap = false;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].lead) {
      seg_min = std::min(seg_min, recs[i].d_x);
      seg_has_gap = true;
    }
    const bool lane_event = i > 0 && recs[i].ego_lane != recs[i - 1].ego_lane;
    const bool slow_event = i >= 10 && recs[i].ego_v - recs[i - 10].ego_v < -0.5;
    if (lane_event || slow_event) {
      if (seg_has_gap) {
        min_gap = std::min(min_gap, seg_min);
        saw_gap = true;
      }
      seg_min = std::numeric_limits<double>::infinity();
      seg_has_gap = false;
    }
  }
  if (saw_gap) m.min_headway_distance = min_gap;

  return m;
}

namespace {

std::optional<double> rel_accuracy(std::optional<double> av,
                                   std::optional<double> user) {
  if (!av || !user || *user == 0.0) return std::nullopt;
  return std::max(0.0, 1.0 - std::abs(*av - *user) / std::abs(*user));
}

}  // namespace

MimicAccuracy mimic_accuracy(const MetricSet& av, const MetricSet& user) {
  MimicAccuracy a;
  a.mean_velocity = rel_accuracy(av.mean_velocity, user.mean_velocity);
  a.mean_headway_time = rel_accuracy(av.mean_headway_time, user.mean_headway_time);
  a.distance_headway_merge_back =
      rel_accuracy(av.distance_headway_merge_back, user.distance_headway_merge_back);
  a.time_headway_merge_back =
      rel_accuracy(av.time_headway_merge_back, user.time_headway_merge_back);
  a.lane_change_count =
      rel_accuracy(static_cast<double>(av.lane_change_count),
                   static_cast<double>(user.lane_change_count));
  a.min_headway_distance =
      rel_accuracy(av.min_headway_distance, user.min_headway_distance);
  a.left_lane_fraction =
      rel_accuracy(av.left_lane_fraction, user.left_lane_fraction);
  return a;
}

}  // namespace maveric::metrics
