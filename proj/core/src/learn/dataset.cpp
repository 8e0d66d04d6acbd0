#include "maveric/learn/dataset.hpp"

#include <algorithm>
#include <stdexcept>

namespace maveric::learn {

Dataset build_dataset(std::vector<sim::Trace> traces, const Config& cfg,
                      const Normalization& norm, double val_fraction) {
  std::sort(traces.begin(), traces.end(),
            [](const sim::Trace& a, const sim::Trace& b) {
              return a.meta.persona_id < b.meta.persona_id;
            });

  Dataset ds;
  const int W = cfg.sim.window_steps;
  const int stride = std::max(1, cfg.learn.window_stride);

  for (const sim::Trace& trace : traces) {
    if (static_cast<int>(trace.records.size()) < W)
      throw std::invalid_argument("build_dataset: trace shorter than window");
    int idx = -1;
    for (std::size_t i = 0; i < ds.persona_ids.size(); ++i)
      if (ds.persona_ids[i] == trace.meta.persona_id) idx = static_cast<int>(i);
    if (idx < 0) {
      idx = static_cast<int>(ds.persona_ids.size());
      ds.persona_ids.push_back(trace.meta.persona_id);
      ds.persona_adb.push_back(trace.meta.adb_score);
    }

    const double posted = trace.meta.scenario.posted_speed_mps;
    std::vector<Sample> samples;
    for (std::size_t t = static_cast<std::size_t>(W) - 1;
         t < trace.records.size(); t += static_cast<std::size_t>(stride)) {
      Sample s;
      s.v_ev.resize(W);
      s.v_lv.resize(W);
      s.d_x.resize(W);
      s.d_y.resize(W);
      for (int k = 0; k < W; ++k) {
        const sim::TraceRecord& r = trace.records[t - W + 1 + k];
        s.v_ev(k) = r.ego_v / norm.speed_scale;
        s.v_lv(k) = (r.lead ? r.lead->v : posted) / norm.speed_scale;
        s.d_x(k) = r.d_x / norm.gap_scale;
        s.d_y(k) = r.d_y / norm.lateral_scale;
      }
      const sim::TraceRecord& at = trace.records[t];
      s.persona_idx = idx;
      s.f_target_n = at.d_x / norm.follow_scale;
      s.follow_active = at.lead.has_value() && at.d_x < cfg.controllers.lambda;
      s.l_label = at.lane_change_flag;
      s.v_target_n = at.ego_v / norm.speed_scale;
      s.adb_raw = trace.meta.adb_score;
      samples.push_back(std::move(s));
    }

    const auto n_val = static_cast<std::size_t>(
        val_fraction * static_cast<double>(samples.size()));
    const std::size_t n_train = samples.size() - n_val;
    for (std::size_t i = 0; i < samples.size(); ++i)
      (i < n_train ? ds.train : ds.val).push_back(std::move(samples[i]));
  }

  std::size_t n_pos = 0;
  for (const Sample& s : ds.train)
    if (s.l_label) ++n_pos;
  const auto n = static_cast<double>(ds.train.size());
  const auto pos = static_cast<double>(n_pos);
  ds.class_weight_pos = n_pos > 0 ? n / (2.0 * pos) : 0.0;
  ds.class_weight_neg = n_pos < ds.train.size() ? n / (2.0 * (n - pos)) : 0.0;
  return ds;
}

}  // namespace maveric::learn
