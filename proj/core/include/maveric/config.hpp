#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace maveric {

constexpr double kMphToMps = 0.44704;
constexpr int kEmbeddingDim = 3;

struct SimConfig {
  double dt = 0.1;                 // s
  int window_steps = 30;           // W = 3.0 s / dt
  double posted_speed = 55.0 * kMphToMps;  // m/s
  double lane_width = 3.7;         // m
  double d_max = 500.0;            // sentinel / clamp gap, m
  double accel_min = -6.0;         // m/s^2
  double accel_max = 4.0;          // m/s^2
  double steer_max = 0.5;          // rad
  double v_max = 45.0;             // m/s
  double wheelbase = 2.9;          // m
  double vehicle_length = 4.5;     // m
  double vehicle_width = 1.8;      // m
  double lead_spawn_ahead = 250.0; // m, new lead injected this far ahead
  double lead_recycle_gap = 500.0; // m, re-inject when lead has receded past this
  double offlane_mean_gap = 400.0; // m, Poisson spacing of left-lane traffic
};

struct ControllerConfig {
  double kp_v = 0.8;
  double ki_v = 0.05;
  double kp_f = 0.4;
  double ki_f = 0.02;
  double kv_f = 0.6;        // relative-speed gain in the follow law
  double stanley_k = 2.0;
  double lambda = 80.0;     // m, velocity -> follow switch distance
  double delta = 0.5;       // lane-change probability threshold
  double f_min = 5.0;       // m, hard gap floor
  double tau_min = 0.5;     // s, minimum time headway
  double lane_change_min_len = 30.0;   // m
  double lane_change_len_per_speed = 2.5;  // s-equivalent, L = max(2.5 v, 30)
  double front_clear_min = 15.0;       // m, target-lane clearance ahead
  double rear_clear_base = 12.0;       // m, target-lane clearance behind
  double rear_clear_closing = 8.0;     // s, extra clearance per m/s closing
  double rear_clear_fhat = 0.8;        // fraction of f_hat required behind
};

struct PersonaConfig {
  double speed_jitter = 0.5;     // m/s, OU noise scale
  double ou_theta = 0.5;         // 1/s, OU mean reversion
  double pass_boost_frac = 0.08; // target-speed fraction added in the left lane
  double param_jitter = 0.1;     // fraction of each parameter's span
};

struct LearnConfig {
  int hidden_width = 64;
  int hidden_layers = 2;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 256;
  int epochs = 150;
  int patience = 20;             // early-stop epochs without val improvement
  double c2 = 5.0;               // lane-change loss weight
  double c4 = 0.01 / (55.0 * 55.0);  // style loss weight (raw ADB scale)
  double val_fraction = 0.1;     // tail of each trace held out per persona
  int window_stride = 2;         // windows overlap 28 of 30 steps regardless
  double speed_scale = 40.0;     // m/s normalizer
  double gap_scale = 500.0;      // m normalizer
  double fit_learning_rate = 0.05;
  int fit_epochs = 80;
  int fit_restarts = 3;          // prior inits tried; lowest final loss wins
};

struct StylespaceConfig {
  double condition_delta_adb = 15.0;  // aggressive/cautious shift magnitude
  int perp_angles = 12;               // ellipse sweep resolution
};

struct Config {
  SimConfig sim;
  ControllerConfig controllers;
  PersonaConfig personas;
  LearnConfig learn;
  StylespaceConfig stylespace;

  /// Canonical JSON dump (sorted keys, shortest round-trip numbers).
  std::string canonical_json() const;

  /// FNV-1a 64 over the canonical dump, hex encoded.
  std::string hash() const;

  static Config from_json_text(const std::string& text);
  static Config load(const std::string& path);

  /// Apply one "dotted.path=value" override (e.g. "learn.epochs=50").
  /// Unknown paths throw std::invalid_argument.
  void apply_override(const std::string& assignment);
};

}  // namespace maveric
