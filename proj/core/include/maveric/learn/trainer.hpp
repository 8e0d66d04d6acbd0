#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maveric/config.hpp"
#include "maveric/learn/dataset.hpp"
#include "maveric/learn/network.hpp"
#include "maveric/sim/trace.hpp"

namespace maveric::learn {

struct EpochLog {
  int epoch = 0;
  double l1 = 0.0, l2 = 0.0, l3 = 0.0, l4 = 0.0, l5 = 0.0;
  double val_loss = 0.0;
  // Validation components (train means when no validation split exists).
  double val_l1 = 0.0, val_l3 = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

/// Joint training of all subnetworks and the per-persona embedding table.
/// Minibatch updates use momentum plus per-parameter second-moment scaling;
/// early-stops after `patience` epochs without validation improvement and
/// returns the best-validation parameters. Deterministic per seed. Throws
/// TrainingDiverged on non-finite loss.
TrainResult train(const std::vector<sim::Trace>& traces, const Config& cfg,
                  std::uint64_t seed);

/// epoch,L1,L2,L3,L4,L5,val_loss per line.
void write_training_log(const std::string& path,
                        const std::vector<EpochLog>& log);

/// Freezes every subnet weight and optimizes a fresh prior-initialized
/// embedding against L1 + c2 L2 + L3 on one demonstration trace (no ADB label
/// and no posterior term for an unknown user). Returns the fitted embedding
/// with the mean posterior over the trace and its predicted ADB score.
StyleEmbedding fit_new_user(const ModelParams& frozen, const sim::Trace& trace,
                            const Config& cfg, std::uint64_t seed);

}  // namespace maveric::learn
