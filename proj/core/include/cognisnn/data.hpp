#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cognisnn/rng.hpp"
#include "cognisnn/tensor.hpp"

namespace cognisnn {

/// Event-frame dataset: each sample is a (T, C, H, W) tensor of 0/1 spikes.
struct EventTensorDataset {
  std::vector<Tensor> samples;
  std::vector<int> labels;
  int class_count = 0;
  std::string split;

  int size() const { return static_cast<int>(samples.size()); }
  /// Uniform shapes, strictly binary values, labels within class_count.
  void validate() const;
};

/// Stacks the chosen samples into per-timestep batches: element t of the
/// result is the (N, C, H, W) frame tensor of all `indices` at time t.
std::vector<Tensor> collate_frames(const EventTensorDataset& dataset,
                                   const std::vector<int>& indices);
std::vector<int> collate_labels(const EventTensorDataset& dataset,
                                const std::vector<int>& indices);

enum class PatternFamily { MovingBar, Rotation, Checker };

const char* pattern_name(PatternFamily family);
PatternFamily pattern_from_name(const std::string& name);

/// Desk-scale stand-in for event-camera recordings: classes are distinct
/// motion patterns, pixels spike at Bernoulli(fg) on the pattern and
/// Bernoulli(bg) off it.
struct SyntheticTaskSpec {
  int class_count = 4;
  int timesteps = 8;
  int channels = 2;
  int height = 16;
  int width = 16;
  PatternFamily family = PatternFamily::MovingBar;
  double spike_prob_fg = 1.0;
  double spike_prob_bg = 0.0;
  int samples_per_class = 100;
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidSpecError
};

struct SyntheticDataset {
  EventTensorDataset train;
  EventTensorDataset test;
};

/// Deterministic per seed (each sample derives its stream from
/// mix_seed(seed, sample index)); 9:1 train/test split within every class.
SyntheticDataset generate_synthetic(const SyntheticTaskSpec& spec);

enum class PerturbationKind { SaltPepper, Poisson, FrameLoss };

const char* perturbation_name(PerturbationKind kind);
PerturbationKind perturbation_from_name(const std::string& name);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::SaltPepper;
  int rho = 0;
  double lambda0 = 0.01;  // poisson base rate
  std::uint64_t seed = 0;

  void validate() const;
};

/// Repaints a rho*0.02 fraction of each frame's elements, half to 1 and half
/// to 0 (odd counts favor salt). Throws RhoTooLargeError past fraction 1.
Tensor apply_salt_pepper(const Tensor& x, int rho, std::uint64_t seed);

/// ORs Poisson(rho*lambda0) spikes, clipped to {0,1}, onto the input.
Tensor apply_poisson_noise(const Tensor& x, int rho, std::uint64_t seed,
                           double lambda0 = 0.01);

/// Zeroes each frame independently with probability rho*0.05; the sequence
/// keeps its length. Throws RhoTooLargeError past probability 1.
Tensor apply_frame_loss(const Tensor& x, int rho, std::uint64_t seed);

Tensor apply_perturbation(const Tensor& x, const PerturbationSpec& spec);

/// Applies the perturbation to every sample with per-sample seeds derived
/// via mix_seed(spec.seed, sample index).
EventTensorDataset perturb_dataset(const EventTensorDataset& dataset,
                                   const PerturbationSpec& spec);

/// Binary event file, little-endian: magic "EVTS", version u32, N,T,C,H,W
/// u32, labels u16[N], then N*T*C*H*W spike bytes. Bit-exact round trip.
void save_events(const std::string& path, const EventTensorDataset& dataset);
EventTensorDataset load_events(const std::string& path);

}  // namespace cognisnn
