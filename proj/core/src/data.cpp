#include "cognisnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "cognisnn/errors.hpp"

namespace cognisnn {

namespace {

constexpr std::uint32_t kEventVersion = 1;
constexpr double kSaltPepperScale = 0.02;
constexpr double kFrameLossScale = 0.05;

std::string shape_text(const std::vector<int>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

void require_event_tensor(const Tensor& x, const char* what) {
  if (!x.defined() || x.rank() != 4)
    throw ShapeMismatchError(std::string(what) +
                             " expects a (T, C, H, W) event tensor, got " +
                             (x.defined() ? shape_text(x.shape()) : "nothing"));
}

void require_nonnegative_rho(int rho, const char* what) {
  if (rho < 0)
    throw InvalidSpecError(std::string(what) + ": rho must be >= 0, got " +
                           std::to_string(rho));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

bool read_u32(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) |
      (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

bool read_u16(std::istream& in, std::uint16_t& v) {
  unsigned char b[2];
  if (!in.read(reinterpret_cast<char*>(b), 2)) return false;
  v = static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  return true;
}

// Pattern geometry. Every class is a distinct spatio-temporal trajectory so
// a classifier must read several frames to separate late-diverging pairs.
bool in_foreground(const SyntheticTaskSpec& spec, int cls, int t, int h,
                   int w) {
  switch (spec.family) {
    case PatternFamily::MovingBar: {
      int bar_width = std::max(1, spec.width / 8);
      int start = cls * spec.width / spec.class_count;
      int col = (start + t) % spec.width;
      return (w - col + spec.width) % spec.width < bar_width;
    }
    case PatternFamily::Rotation: {
      // Classes 0-3 start in each quadrant and advance clockwise; 4-7 share
      // the start quadrants but advance counter-clockwise.
      int dir = cls < 4 ? 1 : -1;
      int q = ((cls % 4 + dir * t) % 4 + 4) % 4;
      bool top = h < spec.height / 2;
      bool left = w < spec.width / 2;
      switch (q) {
        case 0: return top && left;
        case 1: return top && !left;
        case 2: return !top && !left;
        default: return !top && left;
      }
    }
    case PatternFamily::Checker:
      return (h + w + cls + t) % 2 == 0;
  }
  return false;
}

int pattern_class_limit(const SyntheticTaskSpec& spec) {
  switch (spec.family) {
    case PatternFamily::MovingBar: return spec.width;
    case PatternFamily::Rotation: return 8;
    case PatternFamily::Checker: return 2;
  }
  return 0;
}

}  // namespace

void EventTensorDataset::validate() const {
  if (samples.empty()) throw DataEmptyError("dataset holds no samples");
  if (labels.size() != samples.size())
    throw CorruptFileError("dataset has " + std::to_string(samples.size()) +
                           " samples but " + std::to_string(labels.size()) +
                           " labels");
  const std::vector<int>& shape = samples.front().shape();
  if (shape.size() != 4)
    throw CorruptFileError("samples must be (T, C, H, W), got " +
                           shape_text(shape));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].shape() != shape)
      throw CorruptFileError("sample " + std::to_string(i) + " shape " +
                             shape_text(samples[i].shape()) +
                             " differs from " + shape_text(shape));
    for (double v : samples[i].values())
      if (v != 0.0 && v != 1.0)
        throw CorruptFileError("sample " + std::to_string(i) +
                               " holds a non-binary value");
    if (labels[i] < 0 || labels[i] >= class_count)
      throw LabelOutOfRangeError(
          "label " + std::to_string(labels[i]) + " of sample " +
          std::to_string(i) + " outside [0, " + std::to_string(class_count) +
          ")");
  }
}

std::vector<Tensor> collate_frames(const EventTensorDataset& dataset,
                                   const std::vector<int>& indices) {
  if (dataset.samples.empty()) throw DataEmptyError("dataset holds no samples");
  if (indices.empty()) throw DataEmptyError("empty batch");
  for (int idx : indices)
    if (idx < 0 || idx >= dataset.size())
      throw DataEmptyError("batch index " + std::to_string(idx) +
                           " outside dataset of " +
                           std::to_string(dataset.size()));
  const std::vector<int>& shape = dataset.samples[indices[0]].shape();
  if (shape.size() != 4)
    throw ShapeMismatchError("samples must be (T, C, H, W), got " +
                             shape_text(shape));
  int timesteps = shape[0];
  std::int64_t frame_elems =
      static_cast<std::int64_t>(shape[1]) * shape[2] * shape[3];
  int batch = static_cast<int>(indices.size());
  std::vector<Tensor> frames;
  frames.reserve(static_cast<std::size_t>(timesteps));
  for (int t = 0; t < timesteps; ++t)
    frames.push_back(Tensor::zeros({batch, shape[1], shape[2], shape[3]}));
  for (int n = 0; n < batch; ++n) {
    const Tensor& sample = dataset.samples[indices[static_cast<std::size_t>(n)]];
    if (sample.shape() != shape)
      throw ShapeMismatchError("sample " + std::to_string(indices[n]) +
                               " shape " + shape_text(sample.shape()) +
                               " differs from " + shape_text(shape));
    const std::vector<double>& src = sample.values();
    for (int t = 0; t < timesteps; ++t)
      std::copy(src.begin() + t * frame_elems,
                src.begin() + (t + 1) * frame_elems,
                frames[static_cast<std::size_t>(t)].values().begin() +
                    n * frame_elems);
  }
  return frames;
}

std::vector<int> collate_labels(const EventTensorDataset& dataset,
                                const std::vector<int>& indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (int idx : indices) {
    if (idx < 0 || idx >= dataset.size())
      throw DataEmptyError("batch index " + std::to_string(idx) +
                           " outside dataset of " +
                           std::to_string(dataset.size()));
    out.push_back(dataset.labels[static_cast<std::size_t>(idx)]);
  }
  return out;
}

const char* pattern_name(PatternFamily family) {
  switch (family) {
    case PatternFamily::MovingBar: return "moving-bar";
    case PatternFamily::Rotation: return "rotation";
    case PatternFamily::Checker: return "checker";
  }
  return "unknown";
}

PatternFamily pattern_from_name(const std::string& name) {
  if (name == "moving-bar") return PatternFamily::MovingBar;
  if (name == "rotation") return PatternFamily::Rotation;
  if (name == "checker") return PatternFamily::Checker;
  throw InvalidSpecError("unknown pattern family '" + name + "'");
}

void SyntheticTaskSpec::validate() const {
  if (class_count < 2)
    throw InvalidSpecError("class_count must be >= 2, got " +
                           std::to_string(class_count));
  if (timesteps < 1)
    throw InvalidSpecError("timesteps must be >= 1, got " +
                           std::to_string(timesteps));
  if (channels < 1)
    throw InvalidSpecError("channels must be >= 1, got " +
                           std::to_string(channels));
  if (height < 2 || width < 2)
    throw InvalidSpecError("frames must be at least 2x2, got " +
                           std::to_string(height) + "x" +
                           std::to_string(width));
  if (samples_per_class < 1)
    throw InvalidSpecError("samples_per_class must be >= 1, got " +
                           std::to_string(samples_per_class));
  if (!(spike_prob_bg >= 0.0) || !(spike_prob_fg <= 1.0) ||
      !(spike_prob_bg < spike_prob_fg))
    throw InvalidSpecError("spike probabilities need 0 <= bg < fg <= 1");
  if (class_count > pattern_class_limit(*this))
    throw InvalidSpecError(std::string(pattern_name(family)) +
                           " patterns support at most " +
                           std::to_string(pattern_class_limit(*this)) +
                           " classes, got " + std::to_string(class_count));
}

SyntheticDataset generate_synthetic(const SyntheticTaskSpec& spec) {
  spec.validate();
  int test_per_class = spec.samples_per_class / 10;
  if (test_per_class == 0 && spec.samples_per_class >= 2) test_per_class = 1;
  int train_per_class = spec.samples_per_class - test_per_class;

  SyntheticDataset out;
  out.train.class_count = spec.class_count;
  out.train.split = "train";
  out.test.class_count = spec.class_count;
  out.test.split = "test";

  for (int cls = 0; cls < spec.class_count; ++cls) {
    for (int i = 0; i < spec.samples_per_class; ++i) {
      std::uint64_t index =
          static_cast<std::uint64_t>(cls) *
              static_cast<std::uint64_t>(spec.samples_per_class) +
          static_cast<std::uint64_t>(i);
      Rng rng(mix_seed(spec.seed, index));
      Tensor sample = Tensor::zeros(
          {spec.timesteps, spec.channels, spec.height, spec.width});
      std::vector<double>& v = sample.values();
      std::int64_t pos = 0;
      for (int t = 0; t < spec.timesteps; ++t)
        for (int c = 0; c < spec.channels; ++c)
          for (int h = 0; h < spec.height; ++h)
            for (int w = 0; w < spec.width; ++w) {
              double p = in_foreground(spec, cls, t, h, w) ? spec.spike_prob_fg
                                                           : spec.spike_prob_bg;
              v[pos++] = rng.bernoulli(p) ? 1.0 : 0.0;
            }
      EventTensorDataset& dest = i < train_per_class ? out.train : out.test;
      dest.samples.push_back(sample);
      dest.labels.push_back(cls);
    }
  }
  return out;
}

const char* perturbation_name(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::SaltPepper: return "salt-pepper";
    case PerturbationKind::Poisson: return "poisson";
    case PerturbationKind::FrameLoss: return "frame-loss";
  }
  return "unknown";
}

PerturbationKind perturbation_from_name(const std::string& name) {
  if (name == "salt-pepper") return PerturbationKind::SaltPepper;
  if (name == "poisson") return PerturbationKind::Poisson;
  if (name == "frame-loss") return PerturbationKind::FrameLoss;
  throw InvalidSpecError("unknown perturbation '" + name + "'");
}

void PerturbationSpec::validate() const {
  require_nonnegative_rho(rho, perturbation_name(kind));
  if (!(lambda0 > 0.0))
    throw InvalidSpecError("poisson base rate must be positive, got " +
                           std::to_string(lambda0));
}

Tensor apply_salt_pepper(const Tensor& x, int rho, std::uint64_t seed) {
  require_event_tensor(x, "salt-pepper");
  require_nonnegative_rho(rho, "salt-pepper");
  double fraction = rho * kSaltPepperScale;
  if (fraction > 1.0)
    throw RhoTooLargeError("salt-pepper fraction rho*0.02 = " +
                           std::to_string(fraction) + " exceeds 1");
  const std::vector<int>& shape = x.shape();
  std::int64_t frame_elems =
      static_cast<std::int64_t>(shape[1]) * shape[2] * shape[3];
  std::int64_t noisy = std::llround(fraction * static_cast<double>(frame_elems));
  Tensor out = Tensor::from(shape, x.values());
  if (noisy == 0) return out;

  Rng rng(seed);
  std::vector<std::int64_t> positions(static_cast<std::size_t>(frame_elems));
  std::int64_t salt = (noisy + 1) / 2;  // odd budgets favor salt
  for (int t = 0; t < shape[0]; ++t) {
    std::iota(positions.begin(), positions.end(), std::int64_t{0});
    rng.shuffle(positions);
    std::int64_t base = t * frame_elems;
    for (std::int64_t i = 0; i < noisy; ++i)
      out.values()[base + positions[static_cast<std::size_t>(i)]] =
          i < salt ? 1.0 : 0.0;
  }
  return out;
}

Tensor apply_poisson_noise(const Tensor& x, int rho, std::uint64_t seed,
                           double lambda0) {
  require_event_tensor(x, "poisson noise");
  require_nonnegative_rho(rho, "poisson noise");
  if (!(lambda0 > 0.0))
    throw InvalidSpecError("poisson base rate must be positive, got " +
                           std::to_string(lambda0));
  Tensor out = Tensor::from(x.shape(), x.values());
  double lambda = rho * lambda0;
  Rng rng(seed);
  std::vector<double>& v = out.values();
  for (double& e : v)
    if (rng.poisson(lambda) > 0) e = 1.0;  // OR with the clipped noise
  return out;
}

Tensor apply_frame_loss(const Tensor& x, int rho, std::uint64_t seed) {
  require_event_tensor(x, "frame loss");
  require_nonnegative_rho(rho, "frame loss");
  double drop = rho * kFrameLossScale;
  if (drop > 1.0)
    throw RhoTooLargeError("frame-loss probability rho*0.05 = " +
                           std::to_string(drop) + " exceeds 1");
  const std::vector<int>& shape = x.shape();
  std::int64_t frame_elems =
      static_cast<std::int64_t>(shape[1]) * shape[2] * shape[3];
  Tensor out = Tensor::from(shape, x.values());
  Rng rng(seed);
  for (int t = 0; t < shape[0]; ++t)
    if (rng.bernoulli(drop))
      std::fill_n(out.values().begin() + t * frame_elems, frame_elems, 0.0);
  return out;
}

Tensor apply_perturbation(const Tensor& x, const PerturbationSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case PerturbationKind::SaltPepper:
      return apply_salt_pepper(x, spec.rho, spec.seed);
    case PerturbationKind::Poisson:
      return apply_poisson_noise(x, spec.rho, spec.seed, spec.lambda0);
    case PerturbationKind::FrameLoss:
      return apply_frame_loss(x, spec.rho, spec.seed);
  }
  throw InvalidSpecError("unknown perturbation kind");
}

EventTensorDataset perturb_dataset(const EventTensorDataset& dataset,
                                   const PerturbationSpec& spec) {
  spec.validate();
  EventTensorDataset out;
  out.labels = dataset.labels;
  out.class_count = dataset.class_count;
  out.split = dataset.split;
  out.samples.reserve(dataset.samples.size());
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    PerturbationSpec per = spec;
    per.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(i));
    out.samples.push_back(apply_perturbation(dataset.samples[i], per));
  }
  return out;
}

void save_events(const std::string& path, const EventTensorDataset& dataset) {
  dataset.validate();
  const std::vector<int>& shape = dataset.samples.front().shape();
  for (int label : dataset.labels)
    if (label > 0xffff)
      throw CorruptFileError("label " + std::to_string(label) +
                             " exceeds the event file range");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataEmptyError("cannot open '" + path + "' for writing");
  out.write("EVTS", 4);
  write_u32(out, kEventVersion);
  write_u32(out, static_cast<std::uint32_t>(dataset.samples.size()));
  for (int d : shape) write_u32(out, static_cast<std::uint32_t>(d));
  for (int label : dataset.labels)
    write_u16(out, static_cast<std::uint16_t>(label));
  std::vector<char> bytes;
  bytes.reserve(static_cast<std::size_t>(dataset.samples.front().size()));
  for (const Tensor& sample : dataset.samples) {
    bytes.clear();
    for (double v : sample.values()) bytes.push_back(v != 0.0 ? 1 : 0);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw DataEmptyError("failed writing events to '" + path + "'");
}

EventTensorDataset load_events(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataEmptyError("cannot open event file '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "EVTS", 4) != 0)
    throw BadMagicError("'" + path + "' is not an event file");
  std::uint32_t version = 0;
  if (!read_u32(in, version) || version != kEventVersion)
    throw CorruptFileError("unsupported event file version " +
                           std::to_string(version));
  std::uint32_t dims[5];  // N, T, C, H, W
  for (auto& d : dims)
    if (!read_u32(in, d)) throw CorruptFileError("truncated header in '" + path + "'");
  if (dims[0] == 0) throw DataEmptyError("'" + path + "' holds no samples");
  std::int64_t sample_elems = 1;
  for (int i = 1; i < 5; ++i) {
    if (dims[i] == 0 || dims[i] > (1u << 24))
      throw CorruptFileError("bad dimension in '" + path + "'");
    sample_elems *= dims[i];
  }
  if (sample_elems > (std::int64_t{1} << 31) ||
      static_cast<std::int64_t>(dims[0]) * sample_elems > (std::int64_t{1} << 31))
    throw CorruptFileError("event file dimensions overflow");

  EventTensorDataset dataset;
  dataset.labels.reserve(dims[0]);
  int max_label = -1;
  for (std::uint32_t i = 0; i < dims[0]; ++i) {
    std::uint16_t label = 0;
    if (!read_u16(in, label))
      throw CorruptFileError("truncated labels in '" + path + "'");
    dataset.labels.push_back(label);
    max_label = std::max(max_label, static_cast<int>(label));
  }
  dataset.class_count = max_label + 1;

  std::vector<int> shape = {static_cast<int>(dims[1]), static_cast<int>(dims[2]),
                            static_cast<int>(dims[3]), static_cast<int>(dims[4])};
  std::vector<char> bytes(static_cast<std::size_t>(sample_elems));
  dataset.samples.reserve(dims[0]);
  for (std::uint32_t i = 0; i < dims[0]; ++i) {
    if (!in.read(bytes.data(), static_cast<std::streamsize>(bytes.size())))
      throw CorruptFileError("truncated spikes in '" + path + "'");
    std::vector<double> values(static_cast<std::size_t>(sample_elems));
    for (std::size_t j = 0; j < bytes.size(); ++j) {
      unsigned char b = static_cast<unsigned char>(bytes[j]);
      if (b > 1)
        throw CorruptFileError("spike byte " + std::to_string(int(b)) +
                               " in '" + path + "' is not 0/1");
      values[j] = b;
    }
    dataset.samples.push_back(Tensor::from(shape, std::move(values)));
  }
  if (in.peek() != EOF)
    throw CorruptFileError("trailing bytes in '" + path + "'");
  return dataset;
}

}  // namespace cognisnn
