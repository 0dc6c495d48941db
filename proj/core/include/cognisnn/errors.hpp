#pragma once

#include <stdexcept>
#include <string>

namespace cognisnn {

/// Base class for all library errors. The three category classes below map
/// onto the CLI exit codes (1 usage/config, 2 data, 3 engine).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigFailure : Error {
  using Error::Error;
};
struct DataFailure : Error {
  using Error::Error;
};
struct EngineFailure : Error {
  using Error::Error;
};

// graph-topology
struct InvalidSpecError : ConfigFailure {
  using ConfigFailure::ConfigFailure;
};
struct DegenerateGraphError : EngineFailure {
  using EngineFailure::EngineFailure;
};
struct PathwayExplosionError : EngineFailure {
  using EngineFailure::EngineFailure;
};
struct MismatchedGraphError : EngineFailure {
  using EngineFailure::EngineFailure;
};
struct KOutOfRangeError : ConfigFailure {
  using ConfigFailure::ConfigFailure;
};

// tensor-autograd
struct ShapeMismatchError : EngineFailure {
  using EngineFailure::EngineFailure;
};
struct NonPositiveOutputError : EngineFailure {
  using EngineFailure::EngineFailure;
};
struct IndivisibleDimensionError : EngineFailure {
  using EngineFailure::EngineFailure;
};
struct LabelOutOfRangeError : EngineFailure {
  using EngineFailure::EngineFailure;
};
struct NotScalarLossError : EngineFailure {
  using EngineFailure::EngineFailure;
};

// spiking-core / network-executor
struct IncompatibleDimensionsError : EngineFailure {
  using EngineFailure::EngineFailure;
};
struct NoActiveInputError : EngineFailure {
  using EngineFailure::EngineFailure;
};
struct ConfigError : ConfigFailure {
  using ConfigFailure::ConfigFailure;
};

// training-engines
struct HeadMismatchError : EngineFailure {
  using EngineFailure::EngineFailure;
};
struct EmptySelectionError : EngineFailure {
  using EngineFailure::EngineFailure;
};
struct DataEmptyError : DataFailure {
  using DataFailure::DataFailure;
};

// data-and-perturbation
struct RhoTooLargeError : ConfigFailure {
  using ConfigFailure::ConfigFailure;
};
struct CorruptFileError : DataFailure {
  using DataFailure::DataFailure;
};
struct BadMagicError : DataFailure {
  using DataFailure::DataFailure;
};

}  // namespace cognisnn
