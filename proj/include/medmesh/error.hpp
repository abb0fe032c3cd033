#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace medmesh {

enum class ErrorKind {
  // configuration
  InvalidConfig,
  ConfigError,
  TargetNotBelowCurrent,
  // data / input
  MissingFile,
  IoError,
  NonTriangleFace,
  VertexIndexOutOfRange,
  EmptyMesh,
  NonManifoldEdge,
  DegenerateFace,
  DegenerateGeometry,
  LabelOutOfRange,
  LengthMismatch,
  EmptySource,
  EmptyPointSet,
  NonFinitePoint,
  SpecInfeasible,
  // shape contracts
  ChannelMismatch,
  EdgeCountMismatch,
  ShapeMismatch,
  DimensionMismatch,
  HistoryMismatch,
  // runtime / numeric
  PoolTargetUnreachable,
  EmptyMask,
  EmptyEvaluation,
  DegenerateAfterAugment,
  NonFiniteLoss,
};

std::string_view to_string(ErrorKind kind);

/// Broad failure class; the CLI maps these onto exit codes 1, 2 and 3.
enum class ErrorCategory { Config = 1, Data = 2, Runtime = 3 };

ErrorCategory category_of(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_of(kind_); }

 private:
  ErrorKind kind_;
};

/// Raised by mesh_pool when the collapse queue runs dry before the target is met.
class PoolTargetUnreachable : public Error {
 public:
  PoolTargetUnreachable(std::size_t target, std::size_t achieved)
      : Error(ErrorKind::PoolTargetUnreachable,
              "target " + std::to_string(target) + " edges, achieved " + std::to_string(achieved)),
        target_(target),
        achieved_(achieved) {}

  std::size_t target() const noexcept { return target_; }
  std::size_t achieved() const noexcept { return achieved_; }

 private:
  std::size_t target_;
  std::size_t achieved_;
};

}  // namespace medmesh
