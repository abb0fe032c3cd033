#include "medmesh/error.hpp"

namespace medmesh {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::TargetNotBelowCurrent: return "TargetNotBelowCurrent";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::NonTriangleFace: return "NonTriangleFace";
    case ErrorKind::VertexIndexOutOfRange: return "VertexIndexOutOfRange";
    case ErrorKind::EmptyMesh: return "EmptyMesh";
    case ErrorKind::NonManifoldEdge: return "NonManifoldEdge";
    case ErrorKind::DegenerateFace: return "DegenerateFace";
    case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptySource: return "EmptySource";
    case ErrorKind::EmptyPointSet: return "EmptyPointSet";
    case ErrorKind::NonFinitePoint: return "NonFinitePoint";
    case ErrorKind::SpecInfeasible: return "SpecInfeasible";
    case ErrorKind::ChannelMismatch: return "ChannelMismatch";
    case ErrorKind::EdgeCountMismatch: return "EdgeCountMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::HistoryMismatch: return "HistoryMismatch";
    case ErrorKind::PoolTargetUnreachable: return "PoolTargetUnreachable";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorKind::DegenerateAfterAugment: return "DegenerateAfterAugment";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::ConfigError:
    case ErrorKind::TargetNotBelowCurrent:
      return ErrorCategory::Config;
    case ErrorKind::MissingFile:
    case ErrorKind::IoError:
    case ErrorKind::NonTriangleFace:
    case ErrorKind::VertexIndexOutOfRange:
    case ErrorKind::EmptyMesh:
    case ErrorKind::NonManifoldEdge:
    case ErrorKind::DegenerateFace:
    case ErrorKind::DegenerateGeometry:
    case ErrorKind::LabelOutOfRange:
    case ErrorKind::LengthMismatch:
    case ErrorKind::EmptySource:
    case ErrorKind::EmptyPointSet:
    case ErrorKind::NonFinitePoint:
    case ErrorKind::SpecInfeasible:
    case ErrorKind::EdgeCountMismatch:
      return ErrorCategory::Data;
    default:
      return ErrorCategory::Runtime;
  }
}

}  // namespace medmesh
