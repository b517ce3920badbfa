#pragma once

#include <stdexcept>
#include <string>

namespace metamorph {

enum class ErrorCode {
  BadDesign,
  DanglingHinge,
  NonAdjacent,
  OpenLoop,
  SelfColliding,
  BadIndex,
  NotOnManifold,
  NoConvergence,
  DrivenOverconstrained,
  CollisionOnPath,
  WrongEndpoint,
  NotLattice,
  LimitExceeded,
  Unreachable,
  UnknownKey,
  EmptyTarget,
  DegenerateMesh,
  EmptyDatabase,
  StaleResult,
  ClosureDrift,
  UnassignedHinge,
  UncoverablePath,
  Parse,
  Io,
};

const char* to_string(ErrorCode c);

// Every engine failure is one of these; `step` carries a path step index
// when the failure happened mid-path, -1 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, int step = -1)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        step_(step) {}
  ErrorCode code() const { return code_; }
  int step() const { return step_; }

 private:
  ErrorCode code_;
  int step_;
};

}  // namespace metamorph
