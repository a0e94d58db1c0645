#pragma once

#include <stdexcept>
#include <string>

namespace gossipfield {

/// Module-qualified failure categories. The string form ("network.disconnected",
/// "moments.not_converged", ...) is what the CLI writes into error records.
enum class ErrorCode {
  kInvalidArgument,
  kNetworkMalformed,
  kNetworkDisconnected,
  kNetworkUninfluenced,
  kNetworkIrreversible,
  kNetworkReducible,
  kGeneratorInvalidRecipe,
  kGeneratorNotConnected,
  kGeneratorInvalidPlacement,
  kSimulateInvalidState,
  kSimulateEventCap,
  kSimulateTrustNotOne,
  kMomentsSupportTooLarge,
  kMomentsNotConverged,
  kMomentsInconsistent,
  kMomentsStepUnderflow,
  kOracleInvalidInput,
  kFluidityStateCap,
  kFluidityEigenFailure,
  kFluidityNotApplicable,
  kCliInvalidSpec,
  kCliIo,
  kCliSchemaMismatch,
  kCliCheckFailed,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  const char* code_name() const noexcept { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace gossipfield
