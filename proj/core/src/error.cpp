#include "gossipfield/error.hpp"

namespace gossipfield {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "core.invalid_argument";
    case ErrorCode::kNetworkMalformed: return "network.malformed";
    case ErrorCode::kNetworkDisconnected: return "network.disconnected";
    case ErrorCode::kNetworkUninfluenced: return "network.uninfluenced_agent";
    case ErrorCode::kNetworkIrreversible: return "network.irreversible";
    case ErrorCode::kNetworkReducible: return "network.reducible";
    case ErrorCode::kGeneratorInvalidRecipe: return "generators.invalid_recipe";
    case ErrorCode::kGeneratorNotConnected: return "generators.not_connected";
    case ErrorCode::kGeneratorInvalidPlacement: return "generators.invalid_placement";
    case ErrorCode::kSimulateInvalidState: return "simulate.invalid_state";
    case ErrorCode::kSimulateEventCap: return "simulate.event_cap";
    case ErrorCode::kSimulateTrustNotOne: return "simulate.trust_not_one";
    case ErrorCode::kMomentsSupportTooLarge: return "moments.support_too_large";
    case ErrorCode::kMomentsNotConverged: return "moments.not_converged";
    case ErrorCode::kMomentsInconsistent: return "moments.inconsistent";
    case ErrorCode::kMomentsStepUnderflow: return "moments.step_underflow";
    case ErrorCode::kOracleInvalidInput: return "moments.oracle_invalid_input";
    case ErrorCode::kFluidityStateCap: return "fluidity.state_cap";
    case ErrorCode::kFluidityEigenFailure: return "fluidity.eigen_failure";
    case ErrorCode::kFluidityNotApplicable: return "fluidity.not_applicable";
    case ErrorCode::kCliInvalidSpec: return "cli.invalid_spec";
    case ErrorCode::kCliIo: return "cli.io";
    case ErrorCode::kCliSchemaMismatch: return "cli.schema_mismatch";
    case ErrorCode::kCliCheckFailed: return "cli.check_failed";
  }
  return "unknown";
}

}  // namespace gossipfield
