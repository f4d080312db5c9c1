#pragma once

#include <memory>
#include <string>
#include <vector>

#include "modeconnect/flow.hpp"
#include "modeconnect/path.hpp"
#include "modeconnect/wa.hpp"

namespace mc {

/// Shared inputs for building connection paths by method name.
struct ConnectContext {
  /// Adjustment dataset for the weight-adjustment methods (typically the
  /// training split).
  const Dataset* adjust_data = nullptr;
  WaConfig wa;
  /// Trained connection model for the rnvp-* methods.
  std::shared_ptr<const CouplingFlow> flow;
};

/// Methods accepted by build_connection (and the connect CLI).
const std::vector<std::string>& connection_method_names();

/// Builds the path for a named method:
///   linear | arc                   closed-form connections
///   rnvp-flow | rnvp-bijection     generalized arc through ctx.flow
///   ot                             transport + swap stage (one-hidden)
///   linear-wa | arc-wa | ot-wa     weight adjustment variants
///   linear-bfly | arc-bfly | ot-bfly  butterfly variants (multilayer)
/// Throws InvalidArgument for unknown names or missing context.
ConnectionPath build_connection(const std::string& method, const WeightVector& a, const WeightVector& b,
                                const ConnectContext& ctx);

}  // namespace mc
