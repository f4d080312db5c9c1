#pragma once

#include <string>

#include "modeconnect/dataset.hpp"
#include "modeconnect/ot.hpp"
#include "modeconnect/path.hpp"

namespace mc {

struct WaConfig {
  int breakpoints = 16;   // t values where the next layer is re-solved
  double rcond = 1e-10;   // pseudo-inverse tolerance
  int adjust_cap = 4096;  // max feature columns used for adjustment
};

/// First-layer connector used under weight adjustment. Rows of the
/// weight matrix (bias entry included) are treated as samples.
enum class BaseConnector { Linear, Arc, Ot };

enum class MultilayerMethod { LinearWa, ArcWa, OtWa, LinearButterfly, ArcButterfly, OtButterfly };

const char* to_string(BaseConnector b);
const char* to_string(MultilayerMethod m);

/// W_next_a * x_prev_a * pinv(x_prev_b): re-solves the next layer so the
/// subnetwork output on x_prev_b matches the original output on
/// x_prev_a.
Matrix adjust_layer(const Matrix& w_next_a, const Matrix& x_prev_a, const Matrix& x_prev_b, double rcond = 1e-10);

/// Deterministic column subsample (evenly strided) used to cap
/// pseudo-inverse sizes.
Matrix subsample_columns(const Matrix& x, int cap);

/// One-hidden weight adjustment: the first layer follows the base
/// connector while the second is re-solved against endpoint A's logits
/// at each breakpoint. Three legs: a straight move onto the solved
/// surface, the breakpoint polyline, and a straight move back to B's
/// second layer.
ConnectionPath wa_connect_one_hidden(const WeightVector& a, const WeightVector& b, BaseConnector base,
                                     const Dataset& adjust_data, const WaConfig& cfg = {});

/// Hybrid point on the multilayer path: B's layers below k, the adjusted
/// layer k, A's layers above.
struct IntermediatePoint {
  WeightVector theta;
  int layer = 0;
};

/// Builds Theta_k^{AB} with W_k^{AB} = W_k^A X_{k-1}^A pinv(X_{k-1}^B),
/// where X_j^M are model M's layer-j activations (constant feature row
/// included) on `features`. Requires 2 <= k <= L.
IntermediatePoint build_intermediate(const WeightVector& a, const WeightVector& b, int k, const Matrix& features,
                                     double rcond = 1e-10);

/// Layer-wise multilayer connection through the intermediate points
/// Theta_2^{AB}, ..., each inner leg connecting a two-layer subnetwork
/// with the chosen method. WA variants re-solve layer k+1 per breakpoint
/// and finish with a linear last-layer leg (L legs total); butterfly
/// variants connect subnetwork particles directly and skip Theta_L^{AB}
/// (L-1 legs).
ConnectionPath wa_connect_multilayer(const WeightVector& a, const WeightVector& b, MultilayerMethod method,
                                     const Dataset& adjust_data, const WaConfig& cfg = {});

}  // namespace mc
