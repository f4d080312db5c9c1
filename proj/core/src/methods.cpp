#include "modeconnect/methods.hpp"

#include "modeconnect/direct.hpp"
#include "modeconnect/errors.hpp"
#include "modeconnect/flow_train.hpp"
#include "modeconnect/ot.hpp"

namespace mc {

const std::vector<std::string>& connection_method_names() {
  static const std::vector<std::string> names = {"linear",    "arc",    "rnvp-flow", "rnvp-bijection",
                                                 "ot",        "linear-wa", "arc-wa", "ot-wa",
                                                 "linear-bfly", "arc-bfly", "ot-bfly"};
  return names;
}

namespace {

const Dataset& require_adjust_data(const std::string& method, const ConnectContext& ctx) {
  if (!ctx.adjust_data)
    throw InvalidArgument("method '" + method + "' needs an adjustment dataset in the connect context");
  return *ctx.adjust_data;
}

MultilayerMethod multilayer_method(const std::string& name) {
  if (name == "linear-wa") return MultilayerMethod::LinearWa;
  if (name == "arc-wa") return MultilayerMethod::ArcWa;
  if (name == "ot-wa") return MultilayerMethod::OtWa;
  if (name == "linear-bfly") return MultilayerMethod::LinearButterfly;
  if (name == "arc-bfly") return MultilayerMethod::ArcButterfly;
  return MultilayerMethod::OtButterfly;
}

BaseConnector base_of(const std::string& name) {
  if (name.rfind("linear", 0) == 0) return BaseConnector::Linear;
  if (name.rfind("arc", 0) == 0) return BaseConnector::Arc;
  return BaseConnector::Ot;
}

}  // namespace

ConnectionPath build_connection(const std::string& method, const WeightVector& a, const WeightVector& b,
                                const ConnectContext& ctx) {
  if (!a.same_architecture(b)) throw InvalidArgument("build_connection: endpoint architectures differ");

  if (method == "linear") return linear_connect(a, b);
  if (method == "arc") return arc_connect(a, b);

  if (method == "rnvp-flow" || method == "rnvp-bijection") {
    if (!ctx.flow) throw InvalidArgument("method '" + method + "' needs a trained flow in the connect context");
    ConnectionPath path = connect_with_flow(a, b, ctx.flow);
    path.method = method;
    return path;
  }

  if (method == "ot") {
    if (a.num_layers() != 2)
      throw InvalidArgument("method 'ot' connects one-hidden networks; use ot-wa or ot-bfly for deeper nets");
    return ot_connect(a, b, 1);
  }

  if (method == "linear-wa" || method == "arc-wa" || method == "ot-wa") {
    const Dataset& data = require_adjust_data(method, ctx);
    if (a.num_layers() == 2) return wa_connect_one_hidden(a, b, base_of(method), data, ctx.wa);
    return wa_connect_multilayer(a, b, multilayer_method(method), data, ctx.wa);
  }

  if (method == "linear-bfly" || method == "arc-bfly" || method == "ot-bfly") {
    const Dataset& data = require_adjust_data(method, ctx);
    return wa_connect_multilayer(a, b, multilayer_method(method), data, ctx.wa);
  }

  throw InvalidArgument("unknown connection method '" + method + "'");
}

}  // namespace mc
