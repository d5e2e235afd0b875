#pragma once

// Seeded random-model generator shared by the property tests and the
// acceptance suite.

#include <string>
#include <vector>

#include "blockflow/model.hpp"
#include "blockflow/util.hpp"

namespace blockflow::testgen {

struct GenOptions {
  size_t min_blocks = 1;
  size_t max_blocks = 6;
  size_t max_connections = 8;
  bool with_params = true;
  bool with_subsystem = false;
  // Small pool so random pairs share types and mappings are non-trivial.
  std::vector<std::string> type_pool = {"Gain", "Scope", "Sum", "Diode", "Resistor",
                                        "Thermal Mass"};
};

inline SystemModel random_model(Rng& rng, const GenOptions& options = {}) {
  SystemModel model;
  const size_t n = options.min_blocks +
                   rng.uniform_int(options.max_blocks - options.min_blocks + 1);
  for (size_t i = 0; i < n; ++i) {
    BlockInstance inst;
    inst.type_name = options.type_pool[rng.uniform_int(options.type_pool.size())];
    if (options.with_params && rng.uniform() < 0.5) {
      inst.set_param("Value", ParamValue::make_number(
                                  static_cast<double>(rng.uniform_int(100)) / 4.0));
    }
    if (options.with_params && rng.uniform() < 0.25) {
      inst.set_param("Mode", ParamValue::make_string(rng.uniform() < 0.5 ? "fast" : "slow"));
    }
    model.add_block("B" + std::to_string(i + 1), std::move(inst));
  }
  const size_t conns = rng.uniform_int(options.max_connections + 1);
  for (size_t c = 0; c < conns; ++c) {
    const auto pick = [&] { return "B" + std::to_string(rng.uniform_int(n) + 1); };
    const auto port = [&]() -> PortId {
      switch (rng.uniform_int(3)) {
        case 0: return PortId::signal(1 + static_cast<int>(rng.uniform_int(3)));
        case 1: return PortId::conserving_left(1 + static_cast<int>(rng.uniform_int(2)));
        default: return PortId::conserving_right(1 + static_cast<int>(rng.uniform_int(2)));
      }
    };
    model.connections.push_back(
        {Endpoint::single({pick(), port()}), Endpoint::single({pick(), port()})});
  }
  if (options.with_subsystem && n >= 2 && rng.uniform() < 0.3) {
    BlockInstance sub;
    sub.type_name = "Subsystem";
    sub.summary = "generated";
    SystemModel inner;
    inner.add_block("Inner", BlockInstance{.type_name = "Gain"});
    sub.port_bindings.emplace_back(PortId::signal(1), PortRef{"Inner", PortId::signal(1)});
    sub.inner = std::make_shared<SystemModel>(std::move(inner));
    model.add_block("Sub" + std::to_string(n + 1), std::move(sub));
  }
  return model;
}

}  // namespace blockflow::testgen
