#pragma once

#include <functional>
#include <string>
#include <vector>

#include "test_support.hpp"

namespace gossipfield::testing {

/// A named invariant checked on one corpus network. The check returns one
/// message per violation; an empty list means the network passes.
struct NetworkProperty {
  std::string name;
  std::function<std::vector<std::string>(const CorpusEntry&)> check;
};

/// A named invariant that does not depend on a particular network.
struct GlobalProperty {
  std::string name;
  std::function<std::vector<std::string>()> check;
};

std::vector<NetworkProperty> network_properties();
std::vector<GlobalProperty> global_properties();

}  // namespace gossipfield::testing
