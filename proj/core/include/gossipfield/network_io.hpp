#pragma once

#include <nlohmann/json.hpp>

#include "gossipfield/network.hpp"

namespace gossipfield {

/// Parses either the general form
///   {"nodes": [...], "stubborn": {"s0": 0.0}, "edges": [{"from", "to", "rate", "trust"}]}
/// or the canonical shorthand
///   {"undirected_edges": [[u, v], ...], "stubborn": {...}, "trust": 0.5}.
/// Node identifiers may be strings or integers; integers are used by their
/// decimal spelling. "trust" on a general edge defaults to 1.
SocialNetwork network_from_json(const nlohmann::json& spec);

/// General form, edges in (from, to) order.
nlohmann::json network_to_json(const SocialNetwork& net);

}  // namespace gossipfield
