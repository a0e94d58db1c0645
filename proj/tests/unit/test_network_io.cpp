#include <gtest/gtest.h>

#include "gossipfield/error.hpp"
#include "gossipfield/network_io.hpp"

using namespace gossipfield;
using nlohmann::json;

TEST(NetworkJson, GeneralForm) {
  const auto spec = json::parse(R"({
    "nodes": ["a", "b", "s0", "s1"],
    "stubborn": {"s0": 0.0, "s1": 1.0},
    "edges": [
      {"from": "a", "to": "s0", "rate": 1.0, "trust": 0.5},
      {"from": "a", "to": "b", "rate": 2.0},
      {"from": "b", "to": "a", "rate": 1.0},
      {"from": "b", "to": "s1", "rate": 1.0, "trust": 0.25}
    ]})");
  const auto net = network_from_json(spec);
  EXPECT_EQ(net.size(), 4u);
  EXPECT_TRUE(net.is_stubborn(net.id("s1")));
  EXPECT_DOUBLE_EQ(net.belief(net.id("s1")), 1.0);
  EXPECT_FALSE(net.unit_trust());
  EXPECT_DOUBLE_EQ(net.min_trust(), 0.25);
  EXPECT_DOUBLE_EQ(net.out_rate(net.id("a")), 3.0);
}

TEST(NetworkJson, RoundTrip) {
  const auto spec = json::parse(R"({
    "stubborn": {"x": -1.5, "y": 2},
    "edges": [
      {"from": 1, "to": "x", "rate": 0.5, "trust": 0.3},
      {"from": 1, "to": 2, "rate": 1.0},
      {"from": 2, "to": 1, "rate": 1.0},
      {"from": 2, "to": "y", "rate": 4.0}
    ]})");
  const auto net = network_from_json(spec);
  const auto again = network_from_json(network_to_json(net));
  EXPECT_EQ(network_to_json(again), network_to_json(net));
  EXPECT_TRUE(net.find("1").has_value());
}

TEST(NetworkJson, CanonicalShorthand) {
  const auto spec = json::parse(R"({
    "undirected_edges": [[0, 1], [1, 2], [2, 3]],
    "stubborn": {"0": 0.0, "3": 1.0},
    "trust": 0.5})");
  const auto net = network_from_json(spec);
  const auto a = net.id("1");
  ASSERT_EQ(net.out_edges(a).size(), 2u);
  for (const auto& e : net.out_edges(a)) {
    EXPECT_DOUBLE_EQ(e.rate, 0.5);
    EXPECT_DOUBLE_EQ(e.trust, 0.5);
  }
}

TEST(NetworkJson, Rejections) {
  const auto bad = [](const char* text) {
    try {
      network_from_json(json::parse(text));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(bad(R"([1, 2])"), ErrorCode::kNetworkMalformed);
  EXPECT_EQ(bad(R"({"stubborn": {}})"), ErrorCode::kNetworkMalformed);
  EXPECT_EQ(bad(R"({"nodes": ["a"], "stubborn": {"s": 0}, "edges": [{"from": "a", "to": "s", "rate": 1}]})"),
            ErrorCode::kNetworkMalformed);
  EXPECT_EQ(bad(R"({"stubborn": {"s": 0}, "edges": [{"from": "a", "to": "s", "rate": -1}]})"),
            ErrorCode::kNetworkMalformed);
  EXPECT_EQ(bad(R"({"stubborn": {"s": 0}, "edges": [{"from": "a", "to": "s"}]})"), ErrorCode::kNetworkMalformed);
  EXPECT_EQ(bad(R"({"undirected_edges": [[0, 0]], "stubborn": {"0": 1}})"), ErrorCode::kNetworkMalformed);
  EXPECT_EQ(bad(R"({"undirected_edges": [[0, 1], [2, 3]], "stubborn": {"0": 1}})"), ErrorCode::kNetworkDisconnected);
  EXPECT_EQ(bad(R"({"stubborn": {"s": 0}, "edges": [{"from": "a", "to": "b", "rate": 1}]})"),
            ErrorCode::kNetworkUninfluenced);
}
