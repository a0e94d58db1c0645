#include <gtest/gtest.h>

#include "properties.hpp"

namespace gt = gossipfield::testing;

namespace {

const std::vector<gt::CorpusEntry>& shared_corpus() {
  static const auto entries = gt::corpus();
  return entries;
}

class NetworkInvariant : public ::testing::TestWithParam<std::size_t> {};
class GlobalInvariant : public ::testing::TestWithParam<std::size_t> {};

std::string network_name(const ::testing::TestParamInfo<std::size_t>& info) {
  return gt::network_properties()[info.param].name;
}

std::string global_name(const ::testing::TestParamInfo<std::size_t>& info) {
  return gt::global_properties()[info.param].name;
}

}  // namespace

TEST(Corpus, HasTwentyNetworks) {
  EXPECT_EQ(shared_corpus().size(), 20u);
}

TEST_P(NetworkInvariant, HoldsOnCorpus) {
  const auto property = gt::network_properties()[GetParam()];
  for (const auto& entry : shared_corpus()) {
    for (const auto& failure : property.check(entry)) ADD_FAILURE() << entry.name << ": " << failure;
  }
}

TEST_P(GlobalInvariant, Holds) {
  for (const auto& failure : gt::global_properties()[GetParam()].check()) ADD_FAILURE() << failure;
}

INSTANTIATE_TEST_SUITE_P(Properties, NetworkInvariant, ::testing::Range<std::size_t>(0, gt::network_properties().size()),
                         network_name);
INSTANTIATE_TEST_SUITE_P(Generators, GlobalInvariant, ::testing::Range<std::size_t>(0, gt::global_properties().size()),
                         global_name);
