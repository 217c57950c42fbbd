#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "autorec/core.h"

using namespace autorec;
using namespace std::chrono_literals;

TEST(ClassifyMode, QueueEmptinessDecidesMode) {
  EXPECT_EQ(classify_mode(0), SenderMode::kOff);
  EXPECT_EQ(classify_mode(1), SenderMode::kOn);
  EXPECT_EQ(classify_mode(37), SenderMode::kOn);
}

TEST(UpdateSrtt, FirstSampleInitializes) {
  const auto e = update_srtt(std::nullopt, 60ms);
  EXPECT_EQ(e.srtt, Duration(60ms));
  EXPECT_EQ(e.rttvar, Duration(30ms));
}

TEST(UpdateSrtt, HandEvaluatedRecurrences) {
  auto e = update_srtt(RttEstimate{60ms, 30ms}, 60ms);
  EXPECT_EQ(e.srtt, Duration(60ms));
  EXPECT_EQ(e.rttvar, Duration(22500us));

  e = update_srtt(RttEstimate{100ms, 10ms}, 60ms);
  EXPECT_EQ(e.srtt, Duration(95ms));
  EXPECT_EQ(e.rttvar, Duration(17500us));
}

TEST(UpdateSrtt, RejectsNonPositiveSample) {
  EXPECT_THROW(update_srtt(std::nullopt, 0us), std::invalid_argument);
  EXPECT_THROW(update_srtt(RttEstimate{60ms, 30ms}, -5us), std::invalid_argument);
}

TEST(UpdateSrtt, ConstantSamplesConverge) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Duration start{std::uniform_int_distribution<std::int64_t>(1, 2'000'000)(gen)};
    const Duration sample{std::uniform_int_distribution<std::int64_t>(1, 2'000'000)(gen)};
    RttEstimate e = update_srtt(std::nullopt, start);
    for (int i = 0; i < 400; ++i) e = update_srtt(e, sample);
    EXPECT_LE(std::abs((e.srtt - sample).count()), 8) << "start " << start.count() << " sample " << sample.count();
    EXPECT_LE(e.rttvar.count(), 8);
  }
}

TEST(RoundToUs, HalfUp) {
  EXPECT_EQ(round_to_us(Millis(1.0)), Duration(1000us));
  EXPECT_EQ(round_to_us(Millis(0.0005)), Duration(1us));
  EXPECT_EQ(round_to_us(Millis(0.0004)), Duration(0us));
  EXPECT_EQ(round_to_us(Millis(63.1578947)), Duration(63158us));
}

TEST(SegmentFrame, FourMbpsSixtyFpsFrame) {
  const auto units = segment_frame(FrameId{3}, 1000, 10, 8333);
  ASSERT_EQ(units.size(), 7U);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(units[i].payload_bytes, 1300U);
  EXPECT_EQ(units[6].payload_bytes, 533U);
  EXPECT_EQ(units[0].id.value, 1000U);
  EXPECT_EQ(units[1].id.value, 2300U);
  EXPECT_EQ(units[6].seq, 16U);
  for (const auto& u : units) EXPECT_EQ(u.frame.value, 3U);
}

TEST(SegmentFrame, ExactMultipleHasNoRemainder) {
  const auto units = segment_frame(FrameId{0}, 0, 0, 2600);
  ASSERT_EQ(units.size(), 2U);
  EXPECT_EQ(units[1].payload_bytes, 1300U);
  EXPECT_TRUE(segment_frame(FrameId{0}, 0, 0, 0).empty());
}

// Oracle: walk the byte range one byte at a time.
TEST(SegmentFrame, MatchesBytewiseOracle) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::uint64_t bytes = std::uniform_int_distribution<std::uint64_t>(0, 40000)(gen);
    const std::uint32_t mtu = std::uniform_int_distribution<std::uint32_t>(1, 2000)(gen);
    const std::uint64_t offset = std::uniform_int_distribution<std::uint64_t>(0, 1 << 30)(gen);
    const auto units = segment_frame(FrameId{1}, offset, 5, bytes, mtu);

    std::vector<std::uint32_t> expect;
    std::uint32_t fill = 0;
    for (std::uint64_t b = 0; b < bytes; ++b) {
      if (fill == mtu) {
        expect.push_back(fill);
        fill = 0;
      }
      ++fill;
    }
    if (fill > 0) expect.push_back(fill);

    ASSERT_EQ(units.size(), expect.size());
    std::uint64_t at = offset;
    for (std::size_t i = 0; i < units.size(); ++i) {
      EXPECT_EQ(units[i].payload_bytes, expect[i]);
      EXPECT_EQ(units[i].id.value, at);
      EXPECT_EQ(units[i].seq, 5U + i);
      at += units[i].payload_bytes;
    }
  }
}
