#include <gtest/gtest.h>

#include <vector>

#include "mpdse/calibration.hpp"
#include "mpdse/error.hpp"
#include "mpdse/pe.hpp"
#include "oracles.hpp"

using namespace mpdse;

namespace {

PeConfig make(Processing p, Consolidation c, Scaling s, int k, int n = 8) {
  return PeConfig{PeStyle{p, c, s, k, n}, 30};
}

const PeConfig bp_st_1d_k2 = make(Processing::bp, Consolidation::st, Scaling::one_d, 2);

}  // namespace

TEST(SliceSigned, Examples) {
  EXPECT_EQ(slice_signed(-3, 4, 2).slices, (std::vector<int>{1, -1}));
  EXPECT_EQ(slice_signed(93, 8, 4).slices, (std::vector<int>{13, 5}));
  EXPECT_EQ(slice_signed(-128, 8, 2).slices, (std::vector<int>{0, 0, 0, -2}));
}

TEST(SliceSigned, TopSliceSignExtendedWhenKDoesNotDivide) {
  // 3-bit -3 = 0b101 in 2-bit slices: low 0b01, top 0b1 sign-extended to -1.
  const auto s = slice_signed(-3, 3, 2);
  EXPECT_EQ(s.slices, (std::vector<int>{1, -1}));
  EXPECT_EQ(s.reconstruct(), -3);
  // w_q < k: one slice holding the whole value.
  EXPECT_EQ(slice_signed(-1, 1, 4).slices, (std::vector<int>{-1}));
}

TEST(SliceSigned, OutOfRangeIsRejected) {
  EXPECT_THROW(slice_signed(8, 4, 2), ValidationError);
  EXPECT_THROW(slice_signed(-9, 4, 2), ValidationError);
  EXPECT_THROW(slice_signed(0, 4, 0), ValidationError);
}

TEST(SliceUnsigned, Radix) {
  EXPECT_EQ(slice_unsigned(0xB4, 8, 2), (std::vector<int>{0, 1, 3, 2}));
  EXPECT_EQ(slice_unsigned(0xB4, 8, 4), (std::vector<int>{4, 11}));
}

TEST(PeMac, BitParallelPackedIssue) {
  const std::vector<std::int64_t> a{200, 3, 255, 1};
  const std::vector<std::int64_t> w{1, -2, 1, -1};
  const auto r = pe_mac(bp_st_1d_k2, a, w, 2);
  EXPECT_EQ(r.result, oracle::dot(a, w));
  EXPECT_EQ(r.result, 448);
  EXPECT_EQ(r.cycles, 1);
}

TEST(PeMac, BitSerialSignBit) {
  for (auto c : {Consolidation::sa, Consolidation::st}) {
    const auto cfg = make(Processing::bs, c, Scaling::one_d, 1);
    const std::int64_t a[] = {5};
    const std::int64_t w[] = {-2};
    const auto r = pe_mac(cfg, a, w, 2);
    EXPECT_EQ(r.result, -10);
    EXPECT_EQ(r.cycles, 2);
  }
}

TEST(PeMac, ZeroActivationAnnihilates) {
  for (const auto& style : taxonomy()) {
    const PeConfig cfg{style, 30};
    for (int w_q : {1, 2, 4, 8}) {
      const auto lanes = static_cast<std::size_t>(pairs_per_issue(cfg, w_q));
      const std::vector<std::int64_t> a(lanes, 0);
      const std::vector<std::int64_t> w(lanes, -(std::int64_t{1} << (w_q - 1)));
      EXPECT_EQ(pe_mac(cfg, a, w, w_q).result, 0) << style.key() << " w" << w_q;
    }
  }
}

TEST(PeMac, TwoDimensionalFourBitActivations) {
  const auto cfg = make(Processing::bp, Consolidation::st, Scaling::two_d, 2, 4);
  EXPECT_EQ(cfg.ppg_count(), 4);
  const std::int64_t a[] = {9};
  const std::int64_t w[] = {-3};
  EXPECT_EQ(pe_mac(cfg, a, w, 4).result, -27);
}

TEST(PeMac, OperandRangeIsChecked) {
  const std::int64_t big_a[] = {256};
  const std::int64_t ok_w[] = {1};
  EXPECT_THROW(pe_mac(bp_st_1d_k2, big_a, ok_w, 8), ValidationError);
  const std::int64_t ok_a[] = {1};
  const std::int64_t big_w[] = {2};
  EXPECT_THROW(pe_mac(bp_st_1d_k2, ok_a, big_w, 2), ValidationError);
}

TEST(PeMac, TooManyLanesIsRejected) {
  const std::vector<std::int64_t> a(5, 1), w(5, 1);
  EXPECT_THROW(pe_mac(bp_st_1d_k2, a, w, 2), ValidationError);
}

TEST(PeAccumulator, OverflowIsReported) {
  PeConfig cfg = bp_st_1d_k2;
  cfg.accumulator_width = 16;
  PeAccumulator acc(cfg, 8);
  const std::int64_t a[] = {255};
  const std::int64_t w[] = {-128};
  acc.issue(a, w);  // -32640 fits in 16 bits
  EXPECT_THROW(acc.issue(a, w), OverflowError);
}

TEST(PeAccumulator, SumApartKeepsPartialsPerShift) {
  const auto cfg = make(Processing::bp, Consolidation::sa, Scaling::one_d, 2);
  PeAccumulator acc(cfg, 8);
  const std::int64_t a[] = {3};
  const std::int64_t w[] = {93};
  acc.issue(a, w);
  ASSERT_EQ(acc.partials().size(), 4u);
  // 93 = 0b01'01'11'01: partials 3*1, 3*3, 3*1, 3*1.
  EXPECT_EQ(acc.partials(), (std::vector<std::int64_t>{3, 9, 3, 3}));
  EXPECT_EQ(acc.finalize(), 279);
}

TEST(PairsPerIssue, Examples) {
  EXPECT_EQ(pairs_per_issue(bp_st_1d_k2, 2), 4);
  EXPECT_EQ(pairs_per_issue(bp_st_1d_k2, 8), 1);
  const auto k4 = make(Processing::bp, Consolidation::st, Scaling::one_d, 4);
  EXPECT_EQ(pairs_per_issue(k4, 2), 2);
  EXPECT_EQ(pairs_per_issue(make(Processing::bs, Consolidation::st, Scaling::one_d, 2), 2), 1);
}

TEST(PairsPerIssue, ConstantBitWorkForDividingWordLengths) {
  for (int k : {1, 2, 4})
    for (int w_q : {1, 2, 4, 8}) {
      if (k > w_q) continue;
      const auto cfg = make(Processing::bp, Consolidation::st, Scaling::one_d, k);
      EXPECT_EQ(pairs_per_issue(cfg, w_q) * w_q, 8) << "k" << k << " w" << w_q;
    }
}

TEST(CyclesPerIssue, BitSerialIteratesSlices) {
  EXPECT_EQ(cycles_per_issue(bp_st_1d_k2, 8), 1);
  EXPECT_EQ(cycles_per_issue(make(Processing::bs, Consolidation::st, Scaling::one_d, 1), 8), 8);
  EXPECT_EQ(cycles_per_issue(make(Processing::bs, Consolidation::st, Scaling::one_d, 2), 3), 2);
  EXPECT_EQ(cycles_per_issue(make(Processing::bs, Consolidation::sa, Scaling::two_d, 2), 4), 8);
}

TEST(PeStyle, NamesAndParsing) {
  EXPECT_EQ(bp_st_1d_k2.style.name(), "BP-ST-1D");
  EXPECT_EQ(bp_st_1d_k2.style.key(), "BP-ST-1D/k2");
  EXPECT_EQ(parse_style("bs-sa-2d", 4), (PeStyle{Processing::bs, Consolidation::sa,
                                                 Scaling::two_d, 4, 8}));
  EXPECT_THROW(parse_style("bp-xx-1d", 2), ValidationError);
  EXPECT_THROW(parse_style("bp-st-1d", 3), ValidationError);
  EXPECT_EQ(taxonomy().size(), 24u);
}

TEST(PeCost, DefaultFrequencies) {
  const auto& calib = CalibrationTable::defaults();
  EXPECT_DOUBLE_EQ(pe_cost(bp_st_1d_k2, calib).f_mhz, 127.0);
  const auto k4 = make(Processing::bp, Consolidation::st, Scaling::one_d, 4);
  EXPECT_DOUBLE_EQ(pe_cost(k4, calib).f_mhz, 96.0);
}

TEST(PeCost, DefaultEnergyNearMeasuredQuotient) {
  // 47.06 mJ over 4 PPG ops per MAC at the 1.8136e9-MAC ResNet-18 count.
  const double e = pe_cost(bp_st_1d_k2, CalibrationTable::defaults()).energy_pj(8);
  EXPECT_NEAR(e, 47.06e9 / (1813561344.0 * 4), 1e-3);
}

TEST(PeCost, MissingEntryNamesKey) {
  auto calib = CalibrationTable::defaults();
  calib.entries.erase("BP-ST-1D/k2");
  try {
    pe_cost(bp_st_1d_k2, calib);
    FAIL();
  } catch (const CalibrationError& e) {
    EXPECT_EQ(e.key(), "BP-ST-1D/k2");
  }
}

TEST(PeEfficiency, DefinitionScaling) {
  auto calib = CalibrationTable::defaults();
  const double base = pe_efficiency(bp_st_1d_k2, 2, calib);
  calib.entries["BP-ST-1D/k2"].lut_per_pe *= 2;
  EXPECT_DOUBLE_EQ(pe_efficiency(bp_st_1d_k2, 2, calib), base / 2);

  const auto bs = make(Processing::bs, Consolidation::st, Scaling::one_d, 1);
  const auto& e = calib.entry(bs.style);
  const double one_cycle = (8.0 + 8.0) * 1 * e.f_mhz * 1e6 / e.lut_per_pe;
  EXPECT_DOUBLE_EQ(pe_efficiency(bs, 8, calib), one_cycle / 8);
}
