#include <gtest/gtest.h>

#include "mpdse/dse.hpp"
#include "mpdse/error.hpp"

using namespace mpdse;

namespace {

PeConfig bp_st_1d(int k) {
  return PeConfig{PeStyle{Processing::bp, Consolidation::st, Scaling::one_d, k, 8}, 30};
}

const CalibrationTable& calib() { return CalibrationTable::defaults(); }

}  // namespace

TEST(PeDse, BpSt1dWinsAtLowWordLengths) {
  const auto candidates = taxonomy();
  const int wqs[] = {1, 2, 4};
  const auto ranking = pe_dse(candidates, wqs, calib());
  for (int w : wqs) EXPECT_EQ(ranking.winner(w).style.name(), "BP-ST-1D") << "w_Q " << w;
  EXPECT_THROW(ranking.winner(8), ValidationError);
}

TEST(PeDse, SingleCandidate) {
  const PeStyle only{Processing::bs, Consolidation::sa, Scaling::two_d, 4, 8};
  const int wqs[] = {2};
  const auto ranking = pe_dse(std::span(&only, 1), wqs, calib());
  ASSERT_EQ(ranking.by_wq.at(2).size(), 1u);
  EXPECT_EQ(ranking.winner(2).style, only);
}

TEST(PeDse, CheaperTwinRanksFirst) {
  auto table = calib();
  // Same costs for both; the SA twin costs twice the LUTs.
  auto st = table.entries.at("BP-ST-1D/k2");
  auto sa = st;
  sa.lut_per_pe *= 2;
  table.entries["BP-SA-1D/k2"] = sa;
  const PeStyle cands[] = {parse_style("BP-SA-1D", 2), parse_style("BP-ST-1D", 2)};
  const int wqs[] = {4};
  EXPECT_EQ(pe_dse(cands, wqs, table).winner(4).style.name(), "BP-ST-1D");
}

TEST(PeDse, EmptyCandidatesRejected) {
  const int wqs[] = {2};
  EXPECT_THROW(pe_dse(std::span<const PeStyle>{}, wqs, calib()), ValidationError);
}

TEST(MaxPeCount, Examples) {
  auto table = calib();
  auto& e = table.entries.at("BP-ST-1D/k4");
  e.lut_per_pe = 132;
  e.overhead_fraction.reset();
  HardwareConstraints hwc;
  hwc.lut_overhead_fraction = 0.5;
  hwc.lut_budget = 469200;  // 234.6k after overhead
  EXPECT_EQ(max_pe_count(bp_st_1d(4), hwc, table), 1777);
  hwc.lut_budget *= 2;
  EXPECT_EQ(max_pe_count(bp_st_1d(4), hwc, table), 3554);
  hwc.lut_budget = 100;
  EXPECT_EQ(max_pe_count(bp_st_1d(4), hwc, table), 0);
  EXPECT_THROW(array_dse(resnet(18, 4), bp_st_1d(4), hwc, table), InfeasibleError);
}

TEST(ArrayDse, SevenPixelNetPicksHSeven) {
  NetworkSpec net{"sevens",
                  {make_layer("a", 7, 64, 64, 3, 1, 2), make_layer("b", 7, 64, 128, 1, 1, 2)}};
  const auto result = array_dse(net, bp_st_1d(2), HardwareConstraints::defaults(), calib());
  EXPECT_EQ(result.best.dims.h, 7);
}

TEST(ArrayDse, SinglePeBudget) {
  auto table = calib();
  auto& e = table.entries.at("BP-ST-1D/k2");
  e.overhead_fraction.reset();
  HardwareConstraints hwc;
  hwc.lut_overhead_fraction = 0.0;
  hwc.lut_budget = e.lut_per_pe * 1.5;
  const auto result = array_dse(resnet(18, 2), bp_st_1d(2), hwc, table);
  EXPECT_EQ(result.best.dims, (ArrayDims{1, 1, 1}));
  EXPECT_EQ(result.max_pe, 1);
}

TEST(ArrayDse, Resnet18K2Band) {
  const auto result =
      array_dse(resnet(18, 2), bp_st_1d(2), HardwareConstraints::defaults(), calib());
  EXPECT_EQ(result.best.dims.h, 7);
  EXPECT_NEAR(static_cast<double>(n_pe(result.best.dims)), 1295, 0.10 * 1295);
  EXPECT_LE(result.best.bram_blocks, HardwareConstraints::defaults().bram_budget);
}

TEST(ArrayDse, PortBudgetLimitsSearch) {
  auto hwc = HardwareConstraints::defaults();
  hwc.bram_budget = 1800;
  const auto result = array_dse(resnet(18, 2), bp_st_1d(2), hwc, calib());
  EXPECT_LE(result.best.ports.total(), 1800);
  EXPECT_LE(result.best.bram_blocks, 1800);
  const auto free = array_dse(resnet(18, 2), bp_st_1d(2), HardwareConstraints::defaults(), calib());
  EXPECT_GE(result.best.total_cycles, free.best.total_cycles);
}

TEST(Evaluate, ReportIsSelfConsistent) {
  const auto net = resnet(18, 2);
  const auto& hwc = HardwareConstraints::defaults();
  const auto design = build_design(net, bp_st_1d(2), {7, 5, 37}, hwc, calib());
  const auto r = evaluate(design, net, hwc, calib());
  EXPECT_EQ(r.total_macs, network_macs(net));
  EXPECT_DOUBLE_EQ(r.frames_per_s, 127e6 / static_cast<double>(r.total_cycles));
  EXPECT_DOUBLE_EQ(r.gops_per_s, 2.0 * static_cast<double>(r.total_macs) * r.frames_per_s / 1e9);
  EXPECT_DOUBLE_EQ(r.energy.total_mj, r.energy.compute_mj + r.energy.bram_mj + r.energy.dram_mj);
  EXPECT_NEAR(r.gops_per_s_per_w, r.gops_per_s / (r.energy.total_mj * 1e-3 * r.frames_per_s),
              1e-9 * r.gops_per_s_per_w);
  EXPECT_EQ(r.n_pe, 1295);
  EXPECT_DOUBLE_EQ(r.pe_per_dsp, 1295.0 / 256);
}

TEST(Evaluate, ComputeEnergyFromPpgOps) {
  const auto net = resnet(18, 8);
  const auto& hwc = HardwareConstraints::defaults();
  const auto cfg = bp_st_1d(2);
  const auto r = evaluate(build_design(net, cfg, {7, 5, 37}, hwc, calib()), net, hwc, calib());
  const double e8 = pe_cost(cfg, calib()).energy_pj(8);
  EXPECT_NEAR(r.energy.compute_mj, static_cast<double>(network_macs(net)) * 4 * e8 * 1e-9,
              1e-9);
}

TEST(Evaluate, EmptyNetIsAnError) {
  const NetworkSpec empty{"empty", {}};
  const auto& hwc = HardwareConstraints::defaults();
  DesignPoint design;
  design.cfg = bp_st_1d(2);
  design.f_mhz = 127;
  EXPECT_THROW(evaluate(design, empty, hwc, calib()), ValidationError);
}

TEST(Evaluate, BatchingCutsWeightTraffic) {
  const auto net = resnet(50, 2);
  EXPECT_LT(dram_traffic_bits(net, calib(), 4), dram_traffic_bits(net, calib(), 1));
}

TEST(FullFlow, FixedDimsSkipSearch) {
  FlowOptions opts;
  opts.candidates = {parse_style("BP-ST-1D", 2)};
  opts.dims = ArrayDims{7, 5, 37};
  const auto flow = full_flow(resnet(152, 2), HardwareConstraints::defaults(), calib(), opts);
  EXPECT_EQ(flow.design.dims, (ArrayDims{7, 5, 37}));
  EXPECT_EQ(flow.target_wq, 2);
  EXPECT_NEAR(flow.report.gops_per_s, 1131.38, 0.10 * 1131.38);
}

TEST(FullFlow, SearchPicksRankedWinner) {
  const auto flow = full_flow(resnet(18, 4), HardwareConstraints::defaults(), calib());
  EXPECT_EQ(flow.design.cfg.style.name(), "BP-ST-1D");
  EXPECT_EQ(flow.target_wq, 4);
  EXPECT_TRUE(dram_roofline_ok(flow.design, resnet(18, 4), HardwareConstraints::defaults()));
}

TEST(FullFlow, RooflineRejectsStarvedDesigns) {
  auto hwc = HardwareConstraints::defaults();
  hwc.dram_bw_bits_per_s = 1e6;
  EXPECT_THROW(full_flow(resnet(18, 2), hwc, calib()), InfeasibleError);
}

TEST(Constraints, ParseOverridesAndValidates) {
  const auto hwc = HardwareConstraints::parse(R"({"bram_budget": 1000})");
  EXPECT_EQ(hwc.bram_budget, 1000);
  EXPECT_DOUBLE_EQ(hwc.lut_budget, HardwareConstraints::defaults().lut_budget);
  EXPECT_THROW(HardwareConstraints::parse(R"({"bram_budget": -1})"), ValidationError);
  EXPECT_THROW(HardwareConstraints::parse(R"({"bram_bugdet": 1})"), ValidationError);
  EXPECT_THROW(HardwareConstraints::parse("{"), ParseError);
}
