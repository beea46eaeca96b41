#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "mpdse/error.hpp"
#include "mpdse/report.hpp"

using namespace mpdse;

namespace {

PeConfig bp_st_1d(int k) {
  return PeConfig{PeStyle{Processing::bp, Consolidation::st, Scaling::one_d, k, 8}, 30};
}

DesignReport resnet18_report(const NetworkSpec& net) {
  const auto& hwc = HardwareConstraints::defaults();
  const auto& calib = CalibrationTable::defaults();
  return evaluate(build_design(net, bp_st_1d(2), {7, 5, 37}, hwc, calib), net, hwc, calib);
}

}  // namespace

TEST(DesignJson, RoundTrip) {
  SavedDesign saved{resnet(50, 4), bp_st_1d(4), {7, 4, 71}, HardwareConstraints::defaults(), 2};
  const auto back = parse_design_json(design_json(saved));
  EXPECT_EQ(back.net, saved.net);
  EXPECT_EQ(back.cfg.style, saved.cfg.style);
  EXPECT_EQ(back.cfg.accumulator_width, saved.cfg.accumulator_width);
  EXPECT_EQ(back.dims, saved.dims);
  EXPECT_EQ(back.batch, 2);
  EXPECT_EQ(back.hwc.to_json(), saved.hwc.to_json());
  EXPECT_THROW(parse_design_json("{}"), Error);
}

TEST(ReportJson, CarriesEveryLayerAndEchoesInputs) {
  const auto net = resnet(18, 2);
  const auto r = resnet18_report(net);
  const auto doc = nlohmann::json::parse(
      report_json(r, CalibrationTable::defaults(), HardwareConstraints::defaults()));
  EXPECT_EQ(doc["layers"].size(), net.layers.size());
  EXPECT_DOUBLE_EQ(doc["frames_per_s"].get<double>(), r.frames_per_s);
  EXPECT_TRUE(doc.contains("constraints"));
  EXPECT_TRUE(doc.contains("calibration"));
  EXPECT_EQ(doc["version"].get<std::string>(), std::string(version()));
}

TEST(MappingCsv, OneRowPerGroup) {
  auto net = resnet(18, 2);
  net.layers[3].weight_groups = {{32, 1}, {32, 4}};
  const auto r = resnet18_report(net);
  std::ostringstream out;
  write_mapping_csv(out, r.mapping, r.f_mhz, net);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# schema: mapping v1");
  int rows = -1;  // header
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, static_cast<int>(net.layers.size()) + 1);
}

TEST(ReportCsv, SchemaLine) {
  std::ostringstream out;
  write_report_csv(out, resnet18_report(resnet(18, 2)));
  EXPECT_EQ(out.str().rfind("# schema: report v1\n", 0), 0u);
}
