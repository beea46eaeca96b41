#pragma once

// Serialization of rankings, mappings, designs and reports (table, CSV and
// JSON). CSV outputs start with a "# schema: <name> v<N>" line.

#include <iosfwd>
#include <string>
#include <string_view>

#include "mpdse/calibration.hpp"
#include "mpdse/dse.hpp"
#include "mpdse/quant.hpp"

namespace mpdse {

std::string_view version();

inline constexpr int kCsvSchemaVersion = 1;

/// style, k, w_Q, rank, bits_per_s_per_lut, luts, f_mhz.
void write_pe_ranking_csv(std::ostream& out, const PeRanking& ranking);
std::string render_pe_ranking(const PeRanking& ranking);

/// One row per layer and precision group: layer, H, W, D, w_Q, channels,
/// P_ideal, P_actual, U, bw_weights, bw_acts, bw_psums (bits/s).
void write_mapping_csv(std::ostream& out, const NetworkMapping& mapping, double f_mhz,
                       const NetworkSpec& net);

/// Single summary row.
void write_report_csv(std::ostream& out, const DesignReport& report);
std::string render_report(const DesignReport& report);

/// Every DesignReport field, the per-layer mapping table, the calibration
/// and constraints echo and the tool version.
std::string report_json(const DesignReport& report, const CalibrationTable& calib,
                        const HardwareConstraints& hwc);

/// A saved design: workload, PE configuration, array dimensions, batch and
/// constraints. Enough to re-evaluate the report.
struct SavedDesign {
  NetworkSpec net;
  PeConfig cfg;
  ArrayDims dims;
  HardwareConstraints hwc;
  int batch = 1;
};

std::string design_json(const SavedDesign& design);
SavedDesign parse_design_json(std::string_view text);

struct FootprintSummary {
  std::string network;
  FootprintPolicy policy;
  int baseline_bits = 32;
  double baseline = 0.0;  // in policy.unit
  double quantized = 0.0;
  double compression = 0.0;
};

std::string render_footprint(const FootprintSummary& summary);
std::string footprint_json(const FootprintSummary& summary);
void write_footprint_csv(std::ostream& out, const FootprintSummary& summary);

}  // namespace mpdse
