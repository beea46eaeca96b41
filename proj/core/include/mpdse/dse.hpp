#pragma once

// Three-phase design-space exploration: PE ranking, PE-array search under
// resource constraints, and full dataflow evaluation.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpdse/calibration.hpp"
#include "mpdse/dataflow.hpp"
#include "mpdse/pe.hpp"
#include "mpdse/workload.hpp"

namespace mpdse {

struct HardwareConstraints {
  double lut_budget = 469440;
  std::int64_t bram_budget = 2560;
  double dram_bw_bits_per_s = 102.4e9;
  double onchip_bw_per_port_bits_per_s = 16e9;
  int dsp_count = 256;  // reference only
  double dram_energy_pj_per_bit = 70.0;
  /// Share of the LUT budget kept for control and buffers; calibration
  /// entries may override it per design.
  double lut_overhead_fraction = 0.2;
  std::int64_t block_bits = 20000;
  int accumulator_width = 30;

  /// Throws ParseError / ValidationError. Missing fields keep their defaults.
  static HardwareConstraints parse(std::string_view text);
  static HardwareConstraints load(const std::string& path);
  /// The shipped constraint profile compiled into the library.
  static const HardwareConstraints& defaults();

  std::string to_json() const;
};

void validate(const HardwareConstraints& hwc);

struct PeRankEntry {
  PeStyle style;
  int w_q = 8;
  double efficiency = 0.0;  // bits/s/LUT
  double luts = 0.0;
  double f_mhz = 0.0;
};

struct PeRanking {
  /// Best first, per weight word-length.
  std::map<int, std::vector<PeRankEntry>> by_wq;

  /// Throws ValidationError for a word-length that was not ranked.
  const PeRankEntry& winner(int w_q) const;
};

/// Sorts candidates by pe_efficiency, descending; ties go to fewer LUTs,
/// then enum order. Throws ValidationError on an empty candidate set.
PeRanking pe_dse(std::span<const PeStyle> candidates, std::span<const int> w_qs,
                 const CalibrationTable& calib, int accumulator_width = 30);

/// floor(lut_budget * (1 - overhead) / lut_per_pe).
std::int64_t max_pe_count(const PeConfig& cfg, const HardwareConstraints& hwc,
                          const CalibrationTable& calib);

struct EvalOptions {
  MappingOptions mapping;
  /// Divides per-frame weight traffic.
  int batch = 1;
};

/// Per-frame DRAM traffic: packed weights / batch, the first layer's input
/// image and the calibrated per-network base traffic.
double dram_traffic_bits(const NetworkSpec& net, const CalibrationTable& calib, int batch = 1);

struct DesignPoint {
  PeConfig cfg;
  ArrayDims dims;
  double f_mhz = 0.0;
  std::int64_t total_cycles = 0;
  BramPorts ports;
  std::int64_t bram_blocks = 0;
  double luts = 0.0;  // PE logic only
  /// Filled by build_design; search results leave it empty.
  NetworkMapping mapping;
};

/// Search ordering: total cycles, BRAM ports, N_PE, then (H, W, D).
bool design_before(const DesignPoint& a, const DesignPoint& b);

struct ArraySearchOptions {
  unsigned jobs = 1;
  /// Also return every feasible point, not just the Pareto front.
  bool keep_all = false;
  EvalOptions eval;
};

struct ArraySearchResult {
  DesignPoint best;
  /// Points not strictly dominated in (cycles, ports, N_PE), in search order.
  std::vector<DesignPoint> pareto;
  std::vector<DesignPoint> all;
  std::int64_t max_pe = 0;
  std::int64_t evaluated = 0;
  std::int64_t feasible = 0;
};

/// Exhaustive (H, W, D) enumeration with H <= max I_H, W * lanes <= max I_W
/// (rounded up), D <= max O_D and N_PE <= max_pe_count. A point is feasible
/// when its BRAM blocks fit the budget, every stream stays within the
/// per-port bandwidth and the average DRAM traffic fits dram_bw. The result
/// does not depend on `jobs`. Throws InfeasibleError if nothing fits.
ArraySearchResult array_dse(const NetworkSpec& net, const PeConfig& cfg,
                            const HardwareConstraints& hwc, const CalibrationTable& calib,
                            const ArraySearchOptions& opts = {});

/// Fills resources and the per-layer mapping for fixed dimensions.
DesignPoint build_design(const NetworkSpec& net, const PeConfig& cfg, const ArrayDims& dims,
                         const HardwareConstraints& hwc, const CalibrationTable& calib,
                         const EvalOptions& opts = {});

struct EnergyBreakdown {
  double compute_mj = 0.0;
  double bram_mj = 0.0;
  double dram_mj = 0.0;
  double total_mj = 0.0;  // compute + BRAM + DRAM
};

struct UtilizationSummary {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

struct DesignReport {
  std::string network;
  PeConfig cfg;
  ArrayDims dims;
  std::int64_t n_pe = 0;
  double f_mhz = 0.0;
  std::int64_t total_cycles = 0;
  std::uint64_t total_macs = 0;
  double frames_per_s = 0.0;
  double gops_per_s = 0.0;  // 2 * MACs * frames/s / 1e9
  double gops_per_s_per_w = 0.0;
  EnergyBreakdown energy;
  UtilizationSummary utilization;
  double kluts = 0.0;
  std::int64_t bram_blocks = 0;
  BramPorts ports;
  BufferPlan buffers;
  double dram_traffic_bits = 0.0;
  double pe_per_dsp = 0.0;
  NetworkMapping mapping;
};

/// Throws ValidationError for a net without cycles (empty or zero work).
DesignReport evaluate(const DesignPoint& design, const NetworkSpec& net,
                      const HardwareConstraints& hwc, const CalibrationTable& calib,
                      const EvalOptions& opts = {});

/// True when every layer's weights (plus the input image for the first
/// layer) stream from DRAM within the layer's run time.
bool dram_roofline_ok(const DesignPoint& design, const NetworkSpec& net,
                      const HardwareConstraints& hwc, int batch = 1);

struct FlowOptions {
  /// Empty means the full taxonomy at k in {1, 2, 4}.
  std::vector<PeStyle> candidates;
  /// Skips the array search.
  std::optional<ArrayDims> dims;
  ArraySearchOptions search;
};

struct FlowResult {
  PeRanking ranking;
  int target_wq = 8;
  DesignPoint design;
  DesignReport report;
  /// Pareto points skipped because a layer exceeded the DRAM roofline.
  int rejected_points = 0;
  std::int64_t search_space = 0;
};

/// PE ranking at the net's dominant word-length, array search with the
/// winner, then evaluation of the first Pareto point that passes the
/// per-layer DRAM roofline. Throws InfeasibleError when none does.
FlowResult full_flow(const NetworkSpec& net, const HardwareConstraints& hwc,
                     const CalibrationTable& calib, const FlowOptions& opts = {});

}  // namespace mpdse
