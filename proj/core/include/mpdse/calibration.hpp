#pragma once

// Per-(style, k) cost constants standing in for synthesis results, and the
// PE cost and efficiency queries built on them.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpdse/pe.hpp"

namespace mpdse {

struct CalibrationEntry {
  double lut_per_pe = 0.0;
  double f_mhz = 0.0;
  /// Energy of one k-bit partial-product operation, keyed by weight
  /// word-length.
  std::map<int, double> energy_pj_per_ppg_op;
  /// Overrides the constraint-level LUT overhead fraction for this design.
  std::optional<double> overhead_fraction;
  std::string note;
};

class CalibrationTable {
 public:
  /// Throws ParseError on malformed JSON, ValidationError on bad values.
  static CalibrationTable parse(std::string_view text);
  static CalibrationTable load(const std::string& path);
  /// The shipped table compiled into the library.
  static const CalibrationTable& defaults();

  /// Throws CalibrationError carrying the missing key.
  const CalibrationEntry& entry(const PeStyle& style) const;
  bool has(const PeStyle& style) const;

  /// Extra per-frame DRAM traffic for a named network; 0 when absent.
  double base_traffic_bits(std::string_view network) const;

  std::string to_json() const;

  std::map<std::string, CalibrationEntry> entries;
  std::map<std::string, double> base_traffic;
  std::vector<std::string> notes;
  double bram_pj_per_bit = 0.0;
  double dsp_vs_lut_efficiency = 1.7;
  double dsp_8to1_energy_ratio = 0.58;
};

struct PeCost {
  double luts = 0.0;
  double f_mhz = 0.0;
  std::map<int, double> energy_pj_per_ppg_op;
  std::string key;

  /// Throws CalibrationError when w_q has no energy entry.
  double energy_pj(int w_q) const;
};

PeCost pe_cost(const PeConfig& cfg, const CalibrationTable& calib);

/// Processed bits per second per LUT:
/// (N + w_q) * pairs_per_issue * f / (cycles_per_issue * luts).
double pe_efficiency(const PeConfig& cfg, int w_q, const CalibrationTable& calib);

}  // namespace mpdse
