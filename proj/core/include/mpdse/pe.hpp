#pragma once

// Precision-scalable processing elements: the BS/BP x SA/ST x 1D/2D
// taxonomy, signed operand slicing and a bit-exact MAC simulator.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mpdse {

enum class Processing { bs, bp };
enum class Consolidation { sa, st };
enum class Scaling { one_d, two_d };

struct PeStyle {
  Processing processing = Processing::bp;
  Consolidation consolidation = Consolidation::st;
  Scaling scaling = Scaling::one_d;
  int slice_bits = 2;       // k
  int activation_bits = 8;  // N

  /// "BP-ST-1D"; the slice width is not part of the name.
  std::string name() const;
  /// "BP-ST-1D/k2", used as calibration key.
  std::string key() const;

  friend bool operator==(const PeStyle&, const PeStyle&) = default;
};

/// Accepts "BP-ST-1D" in any letter case.
PeStyle parse_style(std::string_view name, int slice_bits, int activation_bits = 8);

/// k >= 1, k <= N, N <= 16; BP and 2D designs need N mod k == 0.
void validate(const PeStyle& style);

/// Every style of the taxonomy for each slice width, in enum order
/// (processing, consolidation, scaling, then k).
std::vector<PeStyle> taxonomy(std::span<const int> slice_bits = {}, int activation_bits = 8);

/// Total order used for deterministic tie-breaks.
int enum_rank(const PeStyle& style);

struct PeConfig {
  PeStyle style;
  int accumulator_width = 30;

  /// N/k for BP-1D, (N/k)^2 for BP-2D, 1 for BS.
  int ppg_count() const;
};

void validate(const PeConfig& cfg);

/// Radix-2^k decomposition, LSB first. Lower slices are unsigned, the top
/// slice is two's-complement signed.
struct WeightSlices {
  int slice_bits = 1;
  std::vector<int> slices;

  std::int64_t reconstruct() const;
};

/// Throws ValidationError if w is not representable in w_q-bit two's
/// complement or k < 1.
WeightSlices slice_signed(std::int64_t w, int w_q, int k);

/// Unsigned slicing of an N-bit activation into ceil(N/k) k-bit slices.
std::vector<int> slice_unsigned(std::int64_t a, int n, int k);

/// Independent weight-activation pairs one issue consumes.
int pairs_per_issue(const PeConfig& cfg, int w_q);
/// 1 for BP, ceil(w_q/k) for BS-1D, (N/k)*ceil(w_q/k) for BS-2D.
int cycles_per_issue(const PeConfig& cfg, int w_q);
/// k-bit partial-product operations spent on one multiply.
int ppg_ops_per_mac(const PeConfig& cfg, int w_q);

/// Stateful PE accumulator. ST keeps one running sum; SA keeps one partial
/// accumulator per shift position and combines them in finalize(). Every
/// addition is range-checked at accumulator_width bits.
class PeAccumulator {
 public:
  PeAccumulator(PeConfig cfg, int w_q);

  /// Processes up to pairs_per_issue operand pairs; returns cycles spent.
  /// Throws ValidationError on operand range or lane count violations and
  /// OverflowError when an accumulator leaves its range.
  int issue(std::span<const std::int64_t> activations, std::span<const std::int64_t> weights);

  /// Shift-add of the partial accumulators (SA) or the running sum (ST).
  std::int64_t finalize() const;

  /// Partial sums indexed by shift position in units of k bits. ST designs
  /// report a single entry at position 0.
  const std::vector<std::int64_t>& partials() const { return partials_; }

  int cycles() const { return cycles_; }
  const PeConfig& config() const { return cfg_; }
  int weight_bits() const { return w_q_; }

 private:
  void add(std::size_t slot, std::int64_t value);
  std::int64_t ppg(std::int64_t a_slice, std::int64_t w_slice) const;

  PeConfig cfg_;
  int w_q_;
  int lanes_;
  int cycles_per_issue_;
  std::int64_t lo_;
  std::int64_t hi_;
  std::vector<std::int64_t> partials_;
  int cycles_ = 0;
};

struct MacResult {
  std::int64_t result = 0;
  int cycles = 0;
};

/// One issue of the PE on at most pairs_per_issue(cfg, w_q) pairs.
MacResult pe_mac(const PeConfig& cfg, std::span<const std::int64_t> activations,
                 std::span<const std::int64_t> weights, int w_q);

}  // namespace mpdse
