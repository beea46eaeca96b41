#pragma once

// Inference-time uniform quantizer and parameter-memory accounting.

#include <cstdint>
#include <span>
#include <string_view>

#include "mpdse/workload.hpp"

namespace mpdse {

enum class Signedness { signed_, unsigned_ };

struct QuantParams {
  double step = 1.0;  // gamma, > 0
  int bits = 8;
  Signedness signedness = Signedness::signed_;

  std::int64_t qn() const;
  std::int64_t qp() const;
};

struct Quantized {
  std::int64_t v_int = 0;
  double v_quant = 0.0;
};

/// v_int = round(clamp(v / step, Qn, Qp)), ties away from zero.
/// Throws ValidationError for step <= 0 or bits outside [1, 62].
Quantized quantize(double v, const QuantParams& p);

/// step = max|v| / Qp; returns 1.0 when every value is zero.
double init_step_size(std::span<const double> values, int bits, Signedness signedness);

enum class FootprintUnit { bits, megabits, megabytes };

std::string_view to_string(FootprintUnit unit);
FootprintUnit parse_footprint_unit(std::string_view text);

/// 1 Mbit = 1e6 bits and 1 MB = 8e6 bits.
struct FootprintPolicy {
  bool include_projection_convs = true;
  /// Counts the 8-bit stem layer; when false it is left out entirely.
  bool include_stem_last_8bit = true;
  FootprintUnit unit = FootprintUnit::bits;
};

/// Weight bits (K^2 * I_W * channels * bits per group) over the layers the
/// policy includes, converted to policy.unit.
double footprint(const NetworkSpec& net, const FootprintPolicy& policy);

/// Same accounting with every included weight stored at `bits`.
double footprint_uniform(const NetworkSpec& net, const FootprintPolicy& policy, int bits);

double to_unit(double bits, FootprintUnit unit);

/// fp_bits / q_bits. Throws ValidationError unless both are positive.
double compression_factor(double fp_bits, double q_bits);

}  // namespace mpdse
