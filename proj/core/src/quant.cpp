#include "mpdse/quant.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mpdse/error.hpp"

namespace mpdse {

std::int64_t QuantParams::qn() const {
  return signedness == Signedness::signed_ ? -(std::int64_t{1} << (bits - 1)) : 0;
}

std::int64_t QuantParams::qp() const {
  return signedness == Signedness::signed_ ? (std::int64_t{1} << (bits - 1)) - 1
                                           : (std::int64_t{1} << bits) - 1;
}

Quantized quantize(double v, const QuantParams& p) {
  if (!(p.step > 0.0) || !std::isfinite(p.step))
    throw ValidationError(fmt::format("quantizer step size must be > 0, got {}", p.step));
  if (p.bits < 1 || p.bits > 62)
    throw ValidationError(fmt::format("quantizer bits must be in [1, 62], got {}", p.bits));
  if (std::isnan(v)) throw ValidationError("cannot quantize NaN");

  const double lo = static_cast<double>(p.qn());
  const double hi = static_cast<double>(p.qp());
  const double scaled = std::clamp(v / p.step, lo, hi);
  // std::round breaks ties away from zero.
  Quantized q;
  q.v_int = static_cast<std::int64_t>(std::round(scaled));
  q.v_quant = static_cast<double>(q.v_int) * p.step;
  return q;
}

double init_step_size(std::span<const double> values, int bits, Signedness signedness) {
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 1.0;
  QuantParams p{1.0, bits, signedness};
  return peak / static_cast<double>(p.qp());
}

std::string_view to_string(FootprintUnit unit) {
  switch (unit) {
    case FootprintUnit::bits:
      return "bits";
    case FootprintUnit::megabits:
      return "Mbit";
    case FootprintUnit::megabytes:
      return "MB";
  }
  return "bits";
}

FootprintUnit parse_footprint_unit(std::string_view text) {
  if (text == "bits") return FootprintUnit::bits;
  if (text == "Mbit") return FootprintUnit::megabits;
  if (text == "MB") return FootprintUnit::megabytes;
  throw ValidationError(fmt::format("unknown footprint unit '{}' (bits, Mbit, MB)", text));
}

double to_unit(double bits, FootprintUnit unit) {
  switch (unit) {
    case FootprintUnit::bits:
      return bits;
    case FootprintUnit::megabits:
      return bits / 1e6;
    case FootprintUnit::megabytes:
      return bits / 8e6;
  }
  return bits;
}

namespace {

bool included(const ConvLayerSpec& layer, const FootprintPolicy& policy) {
  if (layer.tag == LayerTag::projection) return policy.include_projection_convs;
  if (layer.tag == LayerTag::stem) return policy.include_stem_last_8bit;
  return true;
}

std::uint64_t weights_per_channel(const ConvLayerSpec& layer) {
  return static_cast<std::uint64_t>(layer.kernel) * static_cast<std::uint64_t>(layer.kernel) *
         static_cast<std::uint64_t>(layer.input_channels);
}

}  // namespace

double footprint(const NetworkSpec& net, const FootprintPolicy& policy) {
  std::uint64_t bits = 0;
  for (const auto& layer : net.layers) {
    if (!included(layer, policy)) continue;
    for (const auto& g : layer.weight_groups)
      bits += weights_per_channel(layer) * static_cast<std::uint64_t>(g.channels) *
              static_cast<std::uint64_t>(g.bits);
  }
  return to_unit(static_cast<double>(bits), policy.unit);
}

double footprint_uniform(const NetworkSpec& net, const FootprintPolicy& policy, int bits) {
  std::uint64_t total = 0;
  for (const auto& layer : net.layers)
    if (included(layer, policy)) total += layer_weight_count(layer);
  return to_unit(static_cast<double>(total) * bits, policy.unit);
}

double compression_factor(double fp_bits, double q_bits) {
  if (!(fp_bits > 0.0) || !(q_bits > 0.0))
    throw ValidationError("compression factor needs two positive footprints");
  return fp_bits / q_bits;
}

}  // namespace mpdse
