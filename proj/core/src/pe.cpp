#include "mpdse/pe.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <fmt/format.h>

#include "mpdse/error.hpp"

namespace mpdse {

namespace {

__extension__ typedef __int128 wide_int;

int ceil_div(int a, int b) { return (a + b - 1) / b; }

std::string upper(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string PeStyle::name() const {
  return fmt::format("{}-{}-{}", processing == Processing::bp ? "BP" : "BS",
                     consolidation == Consolidation::st ? "ST" : "SA",
                     scaling == Scaling::one_d ? "1D" : "2D");
}

std::string PeStyle::key() const { return fmt::format("{}/k{}", name(), slice_bits); }

PeStyle parse_style(std::string_view name, int slice_bits, int activation_bits) {
  const std::string u = upper(name);
  if (u.size() != 8 || u[2] != '-' || u[5] != '-')
    throw ValidationError(fmt::format("unknown PE style '{}'", name));
  PeStyle s;
  const auto proc = u.substr(0, 2);
  const auto cons = u.substr(3, 2);
  const auto scal = u.substr(6, 2);
  if (proc == "BP")
    s.processing = Processing::bp;
  else if (proc == "BS")
    s.processing = Processing::bs;
  else
    throw ValidationError(fmt::format("unknown PE style '{}'", name));
  if (cons == "ST")
    s.consolidation = Consolidation::st;
  else if (cons == "SA")
    s.consolidation = Consolidation::sa;
  else
    throw ValidationError(fmt::format("unknown PE style '{}'", name));
  if (scal == "1D")
    s.scaling = Scaling::one_d;
  else if (scal == "2D")
    s.scaling = Scaling::two_d;
  else
    throw ValidationError(fmt::format("unknown PE style '{}'", name));
  s.slice_bits = slice_bits;
  s.activation_bits = activation_bits;
  validate(s);
  return s;
}

void validate(const PeStyle& s) {
  if (s.activation_bits < 1 || s.activation_bits > 16)
    throw ValidationError(fmt::format("activation width must be in [1, 16], got {}",
                                      s.activation_bits));
  if (s.slice_bits < 1 || s.slice_bits > s.activation_bits)
    throw ValidationError(fmt::format("slice width k={} must be in [1, N={}]", s.slice_bits,
                                      s.activation_bits));
  const bool needs_divisor = s.processing == Processing::bp || s.scaling == Scaling::two_d;
  if (needs_divisor && s.activation_bits % s.slice_bits != 0)
    throw ValidationError(fmt::format("{}: k={} must divide N={}", s.name(), s.slice_bits,
                                      s.activation_bits));
}

std::vector<PeStyle> taxonomy(std::span<const int> slice_bits, int activation_bits) {
  static constexpr std::array<int, 3> default_k{1, 2, 4};
  if (slice_bits.empty()) slice_bits = default_k;
  std::vector<PeStyle> out;
  for (auto p : {Processing::bs, Processing::bp})
    for (auto c : {Consolidation::sa, Consolidation::st})
      for (auto sc : {Scaling::one_d, Scaling::two_d})
        for (int k : slice_bits) {
          PeStyle s{p, c, sc, k, activation_bits};
          validate(s);
          out.push_back(s);
        }
  return out;
}

int enum_rank(const PeStyle& s) {
  return ((static_cast<int>(s.processing) * 2 + static_cast<int>(s.consolidation)) * 2 +
          static_cast<int>(s.scaling)) *
             64 +
         s.slice_bits;
}

int PeConfig::ppg_count() const {
  if (style.processing == Processing::bs) return 1;
  const int lanes = style.activation_bits / style.slice_bits;
  return style.scaling == Scaling::one_d ? lanes : lanes * lanes;
}

void validate(const PeConfig& cfg) {
  validate(cfg.style);
  if (cfg.accumulator_width < 2 || cfg.accumulator_width > 62)
    throw ValidationError(
        fmt::format("accumulator width must be in [2, 62], got {}", cfg.accumulator_width));
}

std::int64_t WeightSlices::reconstruct() const {
  std::int64_t value = 0;
  std::int64_t scale = 1;
  for (int s : slices) {
    value += s * scale;
    scale *= std::int64_t{1} << slice_bits;
  }
  return value;
}

WeightSlices slice_signed(std::int64_t w, int w_q, int k) {
  if (k < 1 || k > 16) throw ValidationError(fmt::format("slice width must be >= 1, got {}", k));
  if (w_q < 1 || w_q > 32) throw ValidationError(fmt::format("bad word-length {}", w_q));
  const std::int64_t lo = -(std::int64_t{1} << (w_q - 1));
  const std::int64_t hi = (std::int64_t{1} << (w_q - 1)) - 1;
  if (w < lo || w > hi)
    throw ValidationError(fmt::format("weight {} out of {}-bit signed range", w, w_q));

  WeightSlices out;
  out.slice_bits = k;
  const int n = ceil_div(w_q, k);
  const std::int64_t mask = (std::int64_t{1} << k) - 1;
  for (int i = 0; i + 1 < n; ++i) out.slices.push_back(static_cast<int>((w >> (k * i)) & mask));
  // Arithmetic shift sign-extends the top slice when k does not divide w_q.
  out.slices.push_back(static_cast<int>(w >> (k * (n - 1))));
  return out;
}

std::vector<int> slice_unsigned(std::int64_t a, int n, int k) {
  if (a < 0 || a >= (std::int64_t{1} << n))
    throw ValidationError(fmt::format("activation {} out of {}-bit unsigned range", a, n));
  const std::int64_t mask = (std::int64_t{1} << k) - 1;
  std::vector<int> out;
  for (int i = 0; i < ceil_div(n, k); ++i) out.push_back(static_cast<int>((a >> (k * i)) & mask));
  return out;
}

int pairs_per_issue(const PeConfig& cfg, int w_q) {
  const auto& s = cfg.style;
  if (s.processing == Processing::bs) return 1;
  const int lanes = s.activation_bits / s.slice_bits;
  const int per_weight = ceil_div(w_q, s.slice_bits);
  // 2D keeps (N/k)^2 PPGs but one weight lane per N/k of them.
  return std::max(1, lanes / per_weight);
}

int cycles_per_issue(const PeConfig& cfg, int w_q) {
  const auto& s = cfg.style;
  if (s.processing == Processing::bp) return 1;
  const int w_slices = ceil_div(w_q, s.slice_bits);
  return s.scaling == Scaling::one_d ? w_slices : w_slices * (s.activation_bits / s.slice_bits);
}

int ppg_ops_per_mac(const PeConfig& cfg, int w_q) {
  const auto& s = cfg.style;
  const int w_slices = ceil_div(w_q, s.slice_bits);
  return s.scaling == Scaling::one_d ? w_slices : w_slices * (s.activation_bits / s.slice_bits);
}

PeAccumulator::PeAccumulator(PeConfig cfg, int w_q) : cfg_(cfg), w_q_(w_q) {
  validate(cfg_);
  if (w_q < 1 || w_q > cfg_.style.activation_bits)
    throw ValidationError(fmt::format("weight word-length {} must be in [1, N={}]", w_q,
                                      cfg_.style.activation_bits));
  lanes_ = pairs_per_issue(cfg_, w_q);
  cycles_per_issue_ = cycles_per_issue(cfg_, w_q);
  lo_ = -(std::int64_t{1} << (cfg_.accumulator_width - 1));
  hi_ = (std::int64_t{1} << (cfg_.accumulator_width - 1)) - 1;

  const int k = cfg_.style.slice_bits;
  int positions = ceil_div(w_q, k);
  if (cfg_.style.scaling == Scaling::two_d) positions += cfg_.style.activation_bits / k - 1;
  partials_.assign(cfg_.style.consolidation == Consolidation::sa ? positions : 1, 0);
}

void PeAccumulator::add(std::size_t slot, std::int64_t value) {
  const std::int64_t next = partials_[slot] + value;
  if (next < lo_ || next > hi_)
    throw OverflowError(fmt::format("{}-bit accumulator overflow: {} + {}",
                                    cfg_.accumulator_width, partials_[slot], value));
  partials_[slot] = next;
}

std::int64_t PeAccumulator::ppg(std::int64_t a_slice, std::int64_t w_slice) const {
  if (cfg_.style.slice_bits == 1 && cfg_.style.scaling == Scaling::one_d) {
    // 1-bit slices reduce the PPG to an AND; the sign slice subtracts.
    if (w_slice == 0) return 0;
    return w_slice < 0 ? -a_slice : a_slice;
  }
  return a_slice * w_slice;
}

int PeAccumulator::issue(std::span<const std::int64_t> activations,
                         std::span<const std::int64_t> weights) {
  if (activations.size() != weights.size())
    throw ValidationError(fmt::format("operand count mismatch: {} activations, {} weights",
                                      activations.size(), weights.size()));
  if (activations.size() > static_cast<std::size_t>(lanes_))
    throw ValidationError(fmt::format("{} pairs exceed the {} lanes of one issue",
                                      activations.size(), lanes_));

  const int k = cfg_.style.slice_bits;
  const int n = cfg_.style.activation_bits;
  const bool sa = cfg_.style.consolidation == Consolidation::sa;
  const bool serial = cfg_.style.processing == Processing::bs;
  const bool two_d = cfg_.style.scaling == Scaling::two_d;

  struct Product {
    int position;
    std::int64_t value;
  };
  // Products in the order the hardware produces them: all at once for BP,
  // one per cycle for BS (at most one lane there).
  std::vector<Product> products;
  for (std::size_t lane = 0; lane < activations.size(); ++lane) {
    const std::int64_t a = activations[lane];
    if (a < 0 || a >= (std::int64_t{1} << n))
      throw ValidationError(fmt::format("activation {} out of {}-bit unsigned range", a, n));
    const auto w = slice_signed(weights[lane], w_q_, k);
    if (two_d) {
      const auto a_slices = slice_unsigned(a, n, k);
      for (std::size_t j = 0; j < a_slices.size(); ++j)
        for (std::size_t i = 0; i < w.slices.size(); ++i)
          products.push_back({static_cast<int>(i + j), ppg(a_slices[j], w.slices[i])});
    } else {
      for (std::size_t i = 0; i < w.slices.size(); ++i)
        products.push_back({static_cast<int>(i), ppg(a, w.slices[i])});
    }
  }

  auto shifted = [k](const Product& p) { return p.value * (std::int64_t{1} << (k * p.position)); };
  if (sa) {
    for (const auto& p : products) add(static_cast<std::size_t>(p.position), p.value);
  } else if (serial) {
    for (const auto& p : products) add(0, shifted(p));
  } else {
    std::int64_t tree = 0;
    for (const auto& p : products) tree += shifted(p);
    add(0, tree);
  }
  cycles_ += cycles_per_issue_;
  return cycles_per_issue_;
}

std::int64_t PeAccumulator::finalize() const {
  const int k = cfg_.style.slice_bits;
  wide_int total = 0;
  for (std::size_t s = 0; s < partials_.size(); ++s)
    total += static_cast<wide_int>(partials_[s]) * (static_cast<wide_int>(1) << (k * s));
  if (total < lo_ || total > hi_)
    throw OverflowError(
        fmt::format("{}-bit accumulator overflow in final shift-add", cfg_.accumulator_width));
  return static_cast<std::int64_t>(total);
}

MacResult pe_mac(const PeConfig& cfg, std::span<const std::int64_t> activations,
                 std::span<const std::int64_t> weights, int w_q) {
  PeAccumulator acc(cfg, w_q);
  MacResult r;
  r.cycles = acc.issue(activations, weights);
  r.result = acc.finalize();
  return r;
}

}  // namespace mpdse
