#include "mpdse/dse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "mpdse/error.hpp"
#include "json_util.hpp"

namespace mpdse {

namespace detail {
std::string_view default_constraints_json();
}

using nlohmann::json;

namespace {

double number(const json& doc, const char* field, double fallback) {
  auto it = doc.find(field);
  if (it == doc.end()) return fallback;
  if (!it->is_number())
    throw ValidationError(fmt::format("constraints: field '{}': expected a number", field));
  return it->get<double>();
}

std::int64_t integer(const json& doc, const char* field, std::int64_t fallback) {
  auto it = doc.find(field);
  if (it == doc.end()) return fallback;
  if (!it->is_number_integer())
    throw ValidationError(fmt::format("constraints: field '{}': expected an integer", field));
  return it->get<std::int64_t>();
}

}  // namespace

HardwareConstraints HardwareConstraints::parse(std::string_view text) {
  const json doc = detail::parse_json(text, "constraints");
  detail::reject_unknown(doc,
                         {"lut_budget", "bram_budget", "dram_bw_bits_per_s",
                          "onchip_bw_per_port_bits_per_s", "dsp_count", "dram_energy_pj_per_bit",
                          "lut_overhead_fraction", "block_bits", "accumulator_width"},
                         "constraints");
  HardwareConstraints h;
  h.lut_budget = number(doc, "lut_budget", h.lut_budget);
  h.bram_budget = integer(doc, "bram_budget", h.bram_budget);
  h.dram_bw_bits_per_s = number(doc, "dram_bw_bits_per_s", h.dram_bw_bits_per_s);
  h.onchip_bw_per_port_bits_per_s =
      number(doc, "onchip_bw_per_port_bits_per_s", h.onchip_bw_per_port_bits_per_s);
  h.dsp_count = static_cast<int>(integer(doc, "dsp_count", h.dsp_count));
  h.dram_energy_pj_per_bit = number(doc, "dram_energy_pj_per_bit", h.dram_energy_pj_per_bit);
  h.lut_overhead_fraction = number(doc, "lut_overhead_fraction", h.lut_overhead_fraction);
  h.block_bits = integer(doc, "block_bits", h.block_bits);
  h.accumulator_width = static_cast<int>(integer(doc, "accumulator_width", h.accumulator_width));
  validate(h);
  return h;
}

HardwareConstraints HardwareConstraints::load(const std::string& path) {
  return parse(detail::read_file(path, "constraints"));
}

const HardwareConstraints& HardwareConstraints::defaults() {
  static const HardwareConstraints hwc = parse(detail::default_constraints_json());
  return hwc;
}

std::string HardwareConstraints::to_json() const {
  json doc{{"lut_budget", lut_budget},
           {"bram_budget", bram_budget},
           {"dram_bw_bits_per_s", dram_bw_bits_per_s},
           {"onchip_bw_per_port_bits_per_s", onchip_bw_per_port_bits_per_s},
           {"dsp_count", dsp_count},
           {"dram_energy_pj_per_bit", dram_energy_pj_per_bit},
           {"lut_overhead_fraction", lut_overhead_fraction},
           {"block_bits", block_bits},
           {"accumulator_width", accumulator_width}};
  return doc.dump(2);
}

void validate(const HardwareConstraints& h) {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw ValidationError(fmt::format("constraints: field '{}': must be positive", field));
  };
  require(h.lut_budget > 0, "lut_budget");
  require(h.bram_budget > 0, "bram_budget");
  require(h.dram_bw_bits_per_s > 0, "dram_bw_bits_per_s");
  require(h.onchip_bw_per_port_bits_per_s > 0, "onchip_bw_per_port_bits_per_s");
  require(h.dsp_count > 0, "dsp_count");
  require(h.dram_energy_pj_per_bit > 0, "dram_energy_pj_per_bit");
  require(h.block_bits > 0, "block_bits");
  require(h.accumulator_width >= 2 && h.accumulator_width <= 62, "accumulator_width");
  if (h.lut_overhead_fraction < 0.0 || h.lut_overhead_fraction >= 1.0)
    throw ValidationError("constraints: field 'lut_overhead_fraction': must be in [0, 1)");
}

const PeRankEntry& PeRanking::winner(int w_q) const {
  auto it = by_wq.find(w_q);
  if (it == by_wq.end() || it->second.empty())
    throw ValidationError(fmt::format("no PE ranking for w_Q={}", w_q));
  return it->second.front();
}

PeRanking pe_dse(std::span<const PeStyle> candidates, std::span<const int> w_qs,
                 const CalibrationTable& calib, int accumulator_width) {
  if (candidates.empty()) throw ValidationError("PE search needs at least one candidate");
  PeRanking ranking;
  for (int w_q : w_qs) {
    auto& list = ranking.by_wq[w_q];
    for (const auto& style : candidates) {
      if (w_q > style.activation_bits) continue;
      const PeConfig cfg{style, accumulator_width};
      const auto cost = pe_cost(cfg, calib);
      list.push_back({style, w_q, pe_efficiency(cfg, w_q, calib), cost.luts, cost.f_mhz});
    }
    std::sort(list.begin(), list.end(), [](const PeRankEntry& a, const PeRankEntry& b) {
      if (a.efficiency != b.efficiency) return a.efficiency > b.efficiency;
      if (a.luts != b.luts) return a.luts < b.luts;
      return enum_rank(a.style) < enum_rank(b.style);
    });
  }
  return ranking;
}

std::int64_t max_pe_count(const PeConfig& cfg, const HardwareConstraints& hwc,
                          const CalibrationTable& calib) {
  const auto& entry = calib.entry(cfg.style);
  const double overhead = entry.overhead_fraction.value_or(hwc.lut_overhead_fraction);
  return static_cast<std::int64_t>(std::floor(hwc.lut_budget * (1.0 - overhead) / entry.lut_per_pe));
}

double dram_traffic_bits(const NetworkSpec& net, const CalibrationTable& calib, int batch) {
  if (batch < 1) throw ValidationError("batch size must be >= 1");
  double weights = 0.0;
  for (const auto& layer : net.layers) {
    const double per_channel =
        static_cast<double>(layer.kernel) * layer.kernel * layer.input_channels;
    for (const auto& g : layer.weight_groups) weights += per_channel * g.channels * g.bits;
  }
  double image = 0.0;
  if (!net.layers.empty()) {
    const auto& first = net.layers.front();
    image = static_cast<double>(first.input_height) * first.input_height * first.input_channels *
            first.activation_bits;
  }
  return weights / batch + image + calib.base_traffic_bits(net.name);
}

bool design_before(const DesignPoint& a, const DesignPoint& b) {
  auto key = [](const DesignPoint& p) {
    return std::make_tuple(p.total_cycles, p.ports.total(), n_pe(p.dims), p.dims.h, p.dims.w,
                           p.dims.d);
  };
  return key(a) < key(b);
}

namespace {

struct UniqueLayer {
  const ConvLayerSpec* layer;
  std::int64_t count;
};

bool same_shape(const ConvLayerSpec& a, const ConvLayerSpec& b) {
  return a.input_height == b.input_height && a.input_channels == b.input_channels &&
         a.output_channels == b.output_channels && a.kernel == b.kernel &&
         a.stride == b.stride && a.activation_bits == b.activation_bits &&
         a.weight_groups == b.weight_groups;
}

std::vector<UniqueLayer> unique_layers(const NetworkSpec& net) {
  std::vector<UniqueLayer> out;
  for (const auto& layer : net.layers) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const UniqueLayer& u) { return same_shape(*u.layer, layer); });
    if (it == out.end())
      out.push_back({&layer, 1});
    else
      ++it->count;
  }
  return out;
}

/// Per-port stream rates do not depend on the array shape: every stream's
/// bits per cycle scale with exactly its port count.
bool ports_within_bandwidth(const NetworkSpec& net, const PeConfig& cfg,
                            const HardwareConstraints& hwc, double f_mhz,
                            const MappingOptions& mapping) {
  const double lanes_max = pairs_per_issue(cfg, 1);
  for (const auto& layer : net.layers) {
    for (const auto& g : layer.weight_groups) {
      const double cyc = cycles_per_issue(cfg, g.bits);
      const double weights = g.bits / cyc;
      const double acts = pairs_per_issue(cfg, g.bits) * layer.activation_bits / (lanes_max * cyc);
      const double psums = mapping.accumulator_width * (mapping.psum_read_write ? 2 : 1) / cyc;
      const double peak = std::max({weights, acts, psums}) * f_mhz * 1e6;
      if (peak > hwc.onchip_bw_per_port_bits_per_s) return false;
    }
  }
  return true;
}

/// Keeps points not strictly dominated in (cycles, ports, N_PE). `sorted`
/// must follow design_before.
std::vector<DesignPoint> pareto_front(const std::vector<DesignPoint>& sorted) {
  std::vector<DesignPoint> front;
  // Staircase over processed groups: ports -> smallest N_PE seen at or below.
  std::map<std::int64_t, std::int64_t> stair;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    const auto key = [](const DesignPoint& p) {
      return std::make_tuple(p.total_cycles, p.ports.total(), n_pe(p.dims));
    };
    while (j < sorted.size() && key(sorted[j]) == key(sorted[i])) ++j;
    const std::int64_t ports = sorted[i].ports.total();
    const std::int64_t pes = n_pe(sorted[i].dims);
    bool dominated = false;
    auto it = stair.upper_bound(ports);
    if (it != stair.begin()) dominated = std::prev(it)->second <= pes;
    if (!dominated) {
      for (std::size_t m = i; m < j; ++m) front.push_back(sorted[m]);
      auto pos = stair.lower_bound(ports);
      while (pos != stair.end() && pos->second >= pes) pos = stair.erase(pos);
      stair[ports] = pes;
    }
    i = j;
  }
  return front;
}

}  // namespace

ArraySearchResult array_dse(const NetworkSpec& net, const PeConfig& cfg,
                            const HardwareConstraints& hwc, const CalibrationTable& calib,
                            const ArraySearchOptions& opts) {
  validate(cfg);
  validate(hwc);
  validate(net);
  const auto cost = pe_cost(cfg, calib);
  const std::int64_t max_pe = max_pe_count(cfg, hwc, calib);
  if (max_pe < 1)
    throw InfeasibleError(fmt::format("LUT budget admits no {} PE", cfg.style.key()));
  if (!ports_within_bandwidth(net, cfg, hwc, cost.f_mhz, opts.eval.mapping))
    throw InfeasibleError("per-port on-chip bandwidth exceeded for every array shape");

  int max_ih = 1, max_iw = 1, max_od = 1;
  // Widths past ceil(I_W / lanes) only add idle columns, with lanes at the
  // widest weights in the net.
  int lanes = pairs_per_issue(cfg, 1);
  for (const auto& l : net.layers) {
    max_ih = std::max(max_ih, l.input_height);
    max_iw = std::max(max_iw, l.input_channels);
    max_od = std::max(max_od, l.output_channels);
    for (const auto& g : l.weight_groups) lanes = std::min(lanes, pairs_per_issue(cfg, g.bits));
  }
  const int max_w = (max_iw + lanes - 1) / lanes;
  const int max_h = static_cast<int>(std::min<std::int64_t>(max_ih, max_pe));

  const auto layers = unique_layers(net);
  const BufferPlan sized = size_buffers(net, opts.eval.mapping.accumulator_width);
  const double traffic = dram_traffic_bits(net, calib, opts.eval.batch);
  // Average DRAM demand fits when cycles >= traffic * f / bw.
  const double min_cycles = traffic * cost.f_mhz * 1e6 / hwc.dram_bw_bits_per_s;

  struct Local {
    std::vector<DesignPoint> points;
    std::int64_t evaluated = 0;
  };
  const unsigned jobs = std::max(1u, opts.jobs);
  std::vector<Local> locals(jobs);

  auto work = [&](unsigned t) {
    auto& local = locals[t];
    for (int h = 1 + static_cast<int>(t); h <= max_h; h += static_cast<int>(jobs)) {
      for (int w = 1; w <= max_w && static_cast<std::int64_t>(h) * w <= max_pe; ++w) {
        for (int d = 1; d <= max_od && static_cast<std::int64_t>(h) * w * d <= max_pe; ++d) {
          ++local.evaluated;
          const ArrayDims dims{h, w, d};
          const BramPorts ports = bram_npa(dims, cfg);
          if (ports.total() > hwc.bram_budget) continue;
          const auto blocks = assign_blocks(sized, ports, hwc.block_bits).total_blocks;
          if (blocks > hwc.bram_budget) continue;
          std::int64_t cycles = 0;
          for (const auto& u : layers) cycles += u.count * layer_cycles(*u.layer, dims, cfg);
          if (static_cast<double>(cycles) < min_cycles) continue;
          DesignPoint p;
          p.cfg = cfg;
          p.dims = dims;
          p.f_mhz = cost.f_mhz;
          p.total_cycles = cycles;
          p.ports = ports;
          p.bram_blocks = blocks;
          p.luts = static_cast<double>(n_pe(dims)) * cost.luts;
          local.points.push_back(std::move(p));
        }
      }
    }
  };

  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(work, t);
    for (auto& th : threads) th.join();
  }

  ArraySearchResult result;
  result.max_pe = max_pe;
  std::vector<DesignPoint> all;
  for (auto& local : locals) {
    result.evaluated += local.evaluated;
    all.insert(all.end(), std::make_move_iterator(local.points.begin()),
               std::make_move_iterator(local.points.end()));
  }
  result.feasible = static_cast<std::int64_t>(all.size());
  if (all.empty())
    throw InfeasibleError(fmt::format("no feasible PE array for '{}' with {} under the constraints",
                                      net.name, cfg.style.key()));
  std::sort(all.begin(), all.end(), design_before);
  result.pareto = pareto_front(all);
  result.best = build_design(net, cfg, all.front().dims, hwc, calib, opts.eval);
  if (opts.keep_all) result.all = std::move(all);
  return result;
}

DesignPoint build_design(const NetworkSpec& net, const PeConfig& cfg, const ArrayDims& dims,
                         const HardwareConstraints& hwc, const CalibrationTable& calib,
                         const EvalOptions& opts) {
  validate(cfg);
  validate(dims);
  const auto cost = pe_cost(cfg, calib);
  DesignPoint p;
  p.cfg = cfg;
  p.dims = dims;
  p.f_mhz = cost.f_mhz;
  p.mapping = network_cycles(net, dims, cfg, opts.mapping);
  p.total_cycles = p.mapping.total_cycles;
  p.ports = bram_npa(dims, cfg);
  p.bram_blocks =
      buffer_plan(net, dims, cfg, hwc.block_bits, opts.mapping.accumulator_width).total_blocks;
  p.luts = static_cast<double>(n_pe(dims)) * cost.luts;
  return p;
}

DesignReport evaluate(const DesignPoint& design, const NetworkSpec& net,
                      const HardwareConstraints& hwc, const CalibrationTable& calib,
                      const EvalOptions& opts) {
  if (net.layers.empty())
    throw ValidationError(fmt::format("network '{}' has no layers; frames/s is undefined", net.name));
  const auto cost = pe_cost(design.cfg, calib);

  DesignReport r;
  r.network = net.name;
  r.cfg = design.cfg;
  r.dims = design.dims;
  r.n_pe = n_pe(design.dims);
  r.f_mhz = design.f_mhz;
  r.mapping = design.mapping.layers.size() == net.layers.size()
                  ? design.mapping
                  : network_cycles(net, design.dims, design.cfg, opts.mapping);
  r.total_cycles = r.mapping.total_cycles;
  if (r.total_cycles <= 0)
    throw ValidationError(fmt::format("network '{}' needs zero cycles; frames/s is undefined",
                                      net.name));
  r.total_macs = network_macs(net);
  r.frames_per_s = r.f_mhz * 1e6 / static_cast<double>(r.total_cycles);
  r.gops_per_s = 2.0 * static_cast<double>(r.total_macs) * r.frames_per_s / 1e9;

  double compute_pj = 0.0;
  double bram_bits = 0.0;
  double u_sum = 0.0;
  r.utilization.min = 1.0;
  r.utilization.max = 0.0;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    const auto& m = r.mapping.layers[i];
    for (std::size_t g = 0; g < layer.weight_groups.size(); ++g) {
      const auto& group = layer.weight_groups[g];
      compute_pj += static_cast<double>(group_macs(layer, group)) *
                    ppg_ops_per_mac(design.cfg, group.bits) * cost.energy_pj(group.bits);
      bram_bits += m.groups[g].bits_per_cycle.total() * static_cast<double>(m.groups[g].p_actual);
    }
    const double u = m.utilization();
    u_sum += u;
    r.utilization.min = std::min(r.utilization.min, u);
    r.utilization.max = std::max(r.utilization.max, u);
  }
  r.utilization.mean = u_sum / static_cast<double>(net.layers.size());

  r.dram_traffic_bits = dram_traffic_bits(net, calib, opts.batch);
  r.energy.compute_mj = compute_pj * 1e-9;
  r.energy.bram_mj = bram_bits * calib.bram_pj_per_bit * 1e-9;
  r.energy.dram_mj = r.dram_traffic_bits * hwc.dram_energy_pj_per_bit * 1e-9;
  r.energy.total_mj = r.energy.compute_mj + r.energy.bram_mj + r.energy.dram_mj;
  r.gops_per_s_per_w = r.gops_per_s / (r.energy.total_mj * 1e-3 * r.frames_per_s);

  r.kluts = design.luts / 1000.0;
  r.buffers = buffer_plan(net, design.dims, design.cfg, hwc.block_bits,
                          opts.mapping.accumulator_width);
  r.bram_blocks = r.buffers.total_blocks;
  r.ports = r.buffers.ports;
  r.pe_per_dsp = static_cast<double>(r.n_pe) / hwc.dsp_count;
  return r;
}

bool dram_roofline_ok(const DesignPoint& design, const NetworkSpec& net,
                      const HardwareConstraints& hwc, int batch) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    double bits = 0.0;
    const double per_channel =
        static_cast<double>(layer.kernel) * layer.kernel * layer.input_channels;
    for (const auto& g : layer.weight_groups) bits += per_channel * g.channels * g.bits;
    bits /= batch;
    if (i == 0)
      bits += static_cast<double>(layer.input_height) * layer.input_height *
              layer.input_channels * layer.activation_bits;
    const std::int64_t cycles = i < design.mapping.layers.size()
                                    ? design.mapping.layers[i].p_actual
                                    : layer_cycles(layer, design.dims, design.cfg);
    const double seconds = static_cast<double>(cycles) / (design.f_mhz * 1e6);
    if (bits > hwc.dram_bw_bits_per_s * seconds) return false;
  }
  return true;
}

FlowResult full_flow(const NetworkSpec& net, const HardwareConstraints& hwc,
                     const CalibrationTable& calib, const FlowOptions& opts) {
  validate(net);
  auto candidates = opts.candidates;
  if (candidates.empty()) candidates = taxonomy();

  FlowResult flow;
  flow.target_wq = dominant_weight_bits(net);
  std::set<int> w_qs{flow.target_wq};
  for (const auto& l : net.layers)
    for (const auto& g : l.weight_groups) w_qs.insert(g.bits);
  const std::vector<int> wq_list(w_qs.begin(), w_qs.end());
  flow.ranking = pe_dse(candidates, wq_list, calib, hwc.accumulator_width);
  const PeConfig cfg{flow.ranking.winner(flow.target_wq).style, hwc.accumulator_width};

  if (opts.dims) {
    flow.design = build_design(net, cfg, *opts.dims, hwc, calib, opts.search.eval);
    if (!dram_roofline_ok(flow.design, net, hwc, opts.search.eval.batch))
      throw InfeasibleError("the given array exceeds the DRAM bandwidth on at least one layer");
    flow.search_space = 1;
  } else {
    const auto search = array_dse(net, cfg, hwc, calib, opts.search);
    flow.search_space = search.evaluated;
    bool found = false;
    for (const auto& point : search.pareto) {
      auto design = build_design(net, cfg, point.dims, hwc, calib, opts.search.eval);
      if (dram_roofline_ok(design, net, hwc, opts.search.eval.batch)) {
        flow.design = std::move(design);
        found = true;
        break;
      }
      ++flow.rejected_points;
    }
    if (!found)
      throw InfeasibleError("every Pareto-optimal array exceeds the DRAM bandwidth on some layer");
  }
  flow.report = evaluate(flow.design, net, hwc, calib, opts.search.eval);
  return flow;
}

}  // namespace mpdse
