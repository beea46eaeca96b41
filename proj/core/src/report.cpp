#include "mpdse/report.hpp"

#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "mpdse/error.hpp"
#include "json_util.hpp"

#ifndef MPDSE_VERSION
#define MPDSE_VERSION "0.0.0"
#endif

namespace mpdse {

using nlohmann::json;

std::string_view version() { return MPDSE_VERSION; }

namespace {

void schema_line(std::ostream& out, std::string_view name) {
  out << fmt::format("# schema: {} v{}\n", name, kCsvSchemaVersion);
}

std::string dims_text(const ArrayDims& d) { return fmt::format("({},{},{})", d.h, d.w, d.d); }

double rational_value(const Rational& r) { return boost::rational_cast<double>(r); }

}  // namespace

void write_pe_ranking_csv(std::ostream& out, const PeRanking& ranking) {
  schema_line(out, "pe_ranking");
  out << "style,k,w_Q,rank,bits_per_s_per_lut,luts,f_mhz\n";
  for (const auto& [w_q, list] : ranking.by_wq) {
    int rank = 1;
    for (const auto& e : list)
      out << fmt::format("{},{},{},{},{},{},{}\n", e.style.name(), e.style.slice_bits, w_q,
                         rank++, e.efficiency, e.luts, e.f_mhz);
  }
}

std::string render_pe_ranking(const PeRanking& ranking) {
  std::string out;
  for (const auto& [w_q, list] : ranking.by_wq) {
    out += fmt::format("w_Q = {} bit\n", w_q);
    out += fmt::format("  {:>4}  {:<10} {:>2}  {:>16}  {:>9}  {:>6}\n", "rank", "style", "k",
                       "Mbit/s/LUT", "LUT/PE", "MHz");
    int rank = 1;
    for (const auto& e : list)
      out += fmt::format("  {:>4}  {:<10} {:>2}  {:>16.4f}  {:>9.2f}  {:>6.1f}\n", rank++,
                         e.style.name(), e.style.slice_bits, e.efficiency / 1e6, e.luts,
                         e.f_mhz);
  }
  return out;
}

void write_mapping_csv(std::ostream& out, const NetworkMapping& mapping, double f_mhz,
                       const NetworkSpec& net) {
  schema_line(out, "mapping");
  out << "layer,H,W,D,w_Q,channels,P_ideal,P_actual,U,bw_weights,bw_acts,bw_psums\n";
  const double hz = f_mhz * 1e6;
  for (std::size_t i = 0; i < mapping.layers.size(); ++i) {
    const auto& m = mapping.layers[i];
    const std::string& name = i < net.layers.size() ? net.layers[i].name : m.layer;
    for (const auto& g : m.groups) {
      const double u = g.p_actual == 0 ? 0.0 : rational_value(g.p_ideal) / g.p_actual;
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", name, m.dims.h, m.dims.w,
                         m.dims.d, g.bits, g.channels, rational_value(g.p_ideal), g.p_actual, u,
                         g.bits_per_cycle.weights * hz, g.bits_per_cycle.activations * hz,
                         g.bits_per_cycle.psums * hz);
    }
  }
}

void write_report_csv(std::ostream& out, const DesignReport& r) {
  schema_line(out, "report");
  out << "network,style,k,H,W,D,n_pe,f_mhz,cycles,macs,frames_per_s,gops_per_s,gops_per_s_per_w,"
         "energy_compute_mj,energy_bram_mj,energy_dram_mj,energy_total_mj,u_min,u_mean,u_max,"
         "kluts,bram_blocks,bram_npa\n";
  out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                     r.network, r.cfg.style.name(), r.cfg.style.slice_bits, r.dims.h, r.dims.w,
                     r.dims.d, r.n_pe, r.f_mhz, r.total_cycles, r.total_macs, r.frames_per_s,
                     r.gops_per_s, r.gops_per_s_per_w, r.energy.compute_mj, r.energy.bram_mj,
                     r.energy.dram_mj, r.energy.total_mj, r.utilization.min, r.utilization.mean,
                     r.utilization.max, r.kluts, r.bram_blocks, r.ports.total());
}

std::string render_report(const DesignReport& r) {
  std::string out;
  out += fmt::format("network          {}\n", r.network);
  out += fmt::format("PE               {} k={} (acc {} bit)\n", r.cfg.style.name(),
                     r.cfg.style.slice_bits, r.cfg.accumulator_width);
  out += fmt::format("array (H,W,D)    {}  N_PE {}  ({:.2f} per DSP)\n", dims_text(r.dims),
                     r.n_pe, r.pe_per_dsp);
  out += fmt::format("resources        {:.2f} kLUT (PEs)  {} BRAM blocks  {} parallel ports\n",
                     r.kluts, r.bram_blocks, r.ports.total());
  out += fmt::format("clock            {:.1f} MHz  {} cycles/frame\n", r.f_mhz, r.total_cycles);
  out += fmt::format("throughput       {:.2f} frames/s  {:.2f} GOps/s  {:.3f} GOps/s/W\n",
                     r.frames_per_s, r.gops_per_s, r.gops_per_s_per_w);
  out += fmt::format("energy/frame     compute {:.2f} mJ  BRAM {:.2f} mJ  DRAM {:.2f} mJ  total "
                     "{:.2f} mJ\n",
                     r.energy.compute_mj, r.energy.bram_mj, r.energy.dram_mj, r.energy.total_mj);
  out += fmt::format("utilization      min {:.3f}  mean {:.3f}  max {:.3f}\n", r.utilization.min,
                     r.utilization.mean, r.utilization.max);
  return out;
}

namespace {

json ports_json(const BramPorts& p) {
  return {{"psums", p.psums}, {"activations", p.activations}, {"weights", p.weights},
          {"total", p.total()}};
}

json pe_json(const PeConfig& cfg) {
  return {{"style", cfg.style.name()},
          {"k", cfg.style.slice_bits},
          {"n_bits", cfg.style.activation_bits},
          {"accumulator_width", cfg.accumulator_width}};
}

}  // namespace

std::string report_json(const DesignReport& r, const CalibrationTable& calib,
                        const HardwareConstraints& hwc) {
  json layers = json::array();
  for (const auto& m : r.mapping.layers) {
    for (const auto& g : m.groups) {
      layers.push_back({{"layer", m.layer},
                        {"w_Q", g.bits},
                        {"channels", g.channels},
                        {"packing", g.packing},
                        {"cycles_per_issue", g.cycles_per_issue},
                        {"P_ideal", rational_value(g.p_ideal)},
                        {"P_actual", g.p_actual},
                        {"U", g.p_actual == 0 ? 0.0 : rational_value(g.p_ideal) / g.p_actual},
                        {"bw_weights", g.bits_per_cycle.weights * r.f_mhz * 1e6},
                        {"bw_acts", g.bits_per_cycle.activations * r.f_mhz * 1e6},
                        {"bw_psums", g.bits_per_cycle.psums * r.f_mhz * 1e6}});
    }
  }
  json doc{
      {"tool", "mpdse"},
      {"version", version()},
      {"network", r.network},
      {"pe", pe_json(r.cfg)},
      {"dims", {{"H", r.dims.h}, {"W", r.dims.w}, {"D", r.dims.d}}},
      {"n_pe", r.n_pe},
      {"pe_per_dsp", r.pe_per_dsp},
      {"f_mhz", r.f_mhz},
      {"total_cycles", r.total_cycles},
      {"total_macs", r.total_macs},
      {"frames_per_s", r.frames_per_s},
      {"gops_per_s", r.gops_per_s},
      {"gops_per_s_per_w", r.gops_per_s_per_w},
      {"energy_mj",
       {{"compute", r.energy.compute_mj},
        {"bram", r.energy.bram_mj},
        {"dram", r.energy.dram_mj},
        {"total", r.energy.total_mj}}},
      {"utilization",
       {{"min", r.utilization.min}, {"mean", r.utilization.mean}, {"max", r.utilization.max}}},
      {"kluts", r.kluts},
      {"bram_blocks", r.bram_blocks},
      {"bram_npa", ports_json(r.ports)},
      {"buffers",
       {{"weight_bits", r.buffers.weight_bits},
        {"activation_bits", r.buffers.activation_bits},
        {"psum_bits", r.buffers.psum_bits},
        {"block_bits", r.buffers.block_bits},
        {"weight_blocks", r.buffers.weight_blocks},
        {"activation_blocks", r.buffers.activation_blocks},
        {"psum_blocks", r.buffers.psum_blocks}}},
      {"dram_traffic_bits", r.dram_traffic_bits},
      {"layers", layers},
      {"calibration", json::parse(calib.to_json())},
      {"constraints", json::parse(hwc.to_json())}};
  return doc.dump(2) + "\n";
}

std::string design_json(const SavedDesign& d) {
  json doc{{"schema", 1},
           {"tool", "mpdse"},
           {"version", version()},
           {"network", json::parse(serialize_workload(d.net))},
           {"pe", pe_json(d.cfg)},
           {"dims", {{"H", d.dims.h}, {"W", d.dims.w}, {"D", d.dims.d}}},
           {"batch", d.batch},
           {"constraints", json::parse(d.hwc.to_json())}};
  return doc.dump(2) + "\n";
}

SavedDesign parse_design_json(std::string_view text) {
  const json doc = detail::parse_json(text, "design");
  detail::reject_unknown(doc, {"schema", "tool", "version", "network", "pe", "dims", "batch",
                               "constraints"},
                         "design");
  try {
    SavedDesign d;
    d.net = parse_workload(doc.at("network").dump());
    const auto& pe = doc.at("pe");
    d.cfg.style = parse_style(pe.at("style").get<std::string>(), pe.at("k").get<int>(),
                              pe.value("n_bits", 8));
    d.cfg.accumulator_width = pe.value("accumulator_width", 30);
    validate(d.cfg);
    const auto& dims = doc.at("dims");
    d.dims = {dims.at("H").get<int>(), dims.at("W").get<int>(), dims.at("D").get<int>()};
    validate(d.dims);
    d.batch = doc.value("batch", 1);
    d.hwc = doc.contains("constraints") ? HardwareConstraints::parse(doc.at("constraints").dump())
                                        : HardwareConstraints::defaults();
    return d;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("design: {}", e.what()));
  }
}

std::string render_footprint(const FootprintSummary& s) {
  const auto unit = to_string(s.policy.unit);
  std::string out;
  out += fmt::format("network            {}\n", s.network);
  out += fmt::format("policy             projections {}, stem {}, unit {} ({})\n",
                     s.policy.include_projection_convs ? "included" : "excluded",
                     s.policy.include_stem_last_8bit ? "included" : "excluded", unit,
                     s.policy.unit == FootprintUnit::megabytes ? "1 MB = 8e6 bits"
                     : s.policy.unit == FootprintUnit::megabits ? "1 Mbit = 1e6 bits"
                                                                : "raw bits");
  out += fmt::format("baseline ({:>2} bit)  {:.3f} {}\n", s.baseline_bits, s.baseline, unit);
  out += fmt::format("quantized          {:.3f} {}\n", s.quantized, unit);
  out += fmt::format("compression        {:.2f}x\n", s.compression);
  return out;
}

std::string footprint_json(const FootprintSummary& s) {
  json doc{{"network", s.network},
           {"policy",
            {{"include_projection_convs", s.policy.include_projection_convs},
             {"include_stem_last_8bit", s.policy.include_stem_last_8bit},
             {"unit", to_string(s.policy.unit)},
             {"unit_convention", "1 Mbit = 1e6 bits, 1 MB = 8e6 bits"}}},
           {"baseline_bits", s.baseline_bits},
           {"baseline", s.baseline},
           {"quantized", s.quantized},
           {"compression", s.compression}};
  return doc.dump(2) + "\n";
}

void write_footprint_csv(std::ostream& out, const FootprintSummary& s) {
  schema_line(out, "footprint");
  out << "network,include_projection_convs,include_stem_last_8bit,unit,baseline_bits,baseline,"
         "quantized,compression\n";
  out << fmt::format("{},{},{},{},{},{},{},{}\n", s.network, s.policy.include_projection_convs,
                     s.policy.include_stem_last_8bit, to_string(s.policy.unit), s.baseline_bits,
                     s.baseline, s.quantized, s.compression);
}

}  // namespace mpdse
