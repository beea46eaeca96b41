#include "mpdse/calibration.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "mpdse/error.hpp"
#include "json_util.hpp"

namespace mpdse {

namespace detail {
std::string_view default_calibration_json();
}

using nlohmann::json;

namespace {

double positive(const json& obj, const char* field, const std::string& where) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_number())
    throw ValidationError(fmt::format("{}: field '{}': missing or not a number", where, field));
  const double v = it->get<double>();
  if (!(v > 0.0))
    throw ValidationError(fmt::format("{}: field '{}': must be > 0, got {}", where, field, v));
  return v;
}

}  // namespace

CalibrationTable CalibrationTable::parse(std::string_view text) {
  const json doc = detail::parse_json(text, "calibration");
  if (!doc.is_object()) throw ValidationError("calibration: top level must be an object");
  detail::reject_unknown(doc,
                         {"schema", "notes", "bram_pj_per_bit", "dram", "dsp_vs_lut_efficiency",
                          "dsp_8to1_energy_ratio", "pe"},
                         "calibration");

  CalibrationTable t;
  t.bram_pj_per_bit = positive(doc, "bram_pj_per_bit", "calibration");
  if (doc.contains("dsp_vs_lut_efficiency"))
    t.dsp_vs_lut_efficiency = positive(doc, "dsp_vs_lut_efficiency", "calibration");
  if (doc.contains("dsp_8to1_energy_ratio"))
    t.dsp_8to1_energy_ratio = positive(doc, "dsp_8to1_energy_ratio", "calibration");
  if (auto it = doc.find("notes"); it != doc.end()) {
    for (const auto& n : *it)
      if (n.is_string()) t.notes.push_back(n.get<std::string>());
  }
  if (auto dram = doc.find("dram"); dram != doc.end()) {
    detail::reject_unknown(*dram, {"base_traffic_bits"}, "calibration.dram");
    if (auto base = dram->find("base_traffic_bits"); base != dram->end()) {
      for (const auto& [net, bits] : base->items()) {
        if (!bits.is_number() || bits.get<double>() < 0.0)
          throw ValidationError(
              fmt::format("calibration.dram.base_traffic_bits.{}: must be >= 0", net));
        t.base_traffic[net] = bits.get<double>();
      }
    }
  }

  auto pe = doc.find("pe");
  if (pe == doc.end() || !pe->is_object())
    throw ValidationError("calibration: field 'pe': missing or not an object");
  for (const auto& [key, value] : pe->items()) {
    const std::string where = fmt::format("calibration.pe.{}", key);
    if (!value.is_object()) throw ValidationError(where + ": expected an object");
    detail::reject_unknown(value,
                           {"lut_per_pe", "f_mhz", "energy_pj_per_ppg_op", "overhead_fraction",
                            "note"},
                           where);
    CalibrationEntry e;
    e.lut_per_pe = positive(value, "lut_per_pe", where);
    e.f_mhz = positive(value, "f_mhz", where);
    auto energy = value.find("energy_pj_per_ppg_op");
    if (energy == value.end() || !energy->is_object())
      throw ValidationError(where + ": field 'energy_pj_per_ppg_op': missing or not an object");
    for (const auto& [wq, pj] : energy->items()) {
      int bits = 0;
      auto [ptr, ec] = std::from_chars(wq.data(), wq.data() + wq.size(), bits);
      if (ec != std::errc{} || ptr != wq.data() + wq.size() || bits < 1)
        throw ValidationError(fmt::format("{}: energy key '{}' is not a word-length", where, wq));
      if (!pj.is_number() || !(pj.get<double>() > 0.0))
        throw ValidationError(fmt::format("{}: energy for w_Q={} must be > 0", where, bits));
      e.energy_pj_per_ppg_op[bits] = pj.get<double>();
    }
    if (auto ov = value.find("overhead_fraction"); ov != value.end()) {
      if (!ov->is_number() || ov->get<double>() < 0.0 || ov->get<double>() >= 1.0)
        throw ValidationError(where + ": overhead_fraction must be in [0, 1)");
      e.overhead_fraction = ov->get<double>();
    }
    if (auto note = value.find("note"); note != value.end() && note->is_string())
      e.note = note->get<std::string>();
    t.entries.emplace(key, std::move(e));
  }
  return t;
}

CalibrationTable CalibrationTable::load(const std::string& path) {
  return parse(detail::read_file(path, "calibration"));
}

const CalibrationTable& CalibrationTable::defaults() {
  static const CalibrationTable table = parse(detail::default_calibration_json());
  return table;
}

bool CalibrationTable::has(const PeStyle& style) const {
  return entries.count(style.key()) != 0;
}

const CalibrationEntry& CalibrationTable::entry(const PeStyle& style) const {
  const auto key = style.key();
  auto it = entries.find(key);
  if (it == entries.end())
    throw CalibrationError(fmt::format("calibration has no entry for '{}'", key), key);
  return it->second;
}

double CalibrationTable::base_traffic_bits(std::string_view network) const {
  auto it = base_traffic.find(std::string(network));
  return it == base_traffic.end() ? 0.0 : it->second;
}

std::string CalibrationTable::to_json() const {
  json pe = json::object();
  for (const auto& [key, e] : entries) {
    json energy = json::object();
    for (const auto& [bits, pj] : e.energy_pj_per_ppg_op) energy[std::to_string(bits)] = pj;
    json j{{"lut_per_pe", e.lut_per_pe}, {"f_mhz", e.f_mhz}, {"energy_pj_per_ppg_op", energy}};
    if (e.overhead_fraction) j["overhead_fraction"] = *e.overhead_fraction;
    if (!e.note.empty()) j["note"] = e.note;
    pe[key] = std::move(j);
  }
  json base = json::object();
  for (const auto& [net, bits] : base_traffic) base[net] = bits;
  json doc{{"schema", 1},
           {"notes", notes},
           {"bram_pj_per_bit", bram_pj_per_bit},
           {"dram", {{"base_traffic_bits", base}}},
           {"dsp_vs_lut_efficiency", dsp_vs_lut_efficiency},
           {"dsp_8to1_energy_ratio", dsp_8to1_energy_ratio},
           {"pe", pe}};
  return doc.dump(2);
}

double PeCost::energy_pj(int w_q) const {
  auto it = energy_pj_per_ppg_op.find(w_q);
  if (it == energy_pj_per_ppg_op.end()) {
    const auto k = fmt::format("{}/energy_pj_per_ppg_op/{}", key, w_q);
    throw CalibrationError(fmt::format("calibration has no entry for '{}'", k), k);
  }
  return it->second;
}

PeCost pe_cost(const PeConfig& cfg, const CalibrationTable& calib) {
  const auto& e = calib.entry(cfg.style);
  return PeCost{e.lut_per_pe, e.f_mhz, e.energy_pj_per_ppg_op, cfg.style.key()};
}

double pe_efficiency(const PeConfig& cfg, int w_q, const CalibrationTable& calib) {
  const auto cost = pe_cost(cfg, calib);
  const double bits = cfg.style.activation_bits + w_q;
  return bits * pairs_per_issue(cfg, w_q) * cost.f_mhz * 1e6 /
         (cycles_per_issue(cfg, w_q) * cost.luts);
}

}  // namespace mpdse
