#include "cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "mpdse/calibration.hpp"
#include "mpdse/dataflow.hpp"
#include "mpdse/dse.hpp"
#include "mpdse/error.hpp"
#include "mpdse/pe.hpp"
#include "mpdse/quant.hpp"
#include "mpdse/report.hpp"
#include "mpdse/workload.hpp"

namespace mpdse::cli {

namespace {

using nlohmann::json;

struct Globals {
  std::string calib;
  std::string constraints;
  std::string out_dir = ".";
  std::string format = "table";
  unsigned jobs = 1;
  std::uint64_t seed = 20240527;
};

/// Raised when a simulation finds a mismatch; carries the exit code path.
struct MismatchFound {};

CalibrationTable load_calibration(const Globals& g) {
  return g.calib.empty() ? CalibrationTable::defaults() : CalibrationTable::load(g.calib);
}

HardwareConstraints load_constraints(const Globals& g) {
  return g.constraints.empty() ? HardwareConstraints::defaults()
                               : HardwareConstraints::load(g.constraints);
}

NetworkSpec resolve_net(const std::string& net, std::optional<int> wq) {
  if (is_builtin_network(net)) return builtin_network(net, wq.value_or(8));
  if (wq) throw ValidationError("--wq applies to built-in networks only");
  return load_workload(net);
}

std::filesystem::path output_path(const Globals& g, std::string_view name) {
  std::filesystem::create_directories(g.out_dir);
  return std::filesystem::path(g.out_dir) / std::string(name);
}

void write_text(const Globals& g, std::string_view name, const std::string& text) {
  const auto path = output_path(g, name);
  std::ofstream file(path);
  if (!file) throw Error(fmt::format("cannot write '{}'", path.string()));
  file << text;
}

std::vector<PeStyle> select_styles(const std::vector<std::string>& names,
                                   const std::vector<int>& ks, int n_bits) {
  std::vector<PeStyle> out;
  if (names.empty()) return taxonomy(ks, n_bits);
  for (const auto& name : names)
    for (int k : ks) out.push_back(parse_style(name, k, n_bits));
  return out;
}

// --- pe-dse -----------------------------------------------------------------

struct PeDseArgs {
  std::vector<int> wq{1, 2, 4, 8};
  std::vector<int> k{1, 2, 4};
  std::vector<std::string> styles;
  int n_bits = 8;
};

int cmd_pe_dse(const Globals& g, const PeDseArgs& a, std::ostream& out) {
  const auto calib = load_calibration(g);
  const auto hwc = load_constraints(g);
  const auto styles = select_styles(a.styles, a.k, a.n_bits);
  const auto ranking = pe_dse(styles, a.wq, calib, hwc.accumulator_width);

  std::ostringstream csv;
  write_pe_ranking_csv(csv, ranking);
  write_text(g, "pe_ranking.csv", csv.str());

  if (g.format == "csv") {
    out << csv.str();
  } else if (g.format == "json") {
    json doc = json::object();
    for (const auto& [w_q, list] : ranking.by_wq) {
      json rows = json::array();
      for (const auto& e : list)
        rows.push_back({{"style", e.style.name()},
                        {"k", e.style.slice_bits},
                        {"bits_per_s_per_lut", e.efficiency},
                        {"luts", e.luts},
                        {"f_mhz", e.f_mhz}});
      doc[std::to_string(w_q)] = std::move(rows);
    }
    out << doc.dump(2) << "\n";
  } else {
    out << render_pe_ranking(ranking);
    for (const auto& [w_q, list] : ranking.by_wq)
      out << fmt::format("winner at w_Q={}: {} k={}\n", w_q, list.front().style.name(),
                         list.front().style.slice_bits);
  }
  return kExitOk;
}

// --- explore ----------------------------------------------------------------

struct ExploreArgs {
  std::string net = "resnet18";
  std::optional<int> wq;
  std::vector<int> k{1, 2, 4};
  std::vector<std::string> styles;
  std::vector<int> dims;
  int batch = 1;
};

void emit_report(const Globals& g, const DesignReport& report, const NetworkSpec& net,
                 const SavedDesign& saved, const CalibrationTable& calib, std::ostream& out,
                 bool write_files) {
  const auto json_text = report_json(report, calib, saved.hwc);
  if (write_files) {
    write_text(g, "design.json", design_json(saved));
    std::ostringstream mapping;
    write_mapping_csv(mapping, report.mapping, report.f_mhz, net);
    write_text(g, "mapping.csv", mapping.str());
    write_text(g, "report.json", json_text);
  }
  if (g.format == "json") {
    out << json_text;
  } else if (g.format == "csv") {
    write_report_csv(out, report);
  } else {
    out << render_report(report);
  }
}

int cmd_explore(const Globals& g, const ExploreArgs& a, std::ostream& out) {
  const auto calib = load_calibration(g);
  const auto hwc = load_constraints(g);
  const auto net = resolve_net(a.net, a.wq);

  FlowOptions opts;
  opts.candidates = select_styles(a.styles, a.k, net.layers.front().activation_bits);
  opts.search.jobs = g.jobs;
  opts.search.eval.batch = a.batch;
  opts.search.eval.mapping.accumulator_width = hwc.accumulator_width;
  if (!a.dims.empty()) {
    if (a.dims.size() != 3) throw ValidationError("--dims expects H,W,D");
    opts.dims = ArrayDims{a.dims[0], a.dims[1], a.dims[2]};
  }
  const auto flow = full_flow(net, hwc, calib, opts);

  SavedDesign saved{net, flow.design.cfg, flow.design.dims, hwc, a.batch};
  emit_report(g, flow.report, net, saved, calib, out, true);
  if (g.format == "table") {
    out << fmt::format("search           {} candidate arrays, {} Pareto points skipped by the DRAM "
                       "roofline\n",
                       flow.search_space, flow.rejected_points);
  }
  return kExitOk;
}

// --- report -----------------------------------------------------------------

int cmd_report(const Globals& g, const std::string& design_path, std::ostream& out) {
  const auto calib = load_calibration(g);
  const std::string path =
      design_path.empty() ? (std::filesystem::path(g.out_dir) / "design.json").string()
                          : design_path;
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open design file '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto saved = parse_design_json(buffer.str());
  if (!g.constraints.empty()) saved.hwc = HardwareConstraints::load(g.constraints);

  EvalOptions eval;
  eval.batch = saved.batch;
  eval.mapping.accumulator_width = saved.cfg.accumulator_width;
  const auto design = build_design(saved.net, saved.cfg, saved.dims, saved.hwc, calib, eval);
  const auto report = evaluate(design, saved.net, saved.hwc, calib, eval);
  emit_report(g, report, saved.net, saved, calib, out, false);
  return kExitOk;
}

// --- footprint --------------------------------------------------------------

struct FootprintArgs {
  std::string net = "resnet18";
  std::optional<int> wq;
  std::string baseline = "fp32";
  std::string unit = "Mbit";
  bool exclude_projections = false;
  bool exclude_stem = false;
};

/// Published compression factors of the built-in nets, echoed for
/// comparison only.
std::optional<double> reference_compression(const std::string& net, int wq) {
  struct Ref {
    const char* net;
    int wq;
    double factor;
  };
  static constexpr Ref refs[] = {{"resnet18", 1, 5.1},  {"resnet18", 2, 4.9},
                                 {"resnet18", 4, 4.6},  {"resnet50", 1, 6.0},
                                 {"resnet50", 2, 5.6},  {"resnet50", 4, 4.9},
                                 {"resnet152", 1, 12.2}, {"resnet152", 2, 9.4},
                                 {"resnet152", 4, 6.5}};
  for (const auto& r : refs)
    if (net == r.net && wq == r.wq) return r.factor;
  return std::nullopt;
}

int parse_baseline(const std::string& text) {
  if (text == "fp32") return 32;
  if (text == "fp16") return 16;
  if (text == "int8") return 8;
  try {
    std::size_t used = 0;
    const int bits = std::stoi(text, &used);
    if (used == text.size() && bits > 0) return bits;
  } catch (const std::exception&) {
  }
  throw ValidationError(fmt::format("unknown baseline '{}' (fp32, fp16, int8 or a bit count)", text));
}

int cmd_footprint(const Globals& g, const FootprintArgs& a, std::ostream& out) {
  const auto net = resolve_net(a.net, a.wq);
  FootprintSummary s;
  s.network = net.name;
  s.policy.include_projection_convs = !a.exclude_projections;
  s.policy.include_stem_last_8bit = !a.exclude_stem;
  s.policy.unit = parse_footprint_unit(a.unit);
  s.baseline_bits = parse_baseline(a.baseline);
  s.baseline = footprint_uniform(net, s.policy, s.baseline_bits);
  s.quantized = footprint(net, s.policy);
  s.compression = compression_factor(s.baseline, s.quantized);

  if (g.format == "json") {
    out << footprint_json(s);
  } else if (g.format == "csv") {
    write_footprint_csv(out, s);
  } else {
    out << render_footprint(s);
    if (a.wq && s.baseline_bits == 32) {
      if (auto ref = reference_compression(a.net, *a.wq))
        out << fmt::format("reference          {:.1f}x (published, not asserted)\n", *ref);
    }
  }
  return kExitOk;
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  int k = 2;
  std::vector<std::string> styles;
  int n_bits = 8;
  std::vector<int> wq{1, 2, 4, 8};
  bool exhaustive = false;
  int vectors = 200;
  int length = 576;
  std::string layer;
  bool channelwise = false;
  int samples = 4;
};

struct SimStats {
  std::int64_t checks = 0;
  std::int64_t mismatches = 0;
  std::string first;
};

std::string dump_operands(const std::vector<std::int64_t>& v) {
  constexpr std::size_t limit = 16;
  std::string s = "[";
  for (std::size_t i = 0; i < v.size() && i < limit; ++i) s += (i ? "," : "") + std::to_string(v[i]);
  if (v.size() > limit) s += fmt::format(",... ({} total)", v.size());
  return s + "]";
}

void check_dot(const PeConfig& cfg, int w_q, const std::vector<std::int64_t>& a,
               const std::vector<std::int64_t>& w, SimStats& stats) {
  std::int64_t expected = 0;
  for (std::size_t i = 0; i < a.size(); ++i) expected += a[i] * w[i];
  ++stats.checks;
  std::string failure;
  try {
    PeAccumulator acc(cfg, w_q);
    const std::size_t lanes = static_cast<std::size_t>(pairs_per_issue(cfg, w_q));
    for (std::size_t i = 0; i < a.size(); i += lanes) {
      const std::size_t n = std::min(lanes, a.size() - i);
      acc.issue(std::span(a).subspan(i, n), std::span(w).subspan(i, n));
    }
    const auto got = acc.finalize();
    if (got != expected) failure = fmt::format("got {}", got);
  } catch (const OverflowError& e) {
    failure = e.what();
  }
  if (failure.empty()) return;
  if (stats.mismatches++ == 0)
    stats.first = fmt::format("{} k={} w_Q={} a={} w={} expected {} {}", cfg.style.name(),
                              cfg.style.slice_bits, w_q, dump_operands(a), dump_operands(w),
                              expected, failure);
}

int cmd_simulate(const Globals& g, const SimulateArgs& a, std::ostream& out) {
  const auto hwc = load_constraints(g);
  const std::vector<int> ks{a.k};
  const auto styles = select_styles(a.styles, ks, a.n_bits);
  std::mt19937_64 rng(g.seed);
  SimStats stats;
  std::string mode;

  auto weight_range = [](int w_q) {
    return std::uniform_int_distribution<std::int64_t>(-(std::int64_t{1} << (w_q - 1)),
                                                       (std::int64_t{1} << (w_q - 1)) - 1);
  };
  std::uniform_int_distribution<std::int64_t> act(0, (std::int64_t{1} << a.n_bits) - 1);

  if (!a.layer.empty()) {
    mode = "layer";
    const auto net = load_workload(a.layer);
    for (const auto& style : styles) {
      const PeConfig cfg{style, hwc.accumulator_width};
      for (const auto& layer : net.layers) {
        if (layer.channelwise() && !a.channelwise)
          throw ValidationError(
              fmt::format("layer '{}' is channel-wise; pass --channelwise", layer.name));
        const std::size_t len =
            static_cast<std::size_t>(layer.kernel) * layer.kernel * layer.input_channels;
        for (const auto& group : layer.weight_groups) {
          auto wdist = weight_range(group.bits);
          for (int s = 0; s < a.samples; ++s) {
            std::vector<std::int64_t> av(len), wv(len);
            for (auto& x : av) x = act(rng);
            for (auto& x : wv) x = wdist(rng);
            check_dot(cfg, group.bits, av, wv, stats);
          }
        }
      }
    }
  } else if (a.exhaustive) {
    mode = "exhaustive";
    for (const auto& style : styles) {
      const PeConfig cfg{style, hwc.accumulator_width};
      for (int w_q : a.wq) {
        if (w_q > a.n_bits) continue;
        for (std::int64_t av = 0; av < (std::int64_t{1} << a.n_bits); ++av)
          for (std::int64_t wv = -(std::int64_t{1} << (w_q - 1));
               wv < (std::int64_t{1} << (w_q - 1)); ++wv) {
            ++stats.checks;
            const std::int64_t x[1] = {av};
            const std::int64_t y[1] = {wv};
            const auto r = pe_mac(cfg, x, y, w_q);
            if (r.result != av * wv && stats.mismatches++ == 0)
              stats.first = fmt::format("{} k={} w_Q={} a={} w={} expected {} got {}",
                                        style.name(), style.slice_bits, w_q, av, wv, av * wv,
                                        r.result);
          }
      }
    }
  } else {
    mode = "random";
    for (const auto& style : styles) {
      const PeConfig cfg{style, hwc.accumulator_width};
      for (int w_q : a.wq) {
        if (w_q > a.n_bits) continue;
        auto wdist = weight_range(w_q);
        for (int v = 0; v < a.vectors; ++v) {
          std::vector<std::int64_t> av(static_cast<std::size_t>(a.length)),
              wv(static_cast<std::size_t>(a.length));
          for (auto& x : av) x = act(rng);
          for (auto& x : wv) x = wdist(rng);
          check_dot(cfg, w_q, av, wv, stats);
        }
      }
    }
  }

  json summary{{"mode", mode},
               {"k", a.k},
               {"seed", g.seed},
               {"checks", stats.checks},
               {"mismatches", stats.mismatches},
               {"status", stats.mismatches == 0 ? "pass" : "fail"}};
  if (!stats.first.empty()) summary["first_counterexample"] = stats.first;
  write_text(g, "simulate.json", summary.dump(2) + "\n");

  if (g.format == "json") {
    out << summary.dump(2) << "\n";
  } else if (g.format == "csv") {
    out << fmt::format("# schema: simulate v{}\nmode,k,seed,checks,mismatches,status\n",
                       kCsvSchemaVersion)
        << fmt::format("{},{},{},{},{},{}\n", mode, a.k, g.seed, stats.checks, stats.mismatches,
                       stats.mismatches == 0 ? "pass" : "fail");
  } else {
    out << fmt::format("simulate ({}, k={}): {} checks, {} mismatches: {}\n", mode, a.k,
                       stats.checks, stats.mismatches, stats.mismatches == 0 ? "PASS" : "FAIL");
    if (!stats.first.empty()) out << "first counterexample: " << stats.first << "\n";
  }
  if (stats.mismatches != 0) throw MismatchFound{};
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Design-space exploration and bit-exact simulation of mixed-precision CNN "
               "accelerators",
               "mpdse"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  g.jobs = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--calib", g.calib, "Calibration JSON (default: embedded)")
      ->envname("MPDSE_CALIB")
      ->check(CLI::ExistingFile);
  app.add_option("--constraints", g.constraints, "Hardware constraints JSON (default: embedded)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", g.out_dir, "Output directory for CSV/JSON artifacts")
      ->capture_default_str();
  app.add_option("--format", g.format, "Standard output format")
      ->check(CLI::IsMember({"table", "csv", "json"}))
      ->capture_default_str();
  app.add_option("--jobs", g.jobs, "Parallel candidate evaluation threads")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed for randomized simulation")->capture_default_str();

  PeDseArgs pe_args;
  auto* pe = app.add_subcommand("pe-dse", "Rank PE designs by processed bits/s/LUT");
  pe->add_option("--wq", pe_args.wq, "Weight word-lengths to rank at")
      ->delimiter(',')
      ->capture_default_str();
  pe->add_option("--k", pe_args.k, "Operand slice widths")->delimiter(',')->capture_default_str();
  pe->add_option("--styles", pe_args.styles, "Restrict to styles such as bp-st-1d")
      ->delimiter(',');
  pe->add_option("--n-bits", pe_args.n_bits, "Activation width N")->capture_default_str();

  ExploreArgs ex_args;
  auto* ex = app.add_subcommand("explore", "Full flow: PE ranking, array search, evaluation");
  ex->add_option("--net", ex_args.net, "resnet18, resnet50, resnet152 or a workload file")
      ->capture_default_str();
  ex->add_option("--wq", ex_args.wq, "Inner-layer word-length for built-in nets");
  ex->add_option("--k", ex_args.k, "Candidate slice widths")->delimiter(',')->capture_default_str();
  ex->add_option("--styles", ex_args.styles, "Candidate styles")->delimiter(',');
  ex->add_option("--dims", ex_args.dims, "Fixed array H,W,D (skips the search)")->delimiter(',');
  ex->add_option("--batch", ex_args.batch, "Frames sharing one weight fetch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "Bit-exact PE simulation against an integer oracle");
  sim->add_option("--k", sim_args.k, "Operand slice width")->capture_default_str();
  sim->add_option("--styles", sim_args.styles, "Styles to simulate (default: all)")
      ->delimiter(',');
  sim->add_option("--n-bits", sim_args.n_bits, "Activation width N")->capture_default_str();
  sim->add_option("--wq", sim_args.wq, "Weight word-lengths")->delimiter(',')->capture_default_str();
  sim->add_flag("--exhaustive", sim_args.exhaustive, "Every activation and weight value");
  sim->add_option("--vectors", sim_args.vectors, "Random dot products per style and w_Q")
      ->capture_default_str();
  sim->add_option("--length", sim_args.length, "Random dot-product length")->capture_default_str();
  sim->add_option("--layer", sim_args.layer, "Workload file whose layers are simulated")
      ->check(CLI::ExistingFile);
  sim->add_flag("--channelwise", sim_args.channelwise, "Simulate each precision group separately");
  sim->add_option("--samples", sim_args.samples, "Output positions per layer group")
      ->capture_default_str();

  FootprintArgs fp_args;
  auto* fp = app.add_subcommand("footprint", "Parameter memory footprint and compression");
  fp->add_option("--net", fp_args.net, "resnet18, resnet50, resnet152 or a workload file")
      ->capture_default_str();
  fp->add_option("--wq", fp_args.wq, "Inner-layer word-length for built-in nets");
  fp->add_option("--baseline", fp_args.baseline, "fp32, fp16, int8 or a bit count")
      ->capture_default_str();
  fp->add_option("--unit", fp_args.unit, "bits, Mbit or MB")
      ->check(CLI::IsMember({"bits", "Mbit", "MB"}))
      ->capture_default_str();
  fp->add_flag("--exclude-projections", fp_args.exclude_projections,
               "Leave projection shortcut convolutions out");
  fp->add_flag("--exclude-stem", fp_args.exclude_stem, "Leave the 8-bit stem layer out");

  std::string design_path;
  auto* rep = app.add_subcommand("report", "Re-render a saved design.json");
  rep->add_option("--design", design_path, "Saved design (default: <out>/design.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (pe->parsed()) return cmd_pe_dse(g, pe_args, out);
    if (ex->parsed()) return cmd_explore(g, ex_args, out);
    if (sim->parsed()) return cmd_simulate(g, sim_args, out);
    if (fp->parsed()) return cmd_footprint(g, fp_args, out);
    if (rep->parsed()) return cmd_report(g, design_path, out);
  } catch (const MismatchFound&) {
    return kExitMismatch;
  } catch (const CalibrationError& e) {
    err << "error: " << e.what() << " (key: " << e.key() << ")\n";
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace mpdse::cli
