#include "cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "cli/config.hpp"
#include "stedeflick/error.hpp"
#include "stedeflick/frame_io.hpp"
#include "stedeflick/histogram.hpp"
#include "stedeflick/metrics.hpp"
#include "stedeflick/pipeline.hpp"
#include "stedeflick/report.hpp"
#include "stedeflick/synth.hpp"

namespace fs = std::filesystem;

namespace stedeflick::cli {

namespace {

// Bad invocation or missing input; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::optional<fs::path> config;
  std::optional<int> threads;

  std::optional<double> ste_scale;
  std::optional<int> ste_radius;
  std::optional<int> ma_radius;
  std::optional<double> kl_margin;
  std::optional<double> kl_floor;
  std::optional<double> dark;
  std::optional<double> bright;

  std::optional<int> flow_levels;
  std::optional<int> flow_window;
  std::optional<int> flow_iterations;
  std::optional<double> fb_threshold;

  bool no_local = false;
  std::optional<double> conf_power;
  std::optional<double> temporal_alpha;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "TOML configuration file");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = auto)")->check(CLI::NonNegativeNumber);
}

void add_prior_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--ste-scale", o.ste_scale, "Temporal Gaussian scale s");
  cmd->add_option("--ste-radius", o.ste_radius, "Temporal window radius l");
  cmd->add_option("--ma-radius", o.ma_radius, "KL moving-average radius");
  cmd->add_option("--kl-margin", o.kl_margin, "Multiplier on the KL moving average");
  cmd->add_option("--kl-floor", o.kl_floor, "Minimum KL to flag a frame");
  cmd->add_option("--dark", o.dark, "Under-exposure threshold");
  cmd->add_option("--bright", o.bright, "Over-exposure threshold");
}

void add_flow_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--flow-levels", o.flow_levels, "Pyramid levels");
  cmd->add_option("--flow-window", o.flow_window, "Lucas-Kanade window (odd)");
  cmd->add_option("--flow-iterations", o.flow_iterations, "Iterations per level");
  cmd->add_option("--fb-threshold", o.fb_threshold, "Forward-backward consistency threshold (px)");
}

void add_repair_options(CLI::App* cmd, Overrides& o) {
  cmd->add_flag("--no-local", o.no_local, "Skip local repair of exposed regions");
  cmd->add_option("--conf-power", o.conf_power, "Exponent on flow validity");
  cmd->add_option("--temporal-alpha,--blend-alpha", o.temporal_alpha, "Temporal blend weight (0 disables)");
}

template <class T>
void overlay(const std::optional<T>& flag, T& dst) {
  if (flag) dst = *flag;
}

Config resolve_config(const Overrides& o) {
  Config c;
  if (o.config) {
    if (!fs::exists(*o.config)) throw UsageError("config file not found: " + o.config->string());
    c = load_config(*o.config);
  }
  overlay(o.threads, c.threads);
  auto& p = c.pipeline;
  overlay(o.ste_scale, p.ste.scale);
  overlay(o.ste_radius, p.ste.radius);
  overlay(o.ma_radius, p.priors.ma_radius);
  overlay(o.kl_margin, p.priors.kl_margin);
  overlay(o.kl_floor, p.priors.kl_floor);
  overlay(o.dark, p.priors.dark_threshold);
  overlay(o.bright, p.priors.bright_threshold);
  overlay(o.flow_levels, p.flow.pyramid_levels);
  overlay(o.flow_window, p.flow.window);
  overlay(o.flow_iterations, p.flow.iterations);
  overlay(o.fb_threshold, p.flow.fb_threshold);
  if (o.no_local) p.repair.enable_local = false;
  overlay(o.conf_power, p.repair.conf_power);
  overlay(o.temporal_alpha, p.repair.temporal_blend_alpha);
  c.validate();
  return c;
}

fs::path require_path(const std::optional<fs::path>& flag, const std::optional<fs::path>& from_config,
                      const char* what) {
  if (flag) return *flag;
  if (from_config) return *from_config;
  throw UsageError(std::string("missing ") + what);
}

FrameSequence load_input(const fs::path& source, const char* what) {
  if (!fs::exists(source)) throw UsageError(std::string(what) + " not found: " + source.string());
  try {
    return io::read_frames(source);
  } catch (const Error& e) {
    throw UsageError(std::string("cannot read ") + what + ": " + e.what());
  }
}

std::optional<FlowDirectory> open_flows(const std::optional<fs::path>& dir) {
  if (!dir) return std::nullopt;
  if (!fs::is_directory(*dir)) throw UsageError("flow directory not found: " + dir->string());
  return FlowDirectory(*dir);
}

FrameRGB mask_image(const BinaryMask& mask) {
  std::vector<std::uint8_t> rgb(mask.pixel_count() * 3);
  const auto bits = mask.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = bits[i] ? 255 : 0;
  }
  return FrameRGB(mask.width(), mask.height(), std::move(rgb));
}

std::string numbered(const char* prefix, std::size_t t, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%06zu%s", prefix, t, ext);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// ---- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
  Overrides o;
  std::optional<fs::path> in;
  std::optional<fs::path> out;
  bool masks = false;
  bool histograms = false;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const Config c = resolve_config(a.o);
  const fs::path in = require_path(a.in, c.io.input, "--in");
  const fs::path dir = require_path(a.out, c.io.output, "--out");
  const FrameSequence frames = load_input(in, "input");
  const Executor executor(resolve_threads(c.threads));

  const auto& p = c.pipeline;
  const DeflickerPriors priors = extract_priors(frames, p.ste, p.priors, executor);

  fs::create_directories(dir);
  write_json(priors_json(priors, p.ste, p.priors), dir / "priors.json");
  std::ostringstream csv;
  write_kl_csv(priors, p.priors, csv);
  write_text(dir / "kl_series.csv", csv.str());
  if (a.masks) {
    fs::create_directories(dir / "masks");
    for (std::size_t t = 0; t < priors.exposure.size(); ++t) {
      io::write_png(mask_image(priors.exposure[t]), dir / "masks" / numbered("", t, ".png"));
    }
  }
  if (a.histograms) {
    fs::create_directories(dir / "histograms");
    for (std::size_t t = 0; t < frames.size(); ++t) {
      std::ostringstream input, filtered;
      write_histogram_csv(histogram(illumination_map(frames[t])), input);
      write_histogram_csv(histogram(priors.filtered_maps[t]), filtered);
      write_text(dir / "histograms" / numbered("input_", t, ".csv"), input.str());
      write_text(dir / "histograms" / numbered("filtered_", t, ".csv"), filtered.str());
    }
  }
  out << "analyzed " << frames.size() << " frames, " << priors.singular.size()
      << " singular\n";
  return kSuccess;
}

// ---- deflicker -------------------------------------------------------------

struct DeflickerArgs {
  Overrides o;
  std::optional<fs::path> in;
  std::optional<fs::path> out;
  std::optional<fs::path> report;
  std::optional<fs::path> flows;
};

fs::path default_report_path(const fs::path& target) {
  if (io::is_y4m_path(target)) {
    fs::path r = target;
    r.replace_extension(".report.json");
    return r;
  }
  return target / "report.json";
}

int cmd_deflicker(const DeflickerArgs& a, std::ostream& out) {
  const Config c = resolve_config(a.o);
  const fs::path in = require_path(a.in, c.io.input, "--in");
  const fs::path target = require_path(a.out, c.io.output, "--out");
  const fs::path report_path =
      a.report ? *a.report : (c.io.report ? *c.io.report : default_report_path(target));
  const std::optional<FlowDirectory> flows = open_flows(a.flows ? a.flows : c.io.flows);
  const FrameSequence frames = load_input(in, "input");
  const Executor executor(resolve_threads(c.threads));

  const PipelineResult result =
      deflicker_pipeline(frames, c.pipeline, executor, flows ? &*flows : nullptr);
  io::write_frames(result.frames, target);
  write_json(pipeline_report_json(result.report, c.pipeline), report_path);
  out << "deflickered " << frames.size() << " frames; singular " << result.report.singular.size()
      << ", local " << result.report.local_stage << '\n';
  return kSuccess;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  Overrides o;
  std::vector<fs::path> in;
  std::optional<fs::path> out;
  std::optional<int> w;
  std::optional<int> local;
  std::optional<std::uint64_t> seed;
  std::vector<double> offset;
  std::vector<double> gain;
  bool no_gain = false;
  bool table = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const Config c = resolve_config(a.o);
  std::vector<fs::path> inputs = a.in;
  if (inputs.empty() && c.io.input) inputs.push_back(*c.io.input);
  if (inputs.empty()) throw UsageError("missing --in");
  const fs::path dir = require_path(a.out, c.io.output, "--out");
  for (const auto& p : inputs) {
    if (!fs::exists(p)) throw UsageError("input not found: " + p.string());
  }

  FlickerSpec spec = c.flicker;
  overlay(a.w, spec.window_w);
  if (a.local) spec.local_window_l = *a.local;
  overlay(a.seed, spec.seed);
  if (!a.offset.empty()) spec.offset_range = {a.offset[0], a.offset[1]};
  if (!a.gain.empty()) spec.gain_range = std::pair{a.gain[0], a.gain[1]};
  if (a.no_gain) spec.gain_range.reset();

  std::vector<FlickerSpec> specs;
  if (a.table) {
    specs = table_specs(spec.seed);
    for (auto& s : specs) {
      s.offset_range = spec.offset_range;
      s.gain_range = spec.gain_range;
    }
  } else {
    specs.push_back(spec);
  }
  const CorpusManifest manifest = build_corpus(inputs, specs, dir);
  out << "wrote " << manifest.entries.size() << " degraded clips to " << dir.string() << '\n';
  return kSuccess;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  Overrides o;
  std::optional<fs::path> pred;
  std::optional<fs::path> gt;
  std::optional<fs::path> raw;
  std::optional<fs::path> report;
  std::optional<fs::path> flows;
  std::optional<fs::path> manifest;
  std::optional<fs::path> pred_root;
  bool deflicker = false;
};

struct TableRow {
  std::string label;
  std::size_t clips = 0;
  double psnr_in = 0, psnr_out = 0, ssim_in = 0, ssim_out = 0, ewarp_in = 0, ewarp_out = 0;
};

int eval_single(const EvalArgs& a, const Config& c, std::ostream& out) {
  if (!a.pred || !a.gt) throw UsageError("eval needs --pred and --gt, or --manifest");
  const fs::path report_path = require_path(a.report, c.io.report, "--report");
  const std::optional<FlowDirectory> flows = open_flows(a.flows ? a.flows : c.io.flows);
  const FrameSequence pred = load_input(*a.pred, "prediction");
  const FrameSequence gt = load_input(*a.gt, "ground truth");
  std::optional<FrameSequence> raw;
  if (a.raw) raw = load_input(*a.raw, "raw input");
  const Executor executor(resolve_threads(c.threads));

  const EvalReport report = evaluate(pred, gt, raw ? &*raw : nullptr, c.pipeline.flow, executor,
                                     flows ? &*flows : nullptr);
  write_json(eval_json(report, *a.pred, *a.gt, a.raw ? &*a.raw : nullptr), report_path);
  out << std::fixed << std::setprecision(4) << "psnr " << report.pred.psnr_mean << "  ssim "
      << report.pred.ssim_mean << "  e_warp " << report.pred.e_warp << '\n';
  return kSuccess;
}

int eval_batch(const EvalArgs& a, const Config& c, std::ostream& out) {
  if (!a.pred_root && !a.deflicker) {
    throw UsageError("--manifest needs --pred-root or --deflicker");
  }
  if (!fs::exists(*a.manifest)) throw UsageError("manifest not found: " + a.manifest->string());
  const fs::path report_path = require_path(a.report, c.io.report, "--report");
  const CorpusManifest manifest = read_corpus_manifest(*a.manifest);
  const Executor executor(resolve_threads(c.threads));

  std::vector<TableRow> rows;
  Json entries = Json::array();
  for (const auto& e : manifest.entries) {
    try {
      const FrameSequence gt = load_input(e.gt, "ground truth");
      const FrameSequence degraded = load_input(e.degraded, "degraded clip");
      const FrameSequence pred = a.deflicker
                                     ? deflicker_pipeline(degraded, c.pipeline, executor).frames
                                     : load_input(*a.pred_root / e.clip / e.label, "prediction");
      const EvalReport r = evaluate(pred, gt, &degraded, c.pipeline.flow, executor);

      auto row = std::find_if(rows.begin(), rows.end(),
                              [&](const TableRow& x) { return x.label == e.label; });
      if (row == rows.end()) {
        rows.push_back({e.label});
        row = rows.end() - 1;
      }
      ++row->clips;
      row->psnr_in += r.raw->psnr_mean;
      row->psnr_out += r.pred.psnr_mean;
      row->ssim_in += r.raw->ssim_mean;
      row->ssim_out += r.pred.ssim_mean;
      row->ewarp_in += r.raw->e_warp;
      row->ewarp_out += r.pred.e_warp;
      entries.push_back({{"clip", e.clip},
                         {"label", e.label},
                         {"flow_source", r.flow_source},
                         {"degraded", sequence_scores_json(*r.raw)["aggregate"]},
                         {"output", sequence_scores_json(r.pred)["aggregate"]}});
    } catch (const UsageError& err) {
      throw UsageError("clip '" + e.clip + "' (" + e.label + "): " + err.what());
    } catch (const Error& err) {
      throw Error("clip '" + e.clip + "' (" + e.label + "): " + err.what());
    }
  }

  Json table = Json::array();
  out << std::left << std::setw(6) << "spec" << std::right << std::setw(6) << "clips"
      << std::setw(11) << "psnr_in" << std::setw(11) << "psnr_out" << std::setw(10) << "ssim_in"
      << std::setw(10) << "ssim_out" << std::setw(11) << "ewarp_in" << std::setw(11)
      << "ewarp_out" << '\n';
  for (auto& row : rows) {
    const double n = static_cast<double>(row.clips);
    row.psnr_in /= n;
    row.psnr_out /= n;
    row.ssim_in /= n;
    row.ssim_out /= n;
    row.ewarp_in /= n;
    row.ewarp_out /= n;
    out << std::left << std::setw(6) << row.label << std::right << std::setw(6) << row.clips
        << std::fixed << std::setprecision(3) << std::setw(11) << row.psnr_in << std::setw(11)
        << row.psnr_out << std::setprecision(4) << std::setw(10) << row.ssim_in << std::setw(10)
        << row.ssim_out << std::setprecision(3) << std::setw(11) << row.ewarp_in << std::setw(11)
        << row.ewarp_out << '\n';
    table.push_back({{"spec", row.label},
                     {"clips", row.clips},
                     {"psnr_in", row.psnr_in},
                     {"psnr_out", row.psnr_out},
                     {"ssim_in", row.ssim_in},
                     {"ssim_out", row.ssim_out},
                     {"e_warp_in", row.ewarp_in},
                     {"e_warp_out", row.ewarp_out}});
  }
  Json report;
  report["manifest"] = a.manifest->string();
  report["mode"] = a.deflicker ? "deflicker" : "pred_root";
  report["parameters"] = params_json(c.pipeline);
  report["table"] = std::move(table);
  report["entries"] = std::move(entries);
  write_json(report, report_path);
  return kSuccess;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Config c = resolve_config(a.o);
  if (a.manifest) return eval_batch(a, c, out);
  return eval_single(a, c, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Histogram-based video deflickering", "ste_deflick"};
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "Extract deflickering priors and KL diagnostics");
  add_common(an, analyze.o);
  add_prior_options(an, analyze.o);
  an->add_option("--in", analyze.in, "PNG directory or .y4m file");
  an->add_option("--out", analyze.out, "Output directory for priors.json and kl_series.csv");
  an->add_flag("--masks", analyze.masks, "Also write exposure masks as PNG");
  an->add_flag("--histograms", analyze.histograms, "Also write per-frame histogram CSVs");

  DeflickerArgs deflicker;
  auto* de = app.add_subcommand("deflicker", "Run the full deflickering pipeline");
  add_common(de, deflicker.o);
  add_prior_options(de, deflicker.o);
  add_flow_options(de, deflicker.o);
  add_repair_options(de, deflicker.o);
  de->add_option("--in", deflicker.in, "PNG directory or .y4m file");
  de->add_option("--out", deflicker.out, "Output PNG directory or .y4m file");
  de->add_option("--report", deflicker.report, "Report path (default: next to the output)");
  de->add_option("--flows,--flow-dir", deflicker.flows, "Directory of precomputed fwd_/bwd_ .flo files");

  SynthArgs synth;
  auto* sy = app.add_subcommand("synth", "Generate synthetic flicker from clean clips");
  add_common(sy, synth.o);
  sy->add_option("--in", synth.in, "Clean clip (repeatable)");
  sy->add_option("--out", synth.out, "Corpus directory");
  sy->add_option("--w", synth.w, "Frames sharing one artifact")->check(CLI::PositiveNumber);
  sy->add_option("--local", synth.local, "Local seed window L")->check(CLI::PositiveNumber);
  sy->add_option("--seed", synth.seed, "Random seed");
  sy->add_option("--offset", synth.offset, "Offset range lo hi")->expected(2);
  sy->add_option("--gain", synth.gain, "Gain range lo hi")->expected(2);
  sy->add_flag("--no-gain", synth.no_gain, "Additive flicker only");
  sy->add_flag("--table", synth.table, "Emit the W1, W3, W10 and L3 variants");

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "Score predictions against ground truth");
  add_common(ev, eval.o);
  add_prior_options(ev, eval.o);
  add_flow_options(ev, eval.o);
  add_repair_options(ev, eval.o);
  ev->add_option("--pred", eval.pred, "Predicted frames");
  ev->add_option("--gt", eval.gt, "Ground-truth frames");
  ev->add_option("--raw", eval.raw, "Degraded input, scored alongside");
  ev->add_option("--report", eval.report, "Output JSON");
  ev->add_option("--flows,--flow-dir", eval.flows, "Directory of precomputed fwd_/bwd_ .flo files");
  ev->add_option("--manifest", eval.manifest, "corpus.json for batch scoring");
  ev->add_option("--pred-root", eval.pred_root, "Batch predictions at <root>/<clip>/<spec>");
  ev->add_flag("--deflicker", eval.deflicker, "Batch: deflicker each degraded clip first");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  try {
    if (an->parsed()) return cmd_analyze(analyze, out);
    if (de->parsed()) return cmd_deflicker(deflicker, out);
    if (sy->parsed()) return cmd_synth(synth, out);
    return cmd_eval(eval, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kProcessingError;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace stedeflick::cli
