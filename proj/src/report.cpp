#include "stedeflick/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "stedeflick/error.hpp"

namespace fs = std::filesystem;

namespace stedeflick {

namespace {

double threshold_at(const DeflickerPriors& priors, const PriorParams& params, std::size_t t) {
  return std::max(params.kl_margin * priors.kl_average[t], params.kl_floor);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used, 16);
  if (used != s.size()) throw FormatError("bad checksum '" + s + "'");
  return v;
}

}  // namespace

Json params_json(const PipelineParams& p) {
  Json j;
  j["ste"] = {{"scale", p.ste.scale}, {"radius", p.ste.radius}};
  j["priors"] = {{"ma_radius", p.priors.ma_radius},
                 {"kl_margin", p.priors.kl_margin},
                 {"kl_floor", p.priors.kl_floor},
                 {"dark_threshold", p.priors.dark_threshold},
                 {"bright_threshold", p.priors.bright_threshold},
                 {"kl_smoothing", p.priors.kl_smoothing}};
  j["flow"] = {{"pyramid_levels", p.flow.pyramid_levels},
               {"window", p.flow.window},
               {"iterations", p.flow.iterations},
               {"fb_threshold", p.flow.fb_threshold}};
  j["repair"] = {{"enable_local", p.repair.enable_local},
                 {"conf_power", p.repair.conf_power},
                 {"temporal_blend_alpha", p.repair.temporal_blend_alpha}};
  return j;
}

Json flicker_spec_json(const FlickerSpec& s) {
  Json j;
  j["window_w"] = s.window_w;
  j["local_window_l"] = s.local_window_l ? Json(*s.local_window_l) : Json(nullptr);
  j["offset_range"] = {s.offset_range.first, s.offset_range.second};
  j["gain_range"] =
      s.gain_range ? Json{s.gain_range->first, s.gain_range->second} : Json(nullptr);
  j["seed"] = s.seed;
  return j;
}

FlickerSpec flicker_spec_from_json(const Json& j) {
  try {
    FlickerSpec s;
    s.window_w = j.at("window_w").get<int>();
    if (!j.at("local_window_l").is_null()) s.local_window_l = j.at("local_window_l").get<int>();
    s.offset_range = {j.at("offset_range").at(0).get<double>(),
                      j.at("offset_range").at(1).get<double>()};
    if (j.at("gain_range").is_null()) {
      s.gain_range.reset();
    } else {
      s.gain_range = std::pair{j.at("gain_range").at(0).get<double>(),
                               j.at("gain_range").at(1).get<double>()};
    }
    s.seed = j.at("seed").get<std::uint64_t>();
    s.validate();
    return s;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad flicker spec: ") + e.what());
  }
}

Json priors_json(const DeflickerPriors& priors, const SteParams& ste, const PriorParams& params) {
  Json j;
  j["frame_count"] = priors.kl_series.size();
  PipelineParams p;
  p.ste = ste;
  p.priors = params;
  const Json all = params_json(p);
  j["parameters"] = {{"ste", all["ste"]}, {"priors", all["priors"]}};
  j["singular"] = priors.singular;
  Json frames = Json::array();
  for (std::size_t t = 0; t < priors.kl_series.size(); ++t) {
    frames.push_back({{"frame", t},
                      {"kl", priors.kl_series[t]},
                      {"kl_average", priors.kl_average[t]},
                      {"threshold", threshold_at(priors, params, t)},
                      {"flagged", priors.is_singular(t)},
                      {"exposure_fraction", priors.exposure[t].fraction()}});
  }
  j["frames"] = std::move(frames);
  return j;
}

void write_kl_csv(const DeflickerPriors& priors, const PriorParams& params, std::ostream& out) {
  const auto precision = out.precision(17);
  out << "frame,kl,kl_average,threshold,flagged,exposure_fraction\n";
  for (std::size_t t = 0; t < priors.kl_series.size(); ++t) {
    out << t << ',' << priors.kl_series[t] << ',' << priors.kl_average[t] << ','
        << threshold_at(priors, params, t) << ',' << (priors.is_singular(t) ? 1 : 0) << ','
        << priors.exposure[t].fraction() << '\n';
  }
  out.precision(precision);
}

Json pipeline_report_json(const PipelineReport& r, const PipelineParams& params) {
  Json j;
  j["frame_count"] = r.frame_count;
  j["frame_size"] = {{"width", r.frame_size.width}, {"height", r.frame_size.height}};
  j["parameters"] = params_json(params);
  j["lut_matches_per_frame"] = r.lut_matches_per_frame;
  j["singular"] = r.singular;
  j["locally_repaired"] = r.locally_repaired;
  j["stages"] = {{"local", r.local_stage},
                 {"temporal", r.temporal_stage},
                 {"flow_source", r.flow_source}};
  Json frames = Json::array();
  for (std::size_t t = 0; t < r.kl_series.size(); ++t) {
    frames.push_back({{"frame", t},
                      {"kl", r.kl_series[t]},
                      {"kl_average", r.kl_average[t]},
                      {"exposure_fraction", r.exposure_fraction[t]}});
  }
  j["frames"] = std::move(frames);
  Json timings;
  for (const auto& s : r.timings) timings[s.stage] = s.seconds;
  j["timings"] = std::move(timings);
  return j;
}

Json sequence_scores_json(const SequenceScores& s) {
  Json j;
  j["aggregate"] = {{"psnr_mean", s.psnr_mean}, {"ssim_mean", s.ssim_mean}, {"e_warp", s.e_warp}};
  Json frames = Json::array();
  for (std::size_t t = 0; t < s.per_frame.size(); ++t) {
    const auto& f = s.per_frame[t];
    frames.push_back({{"frame", t},
                      {"psnr", f.psnr},
                      {"ssim", f.ssim},
                      {"pair_err_prev", f.pair_err_prev},
                      {"pair_err_first", f.pair_err_first}});
  }
  j["per_frame"] = std::move(frames);
  return j;
}

Json eval_json(const EvalReport& report, const fs::path& pred, const fs::path& gt,
               const fs::path* raw) {
  Json j;
  j["inputs"] = {{"pred", pred.string()},
                 {"gt", gt.string()},
                 {"raw", raw ? Json(raw->string()) : Json(nullptr)}};
  j["flow_source"] = report.flow_source;
  j["pred"] = sequence_scores_json(report.pred);
  j["raw"] = report.raw ? sequence_scores_json(*report.raw) : Json(nullptr);
  return j;
}

Json corpus_json(const CorpusManifest& manifest) {
  Json entries = Json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"clip", e.clip},
                       {"label", e.label},
                       {"spec", flicker_spec_json(e.spec)},
                       {"gt", e.gt.string()},
                       {"degraded", e.degraded.string()},
                       {"checksum", hex64(e.checksum)}});
  }
  return Json{{"entries", std::move(entries)}};
}

CorpusManifest corpus_from_json(const Json& j) {
  CorpusManifest m;
  try {
    for (const auto& e : j.at("entries")) {
      CorpusEntry entry;
      entry.clip = e.at("clip").get<std::string>();
      entry.label = e.at("label").get<std::string>();
      entry.spec = flicker_spec_from_json(e.at("spec"));
      entry.gt = e.at("gt").get<std::string>();
      entry.degraded = e.at("degraded").get<std::string>();
      entry.checksum = parse_hex64(e.at("checksum").get<std::string>());
      m.entries.push_back(std::move(entry));
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad corpus manifest: ") + e.what());
  }
  return m;
}

void write_corpus_manifest(const CorpusManifest& manifest, const fs::path& path) {
  write_json(corpus_json(manifest), path);
}

CorpusManifest read_corpus_manifest(const fs::path& path) {
  return corpus_from_json(read_json(path));
}

void write_json(const Json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw FormatError("cannot parse " + path.string() + ": " + e.what());
  }
}

}  // namespace stedeflick
