#pragma once

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "stedeflick/metrics.hpp"
#include "stedeflick/pipeline.hpp"
#include "stedeflick/synth.hpp"

namespace stedeflick {

using Json = nlohmann::ordered_json;

Json params_json(const PipelineParams& params);
Json flicker_spec_json(const FlickerSpec& spec);
FlickerSpec flicker_spec_from_json(const Json& j);

/// Per frame: kl, kl_average, threshold, flagged, exposure_fraction.
Json priors_json(const DeflickerPriors& priors, const SteParams& ste, const PriorParams& params);

/// `frame,kl,kl_average,threshold,flagged,exposure_fraction`, one row per frame.
void write_kl_csv(const DeflickerPriors& priors, const PriorParams& params, std::ostream& out);

/// Everything except wall-clock values lives outside the "timings" object, so
/// two runs compare equal once that key is dropped.
Json pipeline_report_json(const PipelineReport& report, const PipelineParams& params);

Json sequence_scores_json(const SequenceScores& scores);
Json eval_json(const EvalReport& report, const std::filesystem::path& pred,
               const std::filesystem::path& gt, const std::filesystem::path* raw);

Json corpus_json(const CorpusManifest& manifest);
CorpusManifest corpus_from_json(const Json& j);
void write_corpus_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);
CorpusManifest read_corpus_manifest(const std::filesystem::path& path);

/// Two-space indented, trailing newline. Throws IoError.
void write_json(const Json& j, const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

}  // namespace stedeflick
