#pragma once

#include "tbpos/evaluator.hpp"
#include "tbpos/query_synth.hpp"
#include "tbpos/slicer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace tbpos {

/// Effective run configuration: every tunable of the slicing, synthesis and
/// evaluation stages under one flat `key = value` grammar. Unknown keys are
/// rejected; the canonical echo is written into output directories for
/// provenance.
struct RunConfig {
  SliceConfig slice;
  SynthConfig synth;
  EvalThresholds eval;
  int workers = 0;  // 0 = hardware concurrency
  std::uint64_t master_seed = 0;
};

/// Applies one key/value pair. Throws ParseError for unknown keys or
/// unparsable values (`context` prefixes the message).
void apply_config_entry(RunConfig& config, const std::string& key,
                        const std::string& value, const std::string& context);

/// Parses a `key = value` config file; `#` lines and blank lines are skipped.
RunConfig load_config_file(const std::filesystem::path& path);

/// Canonical echo of every key at its effective value.
std::string render_config(const RunConfig& config);

}  // namespace tbpos
