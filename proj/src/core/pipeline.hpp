#pragma once

#include <string>

#include "core/config.hpp"

namespace amf::pipeline {

// The three CLI commands. Each throws amf::Error on failure; on success all
// declared outputs exist and pass a schema re-check.
void cmd_synth(const RunConfig& config);
void cmd_run(const RunConfig& config);
void cmd_dims(const RunConfig& config);

}  // namespace amf::pipeline
