#pragma once

// Text checkpoint for SpectralParams:
//
//   SPARCS1
//   layers <count> <N_0> ... <N_B>
//   frozen_input <0|1>
//   frozen_output <0|1>
//   phi <i> <rows> <cols>        (B times, i = 0..B-1)
//   <row 0 values>
//   ...
//   eig <j> <length>             (B+1 times, j = 0..B)
//   <values>
//   end
//
// Values are base-10 round-trip-exact doubles; phi blocks are row-major.
// Lines starting with '#' are comments (provenance).

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sparcs/spectral.hpp"

namespace sparcs {

using Provenance = std::vector<std::pair<std::string, std::string>>;

void write_checkpoint(const SpectralParams& params, std::ostream& os, const Provenance& provenance = {});
SpectralParams read_checkpoint(std::istream& is);

void save_checkpoint(const SpectralParams& params, const std::filesystem::path& path,
                     const Provenance& provenance = {});
SpectralParams load_checkpoint(const std::filesystem::path& path);

/// JSON rendering of an exported direct-space model.
std::string direct_model_json(const DirectModel& model, const Provenance& provenance = {});
DirectModel parse_direct_model_json(const std::string& text);

}  // namespace sparcs
