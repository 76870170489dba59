#pragma once

#include <filesystem>
#include <string_view>

#include "hlstm/train.h"

namespace hlstm {

inline constexpr std::string_view kCheckpointMagic = "HLSTM-CKPT-1\n";

// Binary little-endian container: magic line, then tagged sections CONF
// (config JSON), VOCB (tokens), IMPT (importance table), PARM (name, shape,
// embedding flag and raw doubles per parameter), ADAM (hyper-parameters,
// step and moments) and a closing "END\n". Doubles round-trip bit-exactly.
void save_checkpoint(const TrainedModel& trained, const std::filesystem::path& path);

// Throws FormatError("not a checkpoint ...") for a foreign magic header,
// FormatError for an unsupported version or truncated/corrupt content and
// IoError when the file cannot be opened.
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace hlstm
