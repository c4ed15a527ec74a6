#include "stcl/error.hpp"

namespace stcl {

const char* to_string(CheckpointFault fault) {
  switch (fault) {
    case CheckpointFault::bad_magic: return "bad_magic";
    case CheckpointFault::unsupported_version: return "unsupported_version";
    case CheckpointFault::checksum_mismatch: return "checksum_mismatch";
    case CheckpointFault::config_mismatch: return "config_mismatch";
    case CheckpointFault::malformed: return "malformed";
  }
  return "unknown";
}

}  // namespace stcl
