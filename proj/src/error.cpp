#include "snrb/error.hpp"

namespace snrb {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::input: return "input";
    case Errc::degenerate: return "degenerate";
    case Errc::infeasible: return "infeasible";
    case Errc::singular: return "singular";
    case Errc::parse: return "parse";
    case Errc::io: return "io";
    case Errc::divergence: return "divergence";
    case Errc::generation: return "generation";
    case Errc::unknown_key: return "unknown_key";
  }
  return "unknown";
}

}  // namespace snrb
