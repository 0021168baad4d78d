#pragma once

#include <stdexcept>
#include <string>

namespace snrb {

enum class Errc {
  input,        // malformed or out-of-domain argument
  degenerate,   // threshold sits on a branch boundary no formula covers
  infeasible,   // no distribution satisfies the requested constraints
  singular,     // quantity diverges (e.g. Fisher information at theta in {0,1})
  parse,        // file or document could not be parsed
  io,           // file missing or unreadable
  divergence,   // training produced a non-finite loss
  generation,   // randomized construction ran out of attempts
  unknown_key,  // config key not recognized
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace snrb
