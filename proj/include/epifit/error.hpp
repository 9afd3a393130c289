#pragma once

#include <stdexcept>
#include <string>

namespace epifit {

enum class Errc {
  invalid_argument,
  out_of_domain,
  degenerate_geometry,
  infeasible_partition,
  unsupported_dimension,
  infeasible,
  solver_failure,
  io_error,
  schema_error,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace epifit
