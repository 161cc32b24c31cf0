#pragma once

#include <stdexcept>
#include <string>

namespace rsa {

enum class Errc {
  parse_error,
  duplicate_id,
  dangling_link,
  zero_vector,
  no_chunks,
  empty_corpus,
  insufficient_pool,
  too_few_requirements,
  sequence_too_short,
  id_out_of_range,
  empty_split,
  non_finite_loss,
  no_positive,
  no_such_group,
  config_error,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Errc code() const { return code_; }

  /// Process exit code per the CLI contract: 2 for config errors, 3 for data errors.
  int exit_code() const {
    switch (code_) {
      case Errc::config_error:
        return 2;
      default:
        return 3;
    }
  }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace rsa
