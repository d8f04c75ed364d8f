#include "igrate/errors.hpp"

namespace igrate {

StageError::StageError(std::string stage, const Error& cause, std::string hint)
    : Error("stage '" + stage + "': " + cause.what() + (hint.empty() ? "" : " (hint: " + hint + ")")),
      stage_(std::move(stage)),
      code_(cause.exit_code()) {}

}  // namespace igrate
