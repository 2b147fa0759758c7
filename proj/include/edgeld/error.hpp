#pragma once

#include <stdexcept>
#include <string>

namespace edgeld {

class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// A caller-side contract was violated (bad argument, wrong shape, empty input).
class PreconditionError : public Error
{
  public:
    using Error::Error;
};

// An iterative or adaptive numerical routine did not reach its tolerance.
class ConvergenceError : public Error
{
  public:
    ConvergenceError(const std::string& what, double residual)
      : Error(what + " (last residual " + std::to_string(residual) + ")"), residual_(residual)
    {
    }

    double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

// Invalid experiment configuration: syntax, unknown keys, out-of-range values, or
// a model whose hypotheses are violated.
class ConfigError : public Error
{
  public:
    using Error::Error;
};

class IoError : public Error
{
  public:
    using Error::Error;
};

} // namespace edgeld
