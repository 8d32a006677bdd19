#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace epg {

// invalid argument values (wrong sizes, non-finite inputs, bad options)
struct parameter_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// mathematically valid request outside the admissible domain
// (boundary states, unreachable targets)
struct domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

// caller broke a documented precondition
struct contract_error : std::logic_error {
  using std::logic_error::logic_error;
};

// malformed configuration files / CLI usage
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// iteration cap or numerical breakdown; carries the last iterate
struct solver_error : std::runtime_error {
  std::vector<double> last_iterate;
  double residual;
  solver_error(const std::string& msg, std::vector<double> iterate, double res)
      : std::runtime_error(msg + " (residual " + std::to_string(res) + ")"),
        last_iterate(std::move(iterate)),
        residual(res) {}
};

// non-finite state during integration; carries the simulated time
struct numeric_error : std::runtime_error {
  double time;
  numeric_error(const std::string& msg, double t)
      : std::runtime_error(msg + " at t=" + std::to_string(t)), time(t) {}
};

}  // namespace epg
