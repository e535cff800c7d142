#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace ecokit {

// All library failures surface as ecokit::Error so the CLI can map them to a
// machine-readable diagnostic on stderr.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Non-fatal diagnostics ("warning" clauses in module contracts). Default sink
// prints to stderr; tests install their own handler to count or inspect them.
using WarningHandler = std::function<void(const std::string&)>;
void warn(const std::string& message);
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace ecokit
