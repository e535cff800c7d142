#include "ecokit/error.hpp"

#include <iostream>
#include <utility>

namespace ecokit {

namespace {
WarningHandler& handler() {
    static WarningHandler h = [](const std::string& message) {
        std::cerr << "warning: " << message << "\n";
    };
    return h;
}
}  // namespace

void warn(const std::string& message) { handler()(message); }

WarningHandler set_warning_handler(WarningHandler new_handler) {
    WarningHandler old = handler();
    handler() = std::move(new_handler);
    return old;
}

}  // namespace ecokit
