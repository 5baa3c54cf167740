#pragma once

#include <stdexcept>
#include <string>

namespace rotstar {

// Numeric values are shared with the C API (rotstar_c.h).
enum class Status : int {
    ok = 0,
    domain = 1,
    config = 2,
    convergence = 3,
    verification = 4,
    io = 5,
    regime = 6,
    solver = 7,
};

class Error : public std::runtime_error {
public:
    Error(Status s, const std::string& what, std::string stage = {})
        : std::runtime_error(stage.empty() ? what : "[" + stage + "] " + what),
          status_(s), stage_(std::move(stage)) {}
    Status status() const noexcept { return status_; }
    const std::string& stage() const noexcept { return stage_; }

private:
    Status status_;
    std::string stage_;
};

[[noreturn]] inline void fail(Status s, const std::string& msg, const std::string& stage = {}) {
    throw Error(s, msg, stage);
}

}  // namespace rotstar
