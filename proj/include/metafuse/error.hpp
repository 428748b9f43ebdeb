#pragma once

#include <stdexcept>
#include <string>

namespace metafuse {

// Structured failure: `where` names the operation (and row/table when known),
// `what()` carries the full "where: message" text.
class Error : public std::runtime_error {
public:
    Error(std::string where, const std::string& message)
        : std::runtime_error(where + ": " + message), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

inline void require(bool cond, const char* where, const std::string& message) {
    if (!cond) throw Error(where, message);
}

}  // namespace metafuse
