#pragma once

#include <stdexcept>
#include <string>

namespace sslchrono {

// Runtime error carrying a stable machine-readable category. The CLI prints
// failures as a single "error: <category>: <message>" line on stderr.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

[[noreturn]] inline void raise(const char* category, const std::string& message) {
    throw Error(category, message);
}

[[noreturn]] inline void shape_error(const std::string& message) { raise("shape", message); }
[[noreturn]] inline void value_error(const std::string& message) { raise("value", message); }
[[noreturn]] inline void state_error(const std::string& message) { raise("state", message); }
[[noreturn]] inline void numeric_error(const std::string& message) { raise("numeric", message); }
[[noreturn]] inline void data_error(const std::string& message) { raise("data", message); }
[[noreturn]] inline void config_error(const std::string& message) { raise("config", message); }
[[noreturn]] inline void io_error(const std::string& message) { raise("io", message); }

}  // namespace sslchrono
