#ifndef TEXTUREBIT_ERROR_HPP
#define TEXTUREBIT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace texturebit {

/// Every failure surfaced by the library. what() starts with a short fixed
/// phrase ("bad magic", "shape mismatch", ...) optionally followed by ": detail".
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    Error(const std::string& what, const std::string& detail)
        : std::runtime_error(what + ": " + detail) {}
};

} // namespace texturebit

#endif // TEXTUREBIT_ERROR_HPP
