#include "elastica/errors.hpp"

#include <charconv>

namespace elastica {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace elastica
