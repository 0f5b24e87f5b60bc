#include "aq/errors.hpp"

#include <cstdio>

namespace aq {

void warn(const std::string& message) {
    std::fprintf(stderr, "[warn] %s\n", message.c_str());
}

}  // namespace aq
