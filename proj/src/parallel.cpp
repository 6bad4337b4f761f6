#include "arw/parallel.hpp"

namespace arw {

int default_workers() noexcept
{
    const auto n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

} // namespace arw
