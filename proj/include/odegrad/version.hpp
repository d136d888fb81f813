#ifndef ODEGRAD_VERSION_HPP
#define ODEGRAD_VERSION_HPP

namespace odegrad {
inline constexpr const char* kVersion = "1.0.0";
}

#endif
