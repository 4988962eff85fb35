#ifndef BFC_VERSION_HPP
#define BFC_VERSION_HPP

#include <string_view>

namespace bfc {

inline constexpr std::string_view library_version = "0.1.0";

}

#endif
