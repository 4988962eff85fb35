#ifndef BFC_BFC_HPP
#define BFC_BFC_HPP

#include "bfc/adam.hpp"
#include "bfc/als.hpp"
#include "bfc/container.hpp"
#include "bfc/convert.hpp"
#include "bfc/generators.hpp"
#include "bfc/triplets.hpp"
#include "bfc/version.hpp"

#endif
