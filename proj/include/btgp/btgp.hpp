#ifndef BTGP_BTGP_HPP
#define BTGP_BTGP_HPP

#include "btgp/encoding.hpp"
#include "btgp/ensemble.hpp"
#include "btgp/error.hpp"
#include "btgp/gp.hpp"
#include "btgp/kernel.hpp"
#include "btgp/optimize.hpp"
#include "btgp/sros.hpp"

#endif // BTGP_BTGP_HPP
