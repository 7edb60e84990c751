#pragma once

#include "vcc/components.hpp"
#include "vcc/config.hpp"
#include "vcc/error.hpp"
#include "vcc/matrix.hpp"
#include "vcc/rng.hpp"
#include "vcc/selection.hpp"
#include "vcc/seq_tree.hpp"
#include "vcc/transformer.hpp"
#include "vcc/vcc_model.hpp"
#include "vcc/vip_layout.hpp"
