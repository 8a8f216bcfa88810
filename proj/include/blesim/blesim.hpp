#pragma once

#include "blesim/bits.hpp"
#include "blesim/chan_select.hpp"
#include "blesim/channel.hpp"
#include "blesim/coded_phy.hpp"
#include "blesim/config_io.hpp"
#include "blesim/dsp.hpp"
#include "blesim/errors.hpp"
#include "blesim/gmsk.hpp"
#include "blesim/harness.hpp"
#include "blesim/iq_frame.hpp"
#include "blesim/ll_packet.hpp"
#include "blesim/phy.hpp"
#include "blesim/rx_chain.hpp"
