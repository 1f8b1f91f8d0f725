#pragma once

#include "netforge/assembler.hpp"
#include "netforge/assembly.hpp"
#include "netforge/balancer.hpp"
#include "netforge/catalog.hpp"
#include "netforge/cloud.hpp"
#include "netforge/configurator.hpp"
#include "netforge/geometry.hpp"
#include "netforge/interaction.hpp"
#include "netforge/linearization.hpp"
#include "netforge/network.hpp"
#include "netforge/network_io.hpp"
#include "netforge/newton.hpp"
