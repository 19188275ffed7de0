#pragma once

#include "ybqc/atomic_structure.hpp"
#include "ybqc/band_structure.hpp"
#include "ybqc/circuit.hpp"
#include "ybqc/constants.hpp"
#include "ybqc/dipole_interaction.hpp"
#include "ybqc/errors.hpp"
#include "ybqc/feasibility.hpp"
#include "ybqc/lattice_addressing.hpp"
#include "ybqc/propagator.hpp"
#include "ybqc/protocols.hpp"
#include "ybqc/pulse.hpp"
#include "ybqc/register_state.hpp"
#include "ybqc/three_photon.hpp"
