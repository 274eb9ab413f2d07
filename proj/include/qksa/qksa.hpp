#pragma once

#include "qksa/rng.hpp"
#include "qksa/qcore.hpp"
#include "qksa/metrics.hpp"
#include "qksa/environment.hpp"
#include "qksa/tomography.hpp"
#include "qksa/least.hpp"
#include "qksa/genome.hpp"
#include "qksa/evolve.hpp"
#include "qksa/agent.hpp"
#include "qksa/hypervisor.hpp"
