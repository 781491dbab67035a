#pragma once

// Umbrella header.
#include "gucrns/common.hpp"
#include "gucrns/mesh.hpp"
#include "gucrns/quadrature.hpp"
#include "gucrns/sparse.hpp"
#include "gucrns/block_system.hpp"
#include "gucrns/spaces.hpp"
#include "gucrns/assembly.hpp"
#include "gucrns/scheme.hpp"
#include "gucrns/verification.hpp"
#include "gucrns/config.hpp"
#include "gucrns/output.hpp"
#include "gucrns/experiments.hpp"
