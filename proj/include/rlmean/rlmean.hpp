#pragma once

#include "rlmean/barycenter.hpp"
#include "rlmean/errors.hpp"
#include "rlmean/grassmann.hpp"
#include "rlmean/io.hpp"
#include "rlmean/linalg.hpp"
#include "rlmean/simulation.hpp"
#include "rlmean/stiefel.hpp"
