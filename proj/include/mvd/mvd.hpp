#pragma once

#include "mvd/closed_form.hpp"
#include "mvd/csv.hpp"
#include "mvd/discrepancy.hpp"
#include "mvd/kernel.hpp"
#include "mvd/null_approx.hpp"
#include "mvd/rng.hpp"
#include "mvd/simulation.hpp"
#include "mvd/version.hpp"
