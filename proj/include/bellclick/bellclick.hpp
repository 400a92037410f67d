#pragma once

#include "bellclick/errors.hpp"
#include "bellclick/field_model.hpp"
#include "bellclick/inequalities.hpp"
#include "bellclick/presets.hpp"
#include "bellclick/stochastic_oracle.hpp"
#include "bellclick/sweep_search.hpp"
