#pragma once

#include "ofb/adp.hpp"
#include "ofb/error.hpp"
#include "ofb/internal_model.hpp"
#include "ofb/lti.hpp"
#include "ofb/matops.hpp"
#include "ofb/riccati.hpp"
