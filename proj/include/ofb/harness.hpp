#pragma once

#include "ofb/harness/bundled.hpp"
#include "ofb/harness/config.hpp"
#include "ofb/harness/experiment.hpp"
#include "ofb/harness/output.hpp"
