#pragma once

#include "config.hpp"
#include "corpus.hpp"
#include "detector.hpp"
#include "embed.hpp"
#include "error.hpp"
#include "events.hpp"
#include "experiment.hpp"
#include "features.hpp"
#include "market.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "snn.hpp"
#include "synth.hpp"
#include "util.hpp"
