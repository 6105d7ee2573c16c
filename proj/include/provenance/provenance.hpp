#pragma once

#include "benchmark.hpp"
#include "classifier.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "gas.hpp"
#include "image.hpp"
#include "interchange.hpp"
#include "ledger.hpp"
#include "perturb.hpp"
#include "pipeline.hpp"
#include "toy_embed.hpp"
#include "vecstore.hpp"
