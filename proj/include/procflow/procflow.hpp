#pragma once

#include "procflow/augment.hpp"
#include "procflow/biaffine.hpp"
#include "procflow/cle.hpp"
#include "procflow/corpus.hpp"
#include "procflow/crf.hpp"
#include "procflow/encoder.hpp"
#include "procflow/fixtures.hpp"
#include "procflow/gradcheck.hpp"
#include "procflow/graph.hpp"
#include "procflow/metrics.hpp"
#include "procflow/model.hpp"
#include "procflow/optim.hpp"
#include "procflow/params.hpp"
#include "procflow/rng.hpp"
#include "procflow/train.hpp"
#include "procflow/types.hpp"
