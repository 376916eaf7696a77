#pragma once

#include "mfkit/error.hpp"
#include "mfkit/geometry.hpp"
#include "mfkit/net_measure.hpp"
#include "mfkit/prescribed.hpp"
#include "mfkit/ifs.hpp"
#include "mfkit/parallel.hpp"
#include "mfkit/measures.hpp"
#include "mfkit/analysis.hpp"
#include "mfkit/metric.hpp"
#include "mfkit/io.hpp"
#include "mfkit/acceptance.hpp"
