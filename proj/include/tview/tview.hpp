#pragma once

#include "tview/camera.hpp"
#include "tview/errors.hpp"
#include "tview/estimator.hpp"
#include "tview/evaluation.hpp"
#include "tview/io.hpp"
#include "tview/mathutil.hpp"
#include "tview/parallel.hpp"
#include "tview/pipeline.hpp"
#include "tview/rng.hpp"
#include "tview/simulator.hpp"
#include "tview/tdist.hpp"
#include "tview/triangulation.hpp"
#include "tview/tview_version.hpp"
