#pragma once

#include "errors.hpp"
#include "image.hpp"
#include "linalg.hpp"
#include "ar_model.hpp"
#include "cns.hpp"
#include "report.hpp"
#include "variational.hpp"
#include "psf.hpp"
#include "ipsf.hpp"
#include "deconv.hpp"
#include "quality.hpp"
#include "synth.hpp"
#include "io.hpp"
#include "pipeline.hpp"
