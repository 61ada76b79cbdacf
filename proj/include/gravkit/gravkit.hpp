#pragma once

/// Umbrella header: the whole toolkit.
///
/// Data ingestion:    archive.hpp (zip + http), dta.hpp, csv.hpp, table.hpp
/// Model building:    model.hpp
/// Linear algebra:    linalg.hpp
/// Estimators:        ols.hpp, glm.hpp, tobit.hpp (results in fit.hpp)
/// Distributions:     dist.hpp
/// Reporting:         report.hpp
/// Errors:            error.hpp

#include "gravkit/archive.hpp"
#include "gravkit/csv.hpp"
#include "gravkit/dist.hpp"
#include "gravkit/dta.hpp"
#include "gravkit/error.hpp"
#include "gravkit/fit.hpp"
#include "gravkit/fsio.hpp"
#include "gravkit/glm.hpp"
#include "gravkit/linalg.hpp"
#include "gravkit/model.hpp"
#include "gravkit/ols.hpp"
#include "gravkit/report.hpp"
#include "gravkit/table.hpp"
#include "gravkit/tobit.hpp"
