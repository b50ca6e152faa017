#pragma once

/// Convenience header pulling in the whole library.

#include <distmfa/dataset.hpp>
#include <distmfa/histogram.hpp>
#include <distmfa/io.hpp>
#include <distmfa/mfa.hpp>
#include <distmfa/plots.hpp>
#include <distmfa/quantile_table.hpp>
#include <distmfa/simulate.hpp>
#include <distmfa/svd.hpp>
#include <distmfa/wasserstein.hpp>
