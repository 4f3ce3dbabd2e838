#pragma once

#include <string>
#include <vector>

namespace fx42::cli {

/// Batch front end. Subcommands: feller, price-options, price-zcb, calibrate,
/// simulate, hedge-backtest. Returns 0 on success, 2 on validation errors
/// (bad flags, malformed files, inadmissible models), 3 on numerical failure.
int dispatch(const std::vector<std::string>& args);

}  // namespace fx42::cli
