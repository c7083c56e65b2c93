#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"

namespace crh {

// Execution options shared by every command.  out_path falls back to the
// config key "out", then to "report.json"; seed overrides the config key
// "seed".  threads is accepted for interface stability and echoed in the
// report; the numeric kernels run serially.
struct RunOptions {
    std::string out_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

// Dispatches one of decompose, crh-test, szego-iterate, bm-check,
// admissibility on a parsed config and writes the JSON report (plus CSV
// siblings where the command produces series data).  Returns the process
// exit code: 0 on success, 2 on invalid input, 3 on numerical failure.
// Diagnostics go to err.
int run_command(const std::string& command, const nlohmann::json& config,
                const RunOptions& options, std::ostream& err);

}  // namespace crh
