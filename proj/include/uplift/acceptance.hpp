#pragma once

#include <string>
#include <vector>

namespace uplift::acceptance {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

// Runs every criterion whose name contains `filter` (all when empty),
// printing one PASS/FAIL line each as it finishes.
std::vector<CriterionResult> run_all(const std::string& filter = "",
                                     bool verbose = true);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace uplift::acceptance
