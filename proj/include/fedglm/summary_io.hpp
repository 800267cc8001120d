#pragma once

#include <string>
#include <vector>

#include "fedglm/moments.hpp"

namespace fedglm {

inline constexpr int kSummaryFormatVersion = 1;

std::string summary_to_json(const ProviderSummary& summary);
ProviderSummary summary_from_json(const std::string& text);

void write_summary_file(const std::string& path, const ProviderSummary& summary);
ProviderSummary read_summary_file(const std::string& path);

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Structural and numerical checks on a parsed summary: format version,
/// per-subgroup moment count, the order-1 and pure order-2 identities,
/// positive semidefiniteness of the order-2 block, n >= 2, finite values.
ValidationReport validate_summary(const ProviderSummary& summary);

} // namespace fedglm
