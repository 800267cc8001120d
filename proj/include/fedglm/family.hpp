#pragma once

#include <string>

#include "fedglm/types.hpp"

namespace fedglm {

/// Exponential-family definitions with the response-validity checks
/// removed, so that unconstrained pseudo-responses are accepted. The
/// saturated and response-only log-likelihood terms are dropped
/// throughout; see deviance_contribution and truncated AIC.
enum class Family { gaussian, soft_binomial, soft_poisson };

Family family_from_string(const std::string& name);
std::string family_name(Family family);

struct FamilySpec {
    Family family;

    double link(double mu) const;
    double inv_link(double eta) const;
    double mu_eta(double eta) const;      // d mu / d eta
    double variance(double mu) const;     // V(mu)
    double mu_init(double y) const;

    /// Per-observation deviance with the saturated term excluded:
    /// gaussian (y-mu)^2, soft_binomial -2[y log mu + (1-y) log(1-mu)],
    /// soft_poisson -2[y log mu - mu]. soft_binomial fitted values are
    /// clamped to [1e-12, 1 - 1e-12].
    double deviance_contribution(double y, double mu) const;

    bool estimates_dispersion() const { return family == Family::gaussian; }
};

FamilySpec make_family(Family family);

} // namespace fedglm
