#include "fedglm/family.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fedglm {

Family family_from_string(const std::string& name) {
    if (name == "gaussian") return Family::gaussian;
    if (name == "soft_binomial") return Family::soft_binomial;
    if (name == "soft_poisson") return Family::soft_poisson;
    throw std::invalid_argument("unknown family: " + name);
}

std::string family_name(Family family) {
    switch (family) {
        case Family::gaussian: return "gaussian";
        case Family::soft_binomial: return "soft_binomial";
        case Family::soft_poisson: return "soft_poisson";
    }
    return "?";
}

double FamilySpec::link(double mu) const {
    switch (family) {
        case Family::gaussian: return mu;
        case Family::soft_binomial: return std::log(mu / (1.0 - mu));
        case Family::soft_poisson: return std::log(mu);
    }
    return 0.0;
}

double FamilySpec::inv_link(double eta) const {
    switch (family) {
        case Family::gaussian: return eta;
        case Family::soft_binomial: return 1.0 / (1.0 + std::exp(-eta));
        case Family::soft_poisson: return std::exp(eta);
    }
    return 0.0;
}

double FamilySpec::mu_eta(double eta) const {
    switch (family) {
        case Family::gaussian: return 1.0;
        case Family::soft_binomial: {
            const double mu = inv_link(eta);
            return mu * (1.0 - mu);
        }
        case Family::soft_poisson: return std::exp(eta);
    }
    return 0.0;
}

double FamilySpec::variance(double mu) const {
    switch (family) {
        case Family::gaussian: return 1.0;
        case Family::soft_binomial: return mu * (1.0 - mu);
        case Family::soft_poisson: return mu;
    }
    return 0.0;
}

double FamilySpec::mu_init(double y) const {
    switch (family) {
        case Family::gaussian: return y;
        case Family::soft_binomial:
            // (y*w + 0.5)/(w + 1) with w = 1, clamped so the logit stays finite
            return std::clamp((y + 0.5) / 2.0, 1e-3, 1.0 - 1e-3);
        case Family::soft_poisson: return std::max(y, 0.1);
    }
    return 0.0;
}

double FamilySpec::deviance_contribution(double y, double mu) const {
    switch (family) {
        case Family::gaussian:
            return (y - mu) * (y - mu);
        case Family::soft_binomial: {
            if (mu < 1e-12 || mu > 1.0 - 1e-12) {
                std::fprintf(stderr,
                             "warning: soft_binomial fitted value %g clamped\n", mu);
                mu = std::clamp(mu, 1e-12, 1.0 - 1e-12);
            }
            return -2.0 * (y * std::log(mu) + (1.0 - y) * std::log(1.0 - mu));
        }
        case Family::soft_poisson:
            if (mu <= 0.0)
                throw std::invalid_argument("soft_poisson: fitted value must be positive");
            return -2.0 * (y * std::log(mu) - mu);
    }
    return 0.0;
}

FamilySpec make_family(Family family) { return FamilySpec{family}; }

} // namespace fedglm
