#include "polysle/geometry.hpp"

#include <cmath>
#include <numeric>

namespace polysle {

std::vector<double> PrevertexConfig::rhos() const { return rhos_from_betas(betas, kappa); }

ValidationReport validate_structure(const PrevertexConfig& cfg) {
    ValidationReport rep;
    auto fail = [&rep](std::string msg) {
        rep.ok = false;
        rep.errors.push_back(std::move(msg));
    };

    if (cfg.prevertices.empty()) {
        fail("empty configuration: at least one prevertex is required");
        return rep;
    }
    if (cfg.betas.size() != cfg.prevertices.size())
        fail("betas and prevertices must have equal length");
    if (!(cfg.kappa > 0.0) || !std::isfinite(cfg.kappa)) fail("kappa must be positive and finite");
    if (cfg.basepoint != 0.0) fail("basepoint must be 0");

    for (std::size_t k = 0; k < cfg.prevertices.size(); ++k) {
        const double z = cfg.prevertices[k];
        if (!std::isfinite(z)) fail("prevertex " + std::to_string(k) + " is not finite");
        if (z == 0.0) fail("prevertex " + std::to_string(k) + " equals the basepoint 0");
        if (k > 0 && !(cfg.prevertices[k - 1] < z))
            fail("prevertices must be strictly increasing");
    }
    for (std::size_t k = 0; k < cfg.betas.size(); ++k)
        if (!std::isfinite(cfg.betas[k])) fail("beta " + std::to_string(k) + " is not finite");
    return rep;
}

ValidationReport validate_config(const PrevertexConfig& cfg) {
    ValidationReport rep = validate_structure(cfg);
    auto fail = [&rep](std::string msg) {
        rep.ok = false;
        rep.errors.push_back(std::move(msg));
    };
    if (!rep.ok) return rep;

    if (!(cfg.prevertices.front() < 0.0))
        fail("no prevertex left of 0 (need z_1 < 0 < z_n)");
    if (!(cfg.prevertices.back() > 0.0))
        fail("no prevertex right of 0 (need z_1 < 0 < z_n)");
    if (!rep.ok) return rep;

    // Weight-range and angle-sum conventions are warnings, not errors: the
    // construction extends to arbitrary rho, the image just need not be a
    // planar polygon. beta = -1 (slit tip) is accepted inclusively.
    for (std::size_t k = 0; k < cfg.betas.size(); ++k) {
        const double b = cfg.betas[k];
        if (b < -1.0 || b >= 1.0)
            rep.warnings.push_back("beta " + std::to_string(k) + " = " + std::to_string(b) +
                                   " outside the planar corner range [-1, 1)");
    }
    const double sum = exterior_angle_sum(cfg.betas);
    if (std::abs(sum - 2.0) > 1e-12) {
        const double beta_inf = 2.0 - sum;
        rep.warnings.push_back("exterior angles sum to " + std::to_string(sum) +
                               " (not 2): open polygon with implied corner at infinity, beta = " +
                               std::to_string(beta_inf));
        if (beta_inf > 3.0 || beta_inf < 1.0)
            rep.warnings.push_back(
                "implied corner at infinity outside [1, 3]: the image is a non-planar "
                "polygon and the map need not be injective");
    }
    return rep;
}

std::vector<double> rho_beta_convert(const std::vector<double>& values, double kappa,
                                     RhoBetaDirection direction) {
    if (!(kappa > 0.0)) throw ConfigError("rho/beta conversion requires kappa > 0");
    std::vector<double> out(values.size());
    const double half_kappa = 0.5 * kappa;
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = direction == RhoBetaDirection::BetaToRho ? half_kappa * values[i]
                                                          : values[i] / half_kappa;
    return out;
}

std::vector<double> rhos_from_betas(const std::vector<double>& betas, double kappa) {
    return rho_beta_convert(betas, kappa, RhoBetaDirection::BetaToRho);
}

std::vector<double> betas_from_rhos(const std::vector<double>& rhos, double kappa) {
    return rho_beta_convert(rhos, kappa, RhoBetaDirection::RhoToBeta);
}

double exterior_angle_sum(const std::vector<double>& betas) {
    return std::accumulate(betas.begin(), betas.end(), 0.0);
}

} // namespace polysle
